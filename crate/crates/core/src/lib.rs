//! Student-teacher concept-learning harness.

pub mod authoring;
pub mod corpus;
pub mod dialogue;
pub mod features;
pub mod gainmodel;
pub mod pipeline;
pub mod prompts;
pub mod provider;
pub mod scoring;
pub mod simulate;
pub mod text;
pub mod util;

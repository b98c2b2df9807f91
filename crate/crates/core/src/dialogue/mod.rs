//! Scenario execution and transcripts.

mod config;
mod run;
mod store;
mod transcript;

use thiserror::Error;

pub use config::*;
pub use run::Runner;
pub use store::{list_runs, RunState, RunStore};
pub use transcript::{
    build_student_context, plan, qa_pairs, Event, EventType, RunMeta, SourceRef, Speaker, Step, Transcript,
};

use crate::provider::ProviderError;

#[derive(Debug, Error)]
pub enum DialogueError {
    /// Events completed before the failure are already persisted.
    #[error("run {run_id}: {source}")]
    Provider {
        run_id: String,
        #[source]
        source: ProviderError,
    },
    #[error("invalid scenario setup: {0}")]
    InvalidConfig(String),
    #[error("source transcript is for concept {source_concept}, not {doc}")]
    SourceMismatch { source_concept: String, doc: String },
    #[error("source transcript {0} is incomplete")]
    SourceIncomplete(String),
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("reading context for {0}: {1}")]
    Context(String, std::io::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

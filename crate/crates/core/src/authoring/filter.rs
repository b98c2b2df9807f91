use std::io::Write;
use std::path::Path;

use futures::future::try_join_all;
use serde::{Deserialize, Serialize};

use super::{regenerate_one, AuthoringConfig, AuthoringError, Quiz, QuizQuestion};
use crate::corpus::ContextDocument;
use crate::prompts::{self, PromptSet};
use crate::provider::{CallPurpose, ChatMessage, ChatProvider, ChatRequest};
use crate::scoring::{parse_answer, Letter};

/// One weak-model probe of one question version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterAudit {
    pub concept_id: String,
    pub question_id: String,
    pub attempt: u32,
    pub weak_answer: Option<Letter>,
    pub correct: bool,
}

async fn probe<P: ChatProvider + ?Sized>(
    provider: &P,
    prompts: &PromptSet,
    q: &QuizQuestion,
    weak_model: &str,
    cfg: &AuthoringConfig,
) -> Result<Option<Letter>, AuthoringError> {
    let req = ChatRequest::new(
        weak_model,
        vec![
            ChatMessage::system(prompts.get(prompts::WEAK_PROBE)),
            ChatMessage::user(q.prompt_text()),
        ],
    )
    .sampling(cfg.weak_probe.temperature, cfg.weak_probe.max_tokens)
    .seed(cfg.seed)
    .purpose(CallPurpose::WeakProbe);
    Ok(parse_answer(&provider.chat(&req).await?.text))
}

async fn filter_question<P: ChatProvider + ?Sized>(
    provider: &P,
    prompts: &PromptSet,
    doc: &ContextDocument,
    mut q: QuizQuestion,
    siblings: &[String],
    weak_model: &str,
    strong_model: &str,
    cfg: &AuthoringConfig,
) -> Result<(QuizQuestion, Vec<FilterAudit>), AuthoringError> {
    let max = cfg.max_attempts.max(1);
    let mut audit = Vec::new();
    let mut rejected = Vec::new();
    for attempt in 1..=max {
        let weak_answer = probe(provider, prompts, &q, weak_model, cfg).await?;
        let correct = weak_answer == Some(q.answer_key);
        audit.push(FilterAudit {
            concept_id: doc.id.clone(),
            question_id: q.id.clone(),
            attempt,
            weak_answer,
            correct,
        });
        q.filter_attempts = attempt;
        if !correct {
            q.survived_filter = true;
            break;
        }
        q.survived_filter = false;
        if attempt == max {
            break;
        }
        rejected.push(q.stem.clone());
        // A malformed regeneration counts as a spent attempt; the current
        // version is probed again.
        if let Ok(block) = regenerate_one(provider, prompts, doc, strong_model, q.difficulty, &rejected, siblings, cfg).await? {
            q.replace_with(block);
        }
    }
    Ok((q, audit))
}

/// Probe each question with the weak model and no context; regenerate the
/// ones it gets right, up to `cfg.max_attempts` versions per question.
/// Questions are filtered concurrently; output order matches input order.
/// Regeneration prompts list the other draft stems, sorted, so the result
/// does not depend on question order.
pub async fn adversarial_filter<P: ChatProvider + ?Sized>(
    provider: &P,
    prompts: &PromptSet,
    doc: &ContextDocument,
    quiz: Quiz,
    weak_model: &str,
    strong_model: &str,
    cfg: &AuthoringConfig,
) -> Result<(Quiz, Vec<FilterAudit>), AuthoringError> {
    let siblings: Vec<Vec<String>> = (0..quiz.questions.len())
        .map(|i| {
            let mut v: Vec<String> = quiz
                .questions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| q.stem.clone())
                .collect();
            v.sort();
            v
        })
        .collect();
    let results = try_join_all(
        quiz.questions
            .into_iter()
            .zip(&siblings)
            .map(|(q, sib)| filter_question(provider, prompts, doc, q, sib, weak_model, strong_model, cfg)),
    )
    .await?;
    let mut questions = Vec::with_capacity(results.len());
    let mut audit = Vec::new();
    for (q, a) in results {
        questions.push(q);
        audit.extend(a);
    }
    Ok((
        Quiz {
            concept_id: quiz.concept_id,
            questions,
        },
        audit,
    ))
}

pub fn write_audit(path: &Path, audit: &[FilterAudit]) -> Result<(), AuthoringError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for a in audit {
        serde_json::to_writer(&mut f, a)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

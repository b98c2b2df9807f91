//! Automatable quiz quality checks. Findings are advisory.

use std::collections::BTreeSet;

use serde::Serialize;

use super::Quiz;
use crate::corpus::ContextDocument;
use crate::text::content_words;

pub const MAX_OPTION_LENGTH_RATIO: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LintKind {
    DuplicateStem { first: String },
    AnswerLeakage,
    UnequalOptions { ratio: f64 },
    Ungrounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintFinding {
    pub question_id: String,
    #[serde(flatten)]
    pub kind: LintKind,
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn lint_quiz(quiz: &Quiz, doc: &ContextDocument) -> Vec<LintFinding> {
    let body_words: BTreeSet<String> = content_words(&doc.body).into_iter().collect();
    let mut findings = Vec::new();
    let mut seen: Vec<(String, &str)> = Vec::new();
    for q in &quiz.questions {
        let stem = normalize(&q.stem);
        if let Some((_, first)) = seen.iter().find(|(s, _)| *s == stem) {
            findings.push(LintFinding {
                question_id: q.id.clone(),
                kind: LintKind::DuplicateStem { first: first.to_string() },
            });
        } else {
            seen.push((stem.clone(), &q.id));
        }

        let answer = normalize(q.answer_text());
        if answer.chars().filter(|c| c.is_alphanumeric()).count() >= 3 && stem.contains(&answer) {
            findings.push(LintFinding {
                question_id: q.id.clone(),
                kind: LintKind::AnswerLeakage,
            });
        }

        let lens: Vec<usize> = q.options.iter().map(|o| o.trim().chars().count().max(1)).collect();
        let ratio = *lens.iter().max().unwrap() as f64 / *lens.iter().min().unwrap() as f64;
        if ratio > MAX_OPTION_LENGTH_RATIO {
            findings.push(LintFinding {
                question_id: q.id.clone(),
                kind: LintKind::UnequalOptions { ratio },
            });
        }

        // Image quizzes have no body to ground against.
        if doc.domain.is_text() && !content_words(&q.stem).iter().any(|w| body_words.contains(w)) {
            findings.push(LintFinding {
                question_id: q.id.clone(),
                kind: LintKind::Ungrounded,
            });
        }
    }
    findings
}

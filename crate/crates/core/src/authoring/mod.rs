//! Lessons, tiered quizzes and the adversarial question filter.

pub mod filter;
pub mod format;
pub mod lint;

use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

use crate::corpus::{ContextDocument, Domain};
use crate::dialogue::Sampling;
use crate::prompts::{self, PromptSet};
use crate::provider::{CallPurpose, ChatMessage, ChatProvider, ChatRequest, ProviderError};
use crate::scoring::Letter;
use crate::util::Timestamps;

pub use filter::{adversarial_filter, write_audit, FilterAudit};
pub use format::{parse_blocks, render_block, QuestionBlock};
pub use lint::{lint_quiz, LintFinding, LintKind};

pub const MAX_FILTER_ATTEMPTS: u32 = 5;
pub const TEXT_QUIZ_LEN: usize = 9;
pub const IMAGE_QUIZ_LEN: usize = 5;
pub const PER_TIER: usize = 3;

#[derive(Debug, Error)]
pub enum AuthoringError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("lesson for {0} came back blank")]
    EmptyLesson(String),
    #[error("could not parse quiz for {concept_id}: {detail}")]
    QuizParse { concept_id: String, detail: String },
    #[error("invalid quiz for {concept_id}: {detail}")]
    InvalidQuiz { concept_id: String, detail: String },
    #[error("reading context for {0}: {1}")]
    Context(String, std::io::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    MiddleSchool,
    College,
    Graduate,
    Untiered,
}

impl Difficulty {
    pub const TIERS: [Difficulty; 3] = [Difficulty::MiddleSchool, Difficulty::College, Difficulty::Graduate];

    pub fn label(self) -> &'static str {
        match self {
            Difficulty::MiddleSchool => "Middle-School",
            Difficulty::College => "College",
            Difficulty::Graduate => "Graduate",
            Difficulty::Untiered => "untiered",
        }
    }

    /// Tier for the `i`-th question of a quiz on `domain`.
    pub fn for_position(domain: Domain, i: usize) -> Difficulty {
        if domain.is_text() {
            Difficulty::TIERS[(i / PER_TIER).min(2)]
        } else {
            Difficulty::Untiered
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lesson {
    pub concept_id: String,
    pub provider_model: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizQuestion {
    pub id: String,
    pub difficulty: Difficulty,
    pub stem: String,
    pub options: [String; 4],
    pub answer_key: Letter,
    pub filter_attempts: u32,
    pub survived_filter: bool,
}

impl QuizQuestion {
    pub fn from_block(id: impl Into<String>, difficulty: Difficulty, b: QuestionBlock) -> Self {
        QuizQuestion {
            id: id.into(),
            difficulty,
            stem: b.stem,
            options: b.options,
            answer_key: b.answer_key,
            filter_attempts: 1,
            survived_filter: false,
        }
    }

    /// Stem and lettered options, as shown to a model answering the question.
    pub fn prompt_text(&self) -> String {
        let mut s = format!("Question: {}\n", self.stem);
        for (l, o) in Letter::ALL.iter().zip(&self.options) {
            s.push_str(&format!("{l}) {o}\n"));
        }
        s.push_str("Answer:");
        s
    }

    pub fn answer_text(&self) -> &str {
        &self.options[self.answer_key.index()]
    }

    fn replace_with(&mut self, b: QuestionBlock) {
        self.stem = b.stem;
        self.options = b.options;
        self.answer_key = b.answer_key;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quiz {
    pub concept_id: String,
    pub questions: Vec<QuizQuestion>,
}

pub fn expected_quiz_len(domain: Domain) -> usize {
    if domain.is_text() {
        TEXT_QUIZ_LEN
    } else {
        IMAGE_QUIZ_LEN
    }
}

impl Quiz {
    /// Count, tier and per-question structural checks.
    pub fn check(&self, domain: Domain) -> Result<(), String> {
        let want = expected_quiz_len(domain);
        if self.questions.len() != want {
            return Err(format!("expected {want} questions, found {}", self.questions.len()));
        }
        for (i, q) in self.questions.iter().enumerate() {
            let tier = Difficulty::for_position(domain, i);
            if q.difficulty != tier {
                return Err(format!("question {} should be {tier}, is {}", q.id, q.difficulty));
            }
            if !(1..=MAX_FILTER_ATTEMPTS).contains(&q.filter_attempts) {
                return Err(format!("question {} has filter_attempts {}", q.id, q.filter_attempts));
            }
            for a in 0..4 {
                for b in (a + 1)..4 {
                    if q.options[a] == q.options[b] {
                        return Err(format!("question {} repeats an option", q.id));
                    }
                }
            }
        }
        let mut ids: Vec<&str> = self.questions.iter().map(|q| q.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.questions.len() {
            return Err("duplicate question ids".into());
        }
        Ok(())
    }
}

/// Sampling and timestamp settings for authoring calls.
#[derive(Debug, Clone)]
pub struct AuthoringConfig {
    pub lesson: Sampling,
    pub quiz: Sampling,
    pub regenerate: Sampling,
    pub weak_probe: Sampling,
    pub max_attempts: u32,
    pub seed: Option<i64>,
    pub timestamps: Timestamps,
}

impl Default for AuthoringConfig {
    fn default() -> Self {
        AuthoringConfig {
            lesson: Sampling::new(0.7, 1024),
            quiz: Sampling::new(0.7, 2048),
            regenerate: Sampling::new(0.7, 512),
            weak_probe: Sampling::new(0.0, 10),
            max_attempts: MAX_FILTER_ATTEMPTS,
            seed: None,
            timestamps: Timestamps::Wall,
        }
    }
}

fn context(doc: &ContextDocument) -> Result<ChatMessage, AuthoringError> {
    prompts::context_message(doc).map_err(|e| AuthoringError::Context(doc.id.clone(), e))
}

pub async fn generate_lesson<P: ChatProvider + ?Sized>(
    provider: &P,
    prompts: &PromptSet,
    doc: &ContextDocument,
    lesson_model: &str,
    cfg: &AuthoringConfig,
) -> Result<Lesson, AuthoringError> {
    let system = prompts.render(prompts::LESSON, &[("domain_focus", prompts::domain_focus(doc.domain))]);
    let req = ChatRequest::new(lesson_model, vec![ChatMessage::system(system), context(doc)?])
        .sampling(cfg.lesson.temperature, cfg.lesson.max_tokens)
        .seed(cfg.seed)
        .purpose(CallPurpose::Lesson);
    let text = provider.chat(&req).await?.text;
    if text.trim().is_empty() {
        return Err(AuthoringError::EmptyLesson(doc.id.clone()));
    }
    Ok(Lesson {
        concept_id: doc.id.clone(),
        provider_model: lesson_model.to_string(),
        text,
        created_at: cfg.timestamps.at(0),
    })
}

pub fn question_id(concept_id: &str, i: usize) -> String {
    format!("{concept_id}-q{}", i + 1)
}

/// Ask the strong model for one replacement question of `tier`.
pub(crate) async fn regenerate_one<P: ChatProvider + ?Sized>(
    provider: &P,
    prompts: &PromptSet,
    doc: &ContextDocument,
    model: &str,
    tier: Difficulty,
    rejected: &[String],
    existing: &[String],
    cfg: &AuthoringConfig,
) -> Result<Result<QuestionBlock, String>, AuthoringError> {
    let bullets = |items: &[String], mark: &str| {
        if items.is_empty() {
            "(none)".to_string()
        } else {
            items.iter().map(|s| format!("{mark} {s}")).collect::<Vec<_>>().join("\n")
        }
    };
    let rejected_list = bullets(rejected, "-");
    let existing_list = bullets(existing, "*");
    let system = prompts.render(
        prompts::QUIZ_REGENERATE,
        &[
            ("tier", tier.label()),
            ("rejected", &rejected_list),
            ("existing", &existing_list),
            ("format", format::FORMAT_SPEC),
        ],
    );
    let req = ChatRequest::new(model, vec![ChatMessage::system(system), context(doc)?])
        .sampling(cfg.regenerate.temperature, cfg.regenerate.max_tokens)
        .seed(cfg.seed)
        .purpose(CallPurpose::QuizRegenerate);
    let text = provider.chat(&req).await?.text;
    Ok(parse_blocks(&text)
        .into_iter()
        .next()
        .unwrap_or_else(|| Err("no question block".into())))
}

/// Draft quiz: one generation call, a full re-ask if the block count is
/// wrong, and one single-question re-ask per malformed block.
pub async fn generate_quiz<P: ChatProvider + ?Sized>(
    provider: &P,
    prompts: &PromptSet,
    doc: &ContextDocument,
    strong_model: &str,
    cfg: &AuthoringConfig,
) -> Result<Quiz, AuthoringError> {
    let count = expected_quiz_len(doc.domain);
    let template = if doc.domain.is_text() {
        prompts::QUIZ_GENERATE
    } else {
        prompts::QUIZ_GENERATE_IMAGE
    };
    let system = prompts.render(template, &[("count", &count.to_string()), ("format", format::FORMAT_SPEC)]);
    let req = ChatRequest::new(strong_model, vec![ChatMessage::system(system), context(doc)?])
        .sampling(cfg.quiz.temperature, cfg.quiz.max_tokens)
        .seed(cfg.seed)
        .purpose(CallPurpose::QuizGenerate);

    let mut blocks = parse_blocks(&provider.chat(&req).await?.text);
    if blocks.len() != count {
        debug!(concept = %doc.id, got = blocks.len(), "quiz block count wrong; re-asking");
        blocks = parse_blocks(&provider.chat(&req).await?.text);
        if blocks.len() != count {
            return Err(AuthoringError::QuizParse {
                concept_id: doc.id.clone(),
                detail: format!("expected {count} question blocks, got {}", blocks.len()),
            });
        }
    }

    let mut questions = Vec::with_capacity(count);
    for (i, block) in blocks.into_iter().enumerate() {
        let tier = Difficulty::for_position(doc.domain, i);
        let block = match block {
            Ok(b) => b,
            Err(first) => {
                debug!(concept = %doc.id, index = i, error = %first, "malformed question; re-asking");
                regenerate_one(provider, prompts, doc, strong_model, tier, &[], &[], cfg)
                    .await?
                    .map_err(|detail| AuthoringError::QuizParse {
                        concept_id: doc.id.clone(),
                        detail: format!("question {}: {detail}", i + 1),
                    })?
            }
        };
        questions.push(QuizQuestion::from_block(question_id(&doc.id, i), tier, block));
    }
    Ok(Quiz {
        concept_id: doc.id.clone(),
        questions,
    })
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), AuthoringError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, s)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_quiz(path: &Path) -> Result<Quiz, AuthoringError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn load_lesson(path: &Path) -> Result<Lesson, AuthoringError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::provider::{DefaultReply, Matcher, Reply, ScriptEntry, ScriptedProvider};
    use chrono::NaiveDate;

    pub fn doc() -> ContextDocument {
        ContextDocument::text(
            "song-1",
            Domain::SongLyrics,
            "Hold On",
            NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(),
            "The singer walks along the river at midnight. She remembers the summer festival.",
        )
    }

    pub fn block(i: usize) -> String {
        render_block(
            &format!("Where does the singer walk in verse {i}?"),
            &[
                format!("river {i}"),
                format!("mountain {i}"),
                format!("desert {i}"),
                format!("forest {i}"),
            ],
            Letter::A,
        )
    }

    pub fn quiz_text(n: usize) -> String {
        (0..n).map(block).collect()
    }

    #[tokio::test]
    async fn lesson_text_and_model_recorded() {
        let p = ScriptedProvider::constant("LESSON-TEXT");
        let cfg = AuthoringConfig::default();
        let l = generate_lesson(&p, &PromptSet::default(), &doc(), "weak-model", &cfg).await.unwrap();
        assert_eq!(l.text, "LESSON-TEXT");
        assert_eq!(l.provider_model, "weak-model");
        let req = &p.requests()[0];
        assert_eq!(req.purpose, CallPurpose::Lesson);
        assert!(req.full_text().contains(&doc().body));
    }

    #[tokio::test]
    async fn blank_lesson_is_an_error() {
        let p = ScriptedProvider::constant("   ");
        let r = generate_lesson(&p, &PromptSet::default(), &doc(), "m", &AuthoringConfig::default()).await;
        assert!(matches!(r, Err(AuthoringError::EmptyLesson(_))));
    }

    #[tokio::test]
    async fn image_lesson_carries_image_part() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cat.jpg");
        std::fs::write(&path, [0xffu8, 0xd8, 0xff]).unwrap();
        let img = ContextDocument::image("img-1", "A cat", NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), &path);
        let p = ScriptedProvider::constant("lesson");
        generate_lesson(&p, &PromptSet::default(), &img, "vlm", &AuthoringConfig::default()).await.unwrap();
        let req = &p.requests()[0];
        assert!(req.has_image());
        assert!(req.wire_string().contains("data:image/jpeg;base64,/9j/"));
    }

    #[tokio::test]
    async fn nine_blocks_give_three_tiers() {
        let p = ScriptedProvider::constant(quiz_text(9));
        let q = generate_quiz(&p, &PromptSet::default(), &doc(), "strong", &AuthoringConfig::default())
            .await
            .unwrap();
        q.check(Domain::SongLyrics).unwrap();
        let tiers: Vec<Difficulty> = q.questions.iter().map(|q| q.difficulty).collect();
        assert_eq!(&tiers[..3], &[Difficulty::MiddleSchool; 3]);
        assert_eq!(&tiers[3..6], &[Difficulty::College; 3]);
        assert_eq!(&tiers[6..], &[Difficulty::Graduate; 3]);
        assert_eq!(q.questions[0].id, "song-1-q1");
        assert_eq!(p.request_count(), 1);
    }

    #[tokio::test]
    async fn image_quiz_is_five_untiered() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        std::fs::write(&path, b"png").unwrap();
        let img = ContextDocument::image("img-1", "A cat", NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), &path);
        let p = ScriptedProvider::constant(quiz_text(5));
        let q = generate_quiz(&p, &PromptSet::default(), &img, "vlm", &AuthoringConfig::default())
            .await
            .unwrap();
        q.check(Domain::Images).unwrap();
        assert!(q.questions.iter().all(|q| q.difficulty == Difficulty::Untiered));
        assert!(p.requests()[0].system_text().contains("exactly 5"));
    }

    #[tokio::test]
    async fn eight_blocks_twice_is_parse_error() {
        let p = ScriptedProvider::constant(quiz_text(8));
        let r = generate_quiz(&p, &PromptSet::default(), &doc(), "strong", &AuthoringConfig::default()).await;
        assert!(matches!(r, Err(AuthoringError::QuizParse { .. })));
        assert_eq!(p.request_count(), 2);
    }

    #[tokio::test]
    async fn eight_then_nine_recovers() {
        let p = ScriptedProvider::new(
            vec![
                ScriptEntry::once(Matcher::Any, Reply::text(quiz_text(8))),
                ScriptEntry::once(Matcher::Any, Reply::text(quiz_text(9))),
            ],
            DefaultReply::None,
        );
        let q = generate_quiz(&p, &PromptSet::default(), &doc(), "strong", &AuthoringConfig::default())
            .await
            .unwrap();
        assert_eq!(q.questions.len(), 9);
    }

    #[tokio::test]
    async fn malformed_item_is_reasked_singly() {
        let mut text = quiz_text(9);
        text = text.replacen("D) forest 4\n", "", 1);
        let p = ScriptedProvider::new(
            vec![
                ScriptEntry::once(Matcher::Purpose(CallPurpose::QuizGenerate), Reply::text(text)),
                ScriptEntry::once(Matcher::Purpose(CallPurpose::QuizRegenerate), Reply::text(block(40))),
            ],
            DefaultReply::None,
        );
        let q = generate_quiz(&p, &PromptSet::default(), &doc(), "strong", &AuthoringConfig::default())
            .await
            .unwrap();
        assert_eq!(q.questions[4].stem, "Where does the singer walk in verse 40?");
        assert_eq!(q.questions[4].difficulty, Difficulty::College);
        let regen = &p.requests()[1];
        assert!(regen.system_text().contains("College"));
    }

    #[tokio::test]
    async fn malformed_reask_failure_is_parse_error() {
        let text = quiz_text(9).replacen("ANSWER: A\n", "", 1);
        let p = ScriptedProvider::new(
            vec![ScriptEntry::once(Matcher::Purpose(CallPurpose::QuizGenerate), Reply::text(text))],
            DefaultReply::Fixed(Reply::text("garbage")),
        );
        let r = generate_quiz(&p, &PromptSet::default(), &doc(), "strong", &AuthoringConfig::default()).await;
        assert!(matches!(r, Err(AuthoringError::QuizParse { .. })));
    }

    #[test]
    fn quiz_json_round_trip() {
        let q = Quiz {
            concept_id: "c".into(),
            questions: vec![QuizQuestion::from_block(
                "c-q1",
                Difficulty::College,
                parse_blocks(&block(1)).remove(0).unwrap(),
            )],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q/c.json");
        save_json(&q, &path).unwrap();
        assert_eq!(load_quiz(&path).unwrap(), q);
        let raw = std::fs::read_to_string(&path).unwrap();
        assert!(raw.contains("\"difficulty\": \"college\""));
        assert!(raw.contains("\"answer_key\": \"A\""));
    }
}

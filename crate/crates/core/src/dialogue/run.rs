use std::path::PathBuf;

use futures::future::try_join_all;
use tracing::debug;

use super::config::{Scenario, ScenarioConfig, SummaryMode};
use super::store::RunStore;
use super::transcript::{build_student_context, plan, qa_pairs, Event, EventType, RunMeta, SourceRef, Speaker, Step, Transcript};
use super::DialogueError;
use crate::authoring::{Lesson, Quiz};
use crate::corpus::ContextDocument;
use crate::prompts::{self, PromptSet, KNOWLEDGE_HEADER};
use crate::provider::{CallPurpose, ChatMessage, ChatProvider, ChatRequest, ContentPart};
use crate::scoring::{score_quiz, QuestionRecord};
use crate::util::Timestamps;

/// Executes scenarios against one provider.
pub struct Runner<'a, P: ChatProvider + ?Sized> {
    pub provider: &'a P,
    pub prompts: &'a PromptSet,
    pub timestamps: Timestamps,
    /// Transcript root; `None` keeps runs in memory only.
    pub store_root: Option<PathBuf>,
}

/// What the teacher sees: the context block and, for images, the picture.
struct TeacherView {
    block: String,
    image: Option<ContentPart>,
}

impl TeacherView {
    fn load(doc: &ContextDocument) -> Result<Self, DialogueError> {
        let image = match &doc.image_path {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| DialogueError::Context(doc.id.clone(), e))?;
                Some(ContentPart::image_from_bytes(prompts::image_media_type(p), &bytes))
            }
            None => None,
        };
        Ok(TeacherView {
            block: prompts::context_block(doc),
            image,
        })
    }

    fn messages(&self, system: String) -> Vec<ChatMessage> {
        let mut m = vec![ChatMessage::system(system)];
        if let Some(img) = &self.image {
            m.push(ChatMessage::user("The image you are teaching about:").with_part(img.clone()));
        }
        m
    }
}

struct Ctx<'r> {
    cfg: &'r ScenarioConfig,
    meta: &'r RunMeta,
    doc: &'r ContextDocument,
    quiz: &'r Quiz,
    lesson: Option<&'r str>,
    store: Option<RunStore>,
    events: Vec<Event>,
    total: usize,
    teacher: Option<TeacherView>,
}

fn knowledge(context: &str) -> String {
    if context.is_empty() {
        format!("{KNOWLEDGE_HEADER}\n(nothing yet)")
    } else {
        format!("{KNOWLEDGE_HEADER}\n{context}")
    }
}

impl<'a, P: ChatProvider + ?Sized> Runner<'a, P> {
    pub fn new(provider: &'a P, prompts: &'a PromptSet) -> Self {
        Runner {
            provider,
            prompts,
            timestamps: Timestamps::Wall,
            store_root: None,
        }
    }

    pub fn timestamps(mut self, ts: Timestamps) -> Self {
        self.timestamps = ts;
        self
    }

    pub fn store_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.store_root = Some(root.into());
        self
    }

    /// Run a static, dynamic or teacher-reference scenario. With a store
    /// root, completed events are persisted as they happen and a rerun
    /// resumes after the last completed event.
    pub async fn run_scenario(
        &self,
        cfg: &ScenarioConfig,
        doc: &ContextDocument,
        quiz: &Quiz,
        lesson: Option<&Lesson>,
    ) -> Result<Transcript, DialogueError> {
        if cfg.scenario == Scenario::BorrowedTranscript {
            return Err(DialogueError::InvalidConfig("borrowed runs need a source transcript".into()));
        }
        if cfg.scenario.uses_lesson() != lesson.is_some() {
            return Err(DialogueError::InvalidConfig(format!(
                "scenario {} {} a lesson",
                cfg.scenario,
                if cfg.scenario.uses_lesson() { "requires" } else { "does not take" }
            )));
        }
        let meta = RunMeta {
            run_id: cfg.run_id(&doc.id),
            concept_id: doc.id.clone(),
            domain: doc.domain,
            config: cfg.clone(),
            source: None,
        };
        let needs_teacher = cfg.effective_rounds() > 0 || cfg.scenario == Scenario::TeacherReference;
        let teacher = needs_teacher.then(|| TeacherView::load(doc)).transpose()?;
        self.execute(&meta, doc, quiz, lesson.map(|l| l.text.as_str()), teacher, None)
            .await
    }

    /// Evaluate `cfg.student_model` with another run's dialogue as its context.
    /// Generates no dialogue; one quiz evaluation at the source's final round.
    pub async fn run_borrowed(
        &self,
        cfg: &ScenarioConfig,
        doc: &ContextDocument,
        quiz: &Quiz,
        source: &Transcript,
    ) -> Result<Transcript, DialogueError> {
        if cfg.scenario != Scenario::BorrowedTranscript {
            return Err(DialogueError::InvalidConfig("run_borrowed needs the borrowed scenario".into()));
        }
        if source.concept_id() != doc.id {
            return Err(DialogueError::SourceMismatch {
                source_concept: source.concept_id().to_string(),
                doc: doc.id.clone(),
            });
        }
        if !source.is_complete() {
            return Err(DialogueError::SourceIncomplete(source.run_id().to_string()));
        }
        let src = SourceRef {
            run_id: source.run_id().to_string(),
            scenario: source.config().scenario,
            student_model: source.config().eval_model().to_string(),
            teacher_model: source.config().teacher_model.clone(),
            has_lesson: source.lesson().is_some(),
            final_round: source.completed_rounds(),
        };
        let mut cfg = cfg.clone();
        cfg.borrowed_from = Some(src.run_id.clone());
        let base = cfg.run_id(&doc.id);
        let tail = src.run_id.strip_prefix(&format!("{}__", crate::util::sanitize_component(&doc.id))).unwrap_or(&src.run_id);
        let meta = RunMeta {
            run_id: format!("{base}__from__{tail}"),
            concept_id: doc.id.clone(),
            domain: doc.domain,
            config: cfg,
            source: Some(src),
        };
        self.execute(&meta, doc, quiz, source.lesson(), None, Some(&source.events))
            .await
    }

    async fn execute(
        &self,
        meta: &RunMeta,
        doc: &ContextDocument,
        quiz: &Quiz,
        lesson: Option<&str>,
        teacher: Option<TeacherView>,
        borrowed: Option<&[Event]>,
    ) -> Result<Transcript, DialogueError> {
        if quiz.questions.is_empty() {
            return Err(DialogueError::InvalidConfig(format!("quiz for {} is empty", doc.id)));
        }
        if quiz.concept_id != doc.id {
            return Err(DialogueError::InvalidConfig(format!(
                "quiz {} does not belong to {}",
                quiz.concept_id, doc.id
            )));
        }
        let steps = plan(&meta.config, meta.source.as_ref().map(|s| (s.has_lesson, s.final_round)));
        let store = self.store_root.as_ref().map(|r| RunStore::new(r, &meta.run_id));
        let events = match &store {
            Some(s) => s.open(meta)?,
            None => Vec::new(),
        };
        if events.len() > steps.len() || steps.iter().zip(&events).any(|(s, e)| !s.matches(e)) {
            return Err(DialogueError::Resume(format!("{}: stored events do not follow the plan", meta.run_id)));
        }
        if !events.is_empty() {
            debug!(run = %meta.run_id, done = events.len(), of = steps.len(), "resuming");
        }
        let mut ctx = Ctx {
            cfg: &meta.config,
            meta,
            doc,
            quiz,
            lesson,
            store,
            total: steps.len(),
            events,
            teacher,
        };
        for step in steps[ctx.events.len()..].iter().copied() {
            let event = match step {
                Step::Lesson => self.event(&ctx, step, Speaker::Teacher, ctx.lesson.unwrap_or_default().to_string()),
                Step::Question(r) => {
                    let text = self.student_question(&ctx, r).await?;
                    self.event(&ctx, step, Speaker::Student, text)
                }
                Step::Answer(r) => {
                    let text = self.teacher_answer(&ctx, r).await?;
                    self.event(&ctx, step, Speaker::Teacher, text)
                }
                Step::Summary(r) => {
                    let text = self.summarize(&ctx, r).await?;
                    self.event(&ctx, step, Speaker::Student, text)
                }
                Step::Eval(_) => {
                    let context = match borrowed {
                        Some(src) => build_student_context(src, SummaryMode::Concat),
                        None => build_student_context(&ctx.events, ctx.cfg.summary_mode),
                    };
                    let per_question = self.evaluate(&ctx, &context).await?;
                    let mut e = self.event(
                        &ctx,
                        step,
                        if ctx.cfg.scenario == Scenario::TeacherReference { Speaker::Teacher } else { Speaker::Student },
                        String::new(),
                    );
                    e.content = None;
                    e.accuracy = Some(score_quiz(&per_question).expect("quiz is non-empty"));
                    e.per_question = Some(per_question);
                    e
                }
            };
            ctx.events.push(event);
            if let Some(s) = &ctx.store {
                let n = ctx.events.len();
                s.append(ctx.events.last().unwrap(), n, n == ctx.total)?;
            }
        }
        if let Some(s) = &ctx.store {
            if ctx.total == 0 {
                s.write_state(&super::store::RunState { completed_events: 0, last_event: String::new(), done: true })?;
            }
        }
        Ok(Transcript {
            meta: meta.clone(),
            events: ctx.events,
        })
    }

    fn event(&self, ctx: &Ctx<'_>, step: Step, role: Speaker, content: String) -> Event {
        Event {
            run_id: ctx.meta.run_id.clone(),
            concept_id: ctx.meta.concept_id.clone(),
            scenario: ctx.cfg.scenario,
            seed: ctx.cfg.seed,
            round: step.round(),
            event_type: step.event_type(),
            role: Some(role),
            content: Some(content),
            accuracy: None,
            per_question: None,
            ts: self.timestamps.rfc3339(ctx.events.len() as u64),
        }
    }

    async fn chat(&self, req: ChatRequest, run_id: &str) -> Result<String, DialogueError> {
        self.provider
            .chat(&req)
            .await
            .map(|r| r.text)
            .map_err(|source| DialogueError::Provider {
                run_id: run_id.to_string(),
                source,
            })
    }

    async fn student_question(&self, ctx: &Ctx<'_>, round: u32) -> Result<String, DialogueError> {
        let context = build_student_context(&ctx.events, ctx.cfg.summary_mode);
        let asked: Vec<String> = ctx
            .events
            .iter()
            .filter(|e| e.event_type == EventType::StudentQuestion)
            .map(|e| format!("- {}", e.text()))
            .collect();
        let asked = if asked.is_empty() { "(none)".to_string() } else { asked.join("\n") };
        let system = self.prompts.render(
            prompts::STUDENT_QUESTION,
            &[
                ("domain_focus", prompts::domain_focus(ctx.doc.domain)),
                ("knowledge", &knowledge(&context)),
                ("asked", &asked),
            ],
        );
        let req = ChatRequest::new(
            ctx.cfg.student_model.clone(),
            vec![
                ChatMessage::system(system),
                ChatMessage::user(format!("Round {round}: ask your next question.")),
            ],
        )
        .sampling(ctx.cfg.student_question.temperature, ctx.cfg.student_question.max_tokens)
        .seed(ctx.cfg.wire_seed())
        .purpose(CallPurpose::StudentQuestion);
        self.chat(req, &ctx.meta.run_id).await
    }

    async fn teacher_answer(&self, ctx: &Ctx<'_>, round: u32) -> Result<String, DialogueError> {
        let view = ctx.teacher.as_ref().expect("teacher view loaded for dynamic runs");
        let history = qa_pairs(&ctx.events);
        let history = if history.is_empty() { "(this is the first question)".to_string() } else { history };
        let system = self.prompts.render(
            prompts::TEACHER_ANSWER,
            &[("context", &view.block), ("history", &history)],
        );
        let question = ctx
            .events
            .iter()
            .rev()
            .find(|e| e.event_type == EventType::StudentQuestion && e.round == round)
            .map(|e| e.text().to_string())
            .unwrap_or_default();
        let mut messages = view.messages(system);
        messages.push(ChatMessage::user(question));
        let req = ChatRequest::new(ctx.cfg.teacher_model.clone(), messages)
            .sampling(ctx.cfg.teacher_answer.temperature, ctx.cfg.teacher_answer.max_tokens)
            .seed(ctx.cfg.wire_seed())
            .purpose(CallPurpose::TeacherAnswer);
        self.chat(req, &ctx.meta.run_id).await
    }

    async fn summarize(&self, ctx: &Ctx<'_>, round: u32) -> Result<String, DialogueError> {
        let previous = ctx
            .events
            .iter()
            .rev()
            .find(|e| e.event_type == EventType::Summary)
            .map(|e| e.text().to_string())
            .unwrap_or_else(|| "(none)".into());
        let q = ctx.events.iter().find(|e| e.event_type == EventType::StudentQuestion && e.round == round);
        let a = ctx.events.iter().find(|e| e.event_type == EventType::TeacherAnswer && e.round == round);
        let user = format!(
            "Previous notes:\n{previous}\n\nLatest exchange:\nQ: {}\nA: {}",
            q.map_or("", |e| e.text()),
            a.map_or("", |e| e.text())
        );
        let req = ChatRequest::new(
            ctx.cfg.student_model.clone(),
            vec![
                ChatMessage::system(self.prompts.get(prompts::STUDENT_SUMMARIZE)),
                ChatMessage::user(user),
            ],
        )
        .sampling(ctx.cfg.summary.temperature, ctx.cfg.summary.max_tokens)
        .seed(ctx.cfg.wire_seed())
        .purpose(CallPurpose::StudentSummary);
        self.chat(req, &ctx.meta.run_id).await
    }

    /// One fresh exchange per question; all questions are asked concurrently.
    async fn evaluate(&self, ctx: &Ctx<'_>, context: &str) -> Result<Vec<QuestionRecord>, DialogueError> {
        let (model, base, purpose) = if ctx.cfg.scenario == Scenario::TeacherReference {
            let view = ctx.teacher.as_ref().expect("teacher view loaded for reference runs");
            let system = self.prompts.render(prompts::EVAL_TEACHER, &[("context", &view.block)]);
            (ctx.cfg.teacher_model.clone(), view.messages(system), CallPurpose::TeacherQuiz)
        } else {
            let system = if context.is_empty() {
                self.prompts.get(prompts::EVAL_STUDENT_WO_LESSON).to_string()
            } else {
                self.prompts
                    .render(prompts::EVAL_STUDENT_W_CONTEXT, &[("knowledge", &knowledge(context))])
            };
            (ctx.cfg.student_model.clone(), vec![ChatMessage::system(system)], CallPurpose::StudentQuiz)
        };
        let calls = ctx.quiz.questions.iter().map(|q| {
            let mut messages = base.clone();
            messages.push(ChatMessage::user(q.prompt_text()));
            let req = ChatRequest::new(model.clone(), messages)
                .sampling(ctx.cfg.quiz_eval.temperature, ctx.cfg.quiz_eval.max_tokens)
                .seed(ctx.cfg.wire_seed())
                .purpose(purpose);
            async move {
                let raw = self.chat(req, &ctx.meta.run_id).await?;
                Ok::<_, DialogueError>(QuestionRecord::grade(q.id.clone(), raw, q.answer_key))
            }
        });
        try_join_all(calls).await
    }
}

use serde::{Deserialize, Serialize};

use super::config::{Scenario, ScenarioConfig, SummaryMode};
use crate::corpus::Domain;
use crate::scoring::{EvaluationRecord, QuestionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    LessonShown,
    StudentQuestion,
    TeacherAnswer,
    Summary,
    QuizEval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Student,
    Teacher,
}

/// One transcript line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub run_id: String,
    pub concept_id: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub round: u32,
    pub event_type: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Speaker>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_question: Option<Vec<QuestionRecord>>,
    pub ts: String,
}

impl Event {
    pub fn text(&self) -> &str {
        self.content.as_deref().unwrap_or("")
    }
}

/// What one event in a run is expected to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Lesson,
    Question(u32),
    Answer(u32),
    Summary(u32),
    Eval(u32),
}

impl Step {
    pub fn event_type(self) -> EventType {
        match self {
            Step::Lesson => EventType::LessonShown,
            Step::Question(_) => EventType::StudentQuestion,
            Step::Answer(_) => EventType::TeacherAnswer,
            Step::Summary(_) => EventType::Summary,
            Step::Eval(_) => EventType::QuizEval,
        }
    }

    pub fn round(self) -> u32 {
        match self {
            Step::Lesson => 0,
            Step::Question(r) | Step::Answer(r) | Step::Summary(r) | Step::Eval(r) => r,
        }
    }

    pub fn matches(self, e: &Event) -> bool {
        e.event_type == self.event_type() && e.round == self.round()
    }
}

/// Event sequence a completed run must have. `borrowed_round` is the
/// source's final round for borrowed runs.
pub fn plan(cfg: &ScenarioConfig, borrowed: Option<(bool, u32)>) -> Vec<Step> {
    let mut steps = Vec::new();
    if let (Scenario::BorrowedTranscript, Some((source_lesson, round))) = (cfg.scenario, borrowed) {
        if source_lesson {
            steps.push(Step::Lesson);
        }
        steps.push(Step::Eval(round));
        return steps;
    }
    if cfg.scenario.uses_lesson() {
        steps.push(Step::Lesson);
    }
    steps.push(Step::Eval(0));
    let rounds = cfg.effective_rounds();
    for r in 1..=rounds {
        steps.push(Step::Question(r));
        steps.push(Step::Answer(r));
        if cfg.summary_mode == SummaryMode::Summarize {
            steps.push(Step::Summary(r));
        }
        if !cfg.final_round_only || r == rounds {
            steps.push(Step::Eval(r));
        }
    }
    steps
}

/// Fixed facts about a run, stored next to its events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub concept_id: String,
    pub domain: Domain,
    pub config: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceRef>,
}

/// The transcript a borrowed run replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub run_id: String,
    pub scenario: Scenario,
    pub student_model: String,
    pub teacher_model: String,
    pub has_lesson: bool,
    pub final_round: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub meta: RunMeta,
    pub events: Vec<Event>,
}

impl Transcript {
    pub fn run_id(&self) -> &str {
        &self.meta.run_id
    }

    pub fn concept_id(&self) -> &str {
        &self.meta.concept_id
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.meta.config
    }

    pub fn plan(&self) -> Vec<Step> {
        plan(
            &self.meta.config,
            self.meta.source.as_ref().map(|s| (s.has_lesson, s.final_round)),
        )
    }

    pub fn find(&self, t: EventType, round: u32) -> Option<&Event> {
        self.events.iter().find(|e| e.event_type == t && e.round == round)
    }

    pub fn lesson(&self) -> Option<&str> {
        self.find(EventType::LessonShown, 0).map(Event::text)
    }

    pub fn question(&self, round: u32) -> Option<&str> {
        self.find(EventType::StudentQuestion, round).map(Event::text)
    }

    pub fn answer(&self, round: u32) -> Option<&str> {
        self.find(EventType::TeacherAnswer, round).map(Event::text)
    }

    pub fn accuracy(&self, round: u32) -> Option<f64> {
        self.find(EventType::QuizEval, round).and_then(|e| e.accuracy)
    }

    pub fn quiz_evals(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.event_type == EventType::QuizEval)
    }

    /// Number of completed question/answer rounds.
    pub fn completed_rounds(&self) -> u32 {
        self.events
            .iter()
            .filter(|e| e.event_type == EventType::TeacherAnswer)
            .map(|e| e.round)
            .max()
            .unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        let p = self.plan();
        p.len() == self.events.len() && p.iter().zip(&self.events).all(|(s, e)| s.matches(e))
    }

    pub fn records(&self) -> Vec<EvaluationRecord> {
        let cfg = &self.meta.config;
        let teacher_model = match (&self.meta.source, cfg.scenario) {
            (Some(s), Scenario::BorrowedTranscript) => s.teacher_model.clone(),
            _ => cfg.teacher_model.clone(),
        };
        self.quiz_evals()
            .map(|e| EvaluationRecord {
                run_id: self.meta.run_id.clone(),
                concept_id: self.meta.concept_id.clone(),
                domain: self.meta.domain,
                scenario: cfg.scenario,
                seed: cfg.seed,
                round: e.round,
                accuracy: e.accuracy.unwrap_or(0.0),
                n_questions: e.per_question.as_ref().map_or(0, |p| p.len() as u32),
                eval_model: cfg.eval_model().to_string(),
                teacher_model: teacher_model.clone(),
            })
            .collect()
    }

    /// Event-order invariant: events follow the run's plan exactly, each
    /// question is answered in the same round, and every evaluation is a
    /// count ratio over `n_questions` (when given) with consistent metadata.
    pub fn check(&self, n_questions: Option<usize>) -> Result<(), String> {
        let plan = self.plan();
        if self.events.len() != plan.len() {
            return Err(format!("expected {} events, found {}", plan.len(), self.events.len()));
        }
        let cfg = &self.meta.config;
        let mut last_round = 0;
        for (i, (step, e)) in plan.iter().zip(&self.events).enumerate() {
            if !step.matches(e) {
                return Err(format!("event {i}: expected {step:?}, found {:?}({})", e.event_type, e.round));
            }
            if e.round < last_round {
                return Err(format!("event {i}: round went backwards"));
            }
            last_round = e.round;
            if e.run_id != self.meta.run_id
                || e.concept_id != self.meta.concept_id
                || e.scenario != cfg.scenario
                || e.seed != cfg.seed
            {
                return Err(format!("event {i}: metadata does not match the run"));
            }
            match e.event_type {
                EventType::QuizEval => {
                    let pq = e.per_question.as_ref().ok_or(format!("event {i}: no per-question records"))?;
                    let acc = e.accuracy.ok_or(format!("event {i}: no accuracy"))?;
                    if pq.is_empty() || !(0.0..=1.0).contains(&acc) {
                        return Err(format!("event {i}: bad accuracy {acc}"));
                    }
                    if let Some(n) = n_questions {
                        if pq.len() != n {
                            return Err(format!("event {i}: {} answers for {n} questions", pq.len()));
                        }
                    }
                    let correct = pq.iter().filter(|q| q.correct).count();
                    if acc != correct as f64 / pq.len() as f64 {
                        return Err(format!("event {i}: accuracy disagrees with answers"));
                    }
                }
                _ => {
                    if e.content.as_deref().unwrap_or("").is_empty() {
                        return Err(format!("event {i}: empty content"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Transcript {
    /// A complete dynamic no-lesson run built from hand-written rounds.
    /// `correct[r]` is the number of right answers out of `n_questions` at
    /// round `r`, so it has one more entry than `pairs`.
    pub fn from_dialogue(
        concept_id: &str,
        domain: Domain,
        pairs: &[(&str, &str)],
        correct: &[usize],
        n_questions: usize,
    ) -> Transcript {
        assert_eq!(correct.len(), pairs.len() + 1, "one score per round including round 0");
        let cfg = ScenarioConfig::new(Scenario::DynamicNoLesson, "student", "teacher").rounds(pairs.len() as u32);
        let run_id = cfg.run_id(concept_id);
        let ts = crate::util::Timestamps::logical();
        let mut events = Vec::new();
        let mut push = |round: u32, event_type, role, content: Option<&str>, score: Option<usize>| {
            let per_question = score.map(|c| {
                (0..n_questions)
                    .map(|i| {
                        let raw = if i < c { "A" } else { "B" };
                        QuestionRecord::grade(format!("{concept_id}-q{}", i + 1), raw, crate::scoring::Letter::A)
                    })
                    .collect::<Vec<_>>()
            });
            let tick = events.len() as u64;
            events.push(Event {
                run_id: run_id.clone(),
                concept_id: concept_id.to_string(),
                scenario: cfg.scenario,
                seed: cfg.seed,
                round,
                event_type,
                role,
                content: content.map(str::to_string),
                accuracy: score.map(|c| c as f64 / n_questions as f64),
                per_question,
                ts: ts.rfc3339(tick),
            });
        };
        push(0, EventType::QuizEval, None, None, Some(correct[0]));
        for (i, (q, a)) in pairs.iter().enumerate() {
            let r = i as u32 + 1;
            push(r, EventType::StudentQuestion, Some(Speaker::Student), Some(q), None);
            push(r, EventType::TeacherAnswer, Some(Speaker::Teacher), Some(a), None);
            push(r, EventType::QuizEval, None, None, Some(correct[i + 1]));
        }
        Transcript {
            meta: RunMeta {
                run_id,
                concept_id: concept_id.to_string(),
                domain,
                config: cfg,
                source: None,
            },
            events,
        }
    }
}

/// Student-side knowledge after the given events: the lesson, then either
/// every Q/A pair verbatim (concat) or the latest rolling summary.
pub fn build_student_context(events: &[Event], mode: SummaryMode) -> String {
    let mut parts = Vec::new();
    if let Some(l) = events.iter().find(|e| e.event_type == EventType::LessonShown) {
        parts.push(format!("Lesson:\n{}", l.text()));
    }
    match mode {
        SummaryMode::Concat => {
            let pairs = qa_pairs(events);
            if !pairs.is_empty() {
                parts.push(format!("Conversation so far:\n{}", pairs));
            }
        }
        SummaryMode::Summarize => {
            if let Some(s) = events.iter().rev().find(|e| e.event_type == EventType::Summary) {
                parts.push(format!("Notes:\n{}", s.text()));
            }
        }
    }
    parts.join("\n\n")
}

/// `Q: ... / A: ...` lines for every answered question, in order.
pub fn qa_pairs(events: &[Event]) -> String {
    let mut out = Vec::new();
    let mut pending: Option<&str> = None;
    for e in events {
        match e.event_type {
            EventType::StudentQuestion => pending = Some(e.text()),
            EventType::TeacherAnswer => {
                if let Some(q) = pending.take() {
                    out.push(format!("Q: {q}\nA: {}", e.text()));
                }
            }
            _ => {}
        }
    }
    out.join("\n")
}

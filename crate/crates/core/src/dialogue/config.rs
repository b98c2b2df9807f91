use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "static-lesson")]
    StaticWithLesson,
    #[serde(rename = "dynamic-no-lesson")]
    DynamicNoLesson,
    #[serde(rename = "dynamic-lesson")]
    DynamicWithLesson,
    #[serde(rename = "borrowed")]
    BorrowedTranscript,
    /// The teacher model answering the quiz with the context document in
    /// view. Supplies the reference accuracy for recovery percentages.
    #[serde(rename = "teacher")]
    TeacherReference,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::StaticWithLesson,
        Scenario::DynamicNoLesson,
        Scenario::DynamicWithLesson,
        Scenario::BorrowedTranscript,
        Scenario::TeacherReference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::StaticWithLesson => "static-lesson",
            Scenario::DynamicNoLesson => "dynamic-no-lesson",
            Scenario::DynamicWithLesson => "dynamic-lesson",
            Scenario::BorrowedTranscript => "borrowed",
            Scenario::TeacherReference => "teacher",
        }
    }

    pub fn uses_lesson(self) -> bool {
        matches!(self, Scenario::StaticWithLesson | Scenario::DynamicWithLesson)
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, Scenario::DynamicNoLesson | Scenario::DynamicWithLesson)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryMode {
    #[default]
    Concat,
    Summarize,
}

impl FromStr for SummaryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concat" => Ok(SummaryMode::Concat),
            "summarize" => Ok(SummaryMode::Summarize),
            _ => Err(format!("unknown summary mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Sampling {
    pub const fn new(temperature: f64, max_tokens: u32) -> Self {
        Sampling { temperature, max_tokens }
    }
}

pub const DEFAULT_ROUNDS: u32 = 5;
pub const STUDENT_QUESTION_SAMPLING: Sampling = Sampling::new(1.0, 256);
pub const TEACHER_ANSWER_SAMPLING: Sampling = Sampling::new(0.7, 512);
pub const SUMMARY_SAMPLING: Sampling = Sampling::new(0.7, 256);
pub const QUIZ_EVAL_SAMPLING: Sampling = Sampling::new(0.0, 10);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub rounds: u32,
    pub student_model: String,
    pub teacher_model: String,
    pub lesson_provider: String,
    #[serde(default)]
    pub summary_mode: SummaryMode,
    pub seed: u64,
    /// Send `seed` on the wire with every request.
    #[serde(default = "yes")]
    pub forward_seed: bool,
    /// Skip QuizEval after rounds 1..rounds-1.
    #[serde(default)]
    pub final_round_only: bool,
    pub student_question: Sampling,
    pub teacher_answer: Sampling,
    pub summary: Sampling,
    pub quiz_eval: Sampling,
    /// Run id of the transcript a borrowed run replays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borrowed_from: Option<String>,
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, student_model: impl Into<String>, teacher_model: impl Into<String>) -> Self {
        let teacher_model = teacher_model.into();
        ScenarioConfig {
            scenario,
            rounds: DEFAULT_ROUNDS,
            student_model: student_model.into(),
            lesson_provider: teacher_model.clone(),
            teacher_model,
            summary_mode: SummaryMode::Concat,
            seed: 0,
            forward_seed: true,
            final_round_only: false,
            student_question: STUDENT_QUESTION_SAMPLING,
            teacher_answer: TEACHER_ANSWER_SAMPLING,
            summary: SUMMARY_SAMPLING,
            quiz_eval: QUIZ_EVAL_SAMPLING,
            borrowed_from: None,
        }
    }

    pub fn rounds(mut self, rounds: u32) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn summary_mode(mut self, mode: SummaryMode) -> Self {
        self.summary_mode = mode;
        self
    }

    /// Rounds actually played: static and reference scenarios never interact.
    pub fn effective_rounds(&self) -> u32 {
        if self.scenario.is_dynamic() {
            self.rounds
        } else {
            0
        }
    }

    pub fn wire_seed(&self) -> Option<i64> {
        self.forward_seed.then_some(self.seed as i64)
    }

    /// Model that answers the quiz in this scenario.
    pub fn eval_model(&self) -> &str {
        if self.scenario == Scenario::TeacherReference {
            &self.teacher_model
        } else {
            &self.student_model
        }
    }

    pub fn run_id(&self, concept_id: &str) -> String {
        crate::util::sanitize_component(&format!(
            "{}__{}__{}__{}__s{}",
            concept_id,
            self.scenario,
            self.eval_model(),
            self.teacher_model,
            self.seed
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
    }

    #[test]
    fn defaults() {
        let c = ScenarioConfig::new(Scenario::DynamicNoLesson, "stu", "tea");
        assert_eq!(c.rounds, 5);
        assert_eq!(c.student_question, Sampling::new(1.0, 256));
        assert_eq!(c.teacher_answer, Sampling::new(0.7, 512));
        assert_eq!(c.summary, Sampling::new(0.7, 256));
        assert_eq!(c.quiz_eval, Sampling::new(0.0, 10));
        assert_eq!(c.summary_mode, SummaryMode::Concat);
        assert_eq!(c.run_id("c/1"), "c_1__dynamic-no-lesson__stu__tea__s0");
    }

    #[test]
    fn static_has_no_rounds() {
        assert_eq!(ScenarioConfig::new(Scenario::StaticWithLesson, "s", "t").effective_rounds(), 0);
    }
}

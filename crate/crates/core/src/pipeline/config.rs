//! Run manifest: everything one pipeline invocation needs, in TOML or JSON.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dialogue::{
    Sampling, Scenario, ScenarioConfig, SummaryMode, DEFAULT_ROUNDS, QUIZ_EVAL_SAMPLING, STUDENT_QUESTION_SAMPLING,
    SUMMARY_SAMPLING, TEACHER_ANSWER_SAMPLING,
};
use crate::gainmodel::ForestParams;
use crate::provider::{ProviderConfig, ENV_API_KEY, ENV_BASE_URL};

fn default_run_set() -> String {
    "default".into()
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_parallel() -> usize {
    4
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_rounds() -> u32 {
    DEFAULT_ROUNDS
}
fn default_scenarios() -> Vec<Scenario> {
    vec![Scenario::StaticWithLesson, Scenario::DynamicNoLesson, Scenario::DynamicWithLesson]
}
fn default_students() -> Vec<String> {
    vec!["student".into()]
}
fn default_teacher() -> String {
    "teacher".into()
}
fn default_weak() -> String {
    "weak".into()
}
fn yes() -> bool {
    true
}

/// Which finished dialogues a borrowed run replays: the transcript of
/// `from_student` in `from_scenario` for the same concept and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BorrowSpec {
    pub from_student: String,
    #[serde(default = "default_borrow_scenario")]
    pub from_scenario: Scenario,
}

fn default_borrow_scenario() -> Scenario {
    Scenario::DynamicWithLesson
}

/// Connection settings for one role. The API key is read from the
/// environment variable named by `api_key_env`, never from the file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSettings {
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub max_concurrent: Option<usize>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub vision_models: Vec<String>,
}

impl ProviderSettings {
    pub fn to_config(&self) -> Result<ProviderConfig, PipelineError> {
        let key_var = self.api_key_env.as_deref().unwrap_or(ENV_API_KEY);
        let key = std::env::var(key_var).map_err(|_| PipelineError::Config(format!("{key_var} is not set")))?;
        let url = match &self.base_url {
            Some(u) => u.clone(),
            None => std::env::var(ENV_BASE_URL).unwrap_or_else(|_| "https://api.openai.com/v1".to_string()),
        };
        let mut cfg = ProviderConfig::new(url, key);
        if let Some(n) = self.max_concurrent {
            cfg.max_concurrent = n;
        }
        if let Some(n) = self.max_retries {
            cfg.max_retries = n;
        }
        if let Some(s) = self.timeout_secs {
            cfg.timeout = Duration::from_secs(s);
        }
        cfg.vision_models = self.vision_models.iter().cloned().collect();
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingOverrides {
    pub student_question: Option<Sampling>,
    pub teacher_answer: Option<Sampling>,
    pub summary: Option<Sampling>,
    pub quiz_eval: Option<Sampling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSettings {
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_resamples() -> usize {
    crate::scoring::DEFAULT_RESAMPLES
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            resamples: default_resamples(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainfitSettings {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Empty means the built-in grid.
    #[serde(default)]
    pub grid: Vec<ForestParams>,
}

fn default_folds() -> usize {
    5
}
fn default_test_fraction() -> f64 {
    0.2
}

impl Default for GainfitSettings {
    fn default() -> Self {
        GainfitSettings {
            folds: default_folds(),
            test_fraction: default_test_fraction(),
            seed: 0,
            grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default = "default_run_set")]
    pub run_set: String,
    pub corpus: PathBuf,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_students")]
    pub student_models: Vec<String>,
    #[serde(default = "default_teacher")]
    pub teacher_model: String,
    /// Defaults to the teacher model.
    #[serde(default)]
    pub lesson_model: Option<String>,
    /// Model that drafts and regenerates quiz questions; defaults to the teacher.
    #[serde(default)]
    pub quiz_model: Option<String>,
    #[serde(default = "default_weak")]
    pub weak_model: String,
    #[serde(default)]
    pub summary_mode: SummaryMode,
    #[serde(default = "yes")]
    pub forward_seed: bool,
    #[serde(default)]
    pub final_round_only: bool,
    /// Also run the teacher on each quiz with the context in view, once per
    /// concept and seed. Recovery percentages need these runs.
    #[serde(default)]
    pub teacher_reference: bool,
    #[serde(default)]
    pub borrow: Option<BorrowSpec>,
    #[serde(default)]
    pub authoring_seed: Option<i64>,
    /// Scripted provider fixture; replaces every network provider.
    #[serde(default)]
    pub scripted: Option<PathBuf>,
    /// Keyed by role: `default`, `author`, `student`, `teacher`.
    #[serde(default)]
    pub providers: BTreeMap<String, ProviderSettings>,
    #[serde(default)]
    pub sampling: SamplingOverrides,
    #[serde(default)]
    pub report: ReportSettings,
    #[serde(default)]
    pub gainfit: GainfitSettings,
    #[serde(default)]
    pub keywords_dir: Option<PathBuf>,
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
}

pub const ROLES: [&str; 4] = ["default", "author", "student", "teacher"];

impl RunManifest {
    pub fn new(corpus: impl Into<PathBuf>) -> Self {
        toml::from_str::<RunManifest>(&format!("corpus = {:?}", corpus.into().to_string_lossy()))
            .expect("defaults deserialize")
    }

    pub fn parse(raw: &str, json: bool) -> Result<Self, PipelineError> {
        if json {
            serde_json::from_str(raw).map_err(|e| PipelineError::Config(format!("run manifest: {e}")))
        } else {
            toml::from_str(raw).map_err(|e| PipelineError::Config(format!("run manifest: {e}")))
        }
    }

    /// Reads a run manifest (`.json` or TOML). Relative paths inside it are
    /// resolved against the file's directory. A corpus manifest (JSON with
    /// a `contexts` array) is accepted too and run with default settings.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        if json {
            let v: serde_json::Value =
                serde_json::from_str(&raw).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            if v.get("contexts").is_some() {
                return Ok(RunManifest::new(path));
            }
        }
        let mut m = Self::parse(&raw, json)?;
        m.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(m)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.out);
        for p in [&mut self.scripted, &mut self.keywords_dir, &mut self.prompts_dir].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn lesson_model(&self) -> &str {
        self.lesson_model.as_deref().unwrap_or(&self.teacher_model)
    }

    pub fn quiz_model(&self) -> &str {
        self.quiz_model.as_deref().unwrap_or(&self.teacher_model)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(&self.run_set)
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.run_set.is_empty() || crate::util::sanitize_component(&self.run_set) != self.run_set {
            return fail(format!("run_set `{}` must be a plain directory name", self.run_set));
        }
        if self.parallel == 0 {
            return fail("parallel must be at least 1".into());
        }
        if self.seeds.is_empty() || self.scenarios.is_empty() || self.student_models.is_empty() {
            return fail("seeds, scenarios and student_models must be non-empty".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return fail("duplicate seed in the scenario matrix".into());
        }
        if self.scenarios.iter().collect::<BTreeSet<_>>().len() != self.scenarios.len() {
            return fail("duplicate scenario in the scenario matrix".into());
        }
        if self.student_models.iter().collect::<BTreeSet<_>>().len() != self.student_models.len() {
            return fail("duplicate student model in the scenario matrix".into());
        }
        if self.scenarios.contains(&Scenario::TeacherReference) {
            return fail("the teacher reference is controlled by `teacher_reference`, not `scenarios`".into());
        }
        if self.scenarios.contains(&Scenario::BorrowedTranscript) {
            let Some(b) = &self.borrow else {
                return fail("scenario `borrowed` needs a [borrow] section".into());
            };
            if !b.from_scenario.is_dynamic() {
                return fail(format!("cannot borrow from non-dynamic scenario {}", b.from_scenario));
            }
        }
        if let Some(role) = self.providers.keys().find(|k| !ROLES.contains(&k.as_str())) {
            return fail(format!("unknown provider role `{role}`"));
        }
        if !(self.gainfit.test_fraction > 0.0 && self.gainfit.test_fraction < 1.0) {
            return fail("gainfit.test_fraction must be in (0, 1)".into());
        }
        Ok(())
    }

    /// Settings shared by every scenario cell.
    pub fn scenario_config(&self, scenario: Scenario, student: &str, seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(scenario, student, self.teacher_model.clone())
            .rounds(self.rounds)
            .seed(seed)
            .summary_mode(self.summary_mode);
        cfg.lesson_provider = self.lesson_model().to_string();
        cfg.forward_seed = self.forward_seed;
        cfg.final_round_only = self.final_round_only;
        let s = &self.sampling;
        cfg.student_question = s.student_question.unwrap_or(STUDENT_QUESTION_SAMPLING);
        cfg.teacher_answer = s.teacher_answer.unwrap_or(TEACHER_ANSWER_SAMPLING);
        cfg.summary = s.summary.unwrap_or(SUMMARY_SAMPLING);
        cfg.quiz_eval = s.quiz_eval.unwrap_or(QUIZ_EVAL_SAMPLING);
        cfg
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

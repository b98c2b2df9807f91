//! Stage orchestration over a run directory:
//! `<out>/<run_set>/{lessons,quizzes,audit,transcripts,records.csv,features.csv,reports}`.
//!
//! Every stage skips work whose output already exists, so rerunning a
//! finished stage makes no provider calls.

mod config;
mod router;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use futures::stream::{self, StreamExt, TryStreamExt};
use serde::Serialize;
use thiserror::Error;
use tracing::info;

pub use config::{
    BorrowSpec, GainfitSettings, ProviderSettings, ReportSettings, RunManifest, SamplingOverrides, ROLES,
};
pub use router::RoleRouter;

use crate::authoring::{self, AuthoringConfig, AuthoringError, LintKind, Lesson, Quiz};
use crate::corpus::{self, ContextDocument, CorpusError, CorpusManifest};
use crate::dialogue::{DialogueError, RunStore, Runner, Scenario, ScenarioConfig, Transcript};
use crate::features::{self, FeatureError, FeatureMatrix, HeuristicAnnotator, Keywords, FEATURE_NAMES, N_FEATURES};
use crate::gainmodel::{self, ForestModel, GainModelError};
use crate::prompts::PromptSet;
use crate::provider::{ChatProvider, HttpProvider, ScriptedProvider};
use crate::scoring::{self, EvaluationRecord, ScoringError};
use crate::simulate::Fixture;
use crate::util::{sanitize_component, Timestamps};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("provider failure: {0}")]
    Provider(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// 1 validation, 2 provider or transport, 3 configuration and environment.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Provider(_) => 2,
            PipelineError::Config(_) | PipelineError::Io(_) => 3,
        }
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Validation(_) | CorpusError::Domain(_) => PipelineError::Validation(e.to_string()),
            _ => PipelineError::Config(e.to_string()),
        }
    }
}

impl From<AuthoringError> for PipelineError {
    fn from(e: AuthoringError) -> Self {
        match e {
            AuthoringError::Provider(_)
            | AuthoringError::EmptyLesson(_)
            | AuthoringError::QuizParse { .. }
            | AuthoringError::InvalidQuiz { .. } => PipelineError::Provider(e.to_string()),
            AuthoringError::Io(e) => PipelineError::Io(e),
            _ => PipelineError::Config(e.to_string()),
        }
    }
}

impl From<DialogueError> for PipelineError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::Provider { .. } => PipelineError::Provider(e.to_string()),
            DialogueError::Io(e) => PipelineError::Io(e),
            _ => PipelineError::Config(e.to_string()),
        }
    }
}

impl From<ScoringError> for PipelineError {
    fn from(e: ScoringError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<FeatureError> for PipelineError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Io(e) => PipelineError::Io(e),
            _ => PipelineError::Config(e.to_string()),
        }
    }
}

impl From<GainModelError> for PipelineError {
    fn from(e: GainModelError) -> Self {
        match e {
            GainModelError::TooFewRows { .. } | GainModelError::DegenerateData(_) => {
                PipelineError::Validation(e.to_string())
            }
            GainModelError::Io(e) => PipelineError::Io(e),
            _ => PipelineError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidateReport {
    pub contexts: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidateReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} contexts, {} errors, {} warnings", self.contexts, self.errors.len(), self.warnings.len())?;
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuthorSummary {
    pub lessons_written: usize,
    pub quizzes_written: usize,
    pub skipped: usize,
    pub lint_warnings: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub transcripts: usize,
    pub already_done: usize,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainfitSummary {
    pub rows: usize,
    pub best: gainmodel::ForestParams,
    pub cv: Vec<gainmodel::GridScore>,
    pub held_out: gainmodel::HeldOut,
    pub per_domain_r2: BTreeMap<String, f64>,
    pub top_features: Vec<(String, f64)>,
}

/// One cell of the scenario matrix.
#[derive(Debug, Clone)]
pub struct Cell {
    pub concept_id: String,
    pub config: ScenarioConfig,
    /// Run id of the transcript a borrowed cell replays.
    pub source: Option<String>,
}

impl Cell {
    pub fn run_id(&self) -> String {
        match &self.source {
            None => self.config.run_id(&self.concept_id),
            Some(src) => {
                let prefix = format!("{}__", sanitize_component(&self.concept_id));
                let mut cfg = self.config.clone();
                cfg.borrowed_from = Some(src.clone());
                format!("{}__from__{}", cfg.run_id(&self.concept_id), src.strip_prefix(&prefix).unwrap_or(src))
            }
        }
    }
}

pub struct Pipeline {
    pub manifest: RunManifest,
    provider: Option<Arc<dyn ChatProvider>>,
}

impl Pipeline {
    pub fn new(manifest: RunManifest) -> Result<Self, PipelineError> {
        manifest.check()?;
        Ok(Pipeline {
            manifest,
            provider: None,
        })
    }

    /// Use this provider instead of the manifest's.
    pub fn with_provider(mut self, provider: Arc<dyn ChatProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn run_dir(&self) -> PathBuf {
        self.manifest.run_dir()
    }

    pub fn lessons_dir(&self) -> PathBuf {
        self.run_dir().join("lessons")
    }

    pub fn quizzes_dir(&self) -> PathBuf {
        self.run_dir().join("quizzes")
    }

    pub fn audit_dir(&self) -> PathBuf {
        self.run_dir().join("audit")
    }

    pub fn transcripts_dir(&self) -> PathBuf {
        self.run_dir().join("transcripts")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.run_dir().join("reports")
    }

    pub fn records_path(&self) -> PathBuf {
        self.run_dir().join("records.csv")
    }

    fn lesson_path(&self, concept: &str) -> PathBuf {
        self.lessons_dir().join(format!("{}.json", sanitize_component(concept)))
    }

    fn quiz_path(&self, concept: &str) -> PathBuf {
        self.quizzes_dir().join(format!("{}.json", sanitize_component(concept)))
    }

    fn timestamps(&self) -> Timestamps {
        if self.manifest.scripted.is_some() {
            Timestamps::logical()
        } else {
            Timestamps::Wall
        }
    }

    fn prompts(&self) -> Result<PromptSet, PipelineError> {
        let p = PromptSet::default();
        Ok(match &self.manifest.prompts_dir {
            Some(d) => p.load_overrides(d)?,
            None => p,
        })
    }

    /// Scripted fixture, injected provider, or HTTP clients per role.
    pub fn provider(&self) -> Result<Arc<dyn ChatProvider>, PipelineError> {
        if let Some(p) = &self.provider {
            return Ok(p.clone());
        }
        if let Some(path) = &self.manifest.scripted {
            let fixture = Fixture::load(path)
                .map_err(|e| PipelineError::Config(format!("scripted fixture {}: {e}", path.display())))?;
            let p: Arc<ScriptedProvider> = Arc::new(fixture.provider());
            return Ok(p);
        }
        let settings = |role: &str| self.manifest.providers.get(role).cloned();
        let http = |s: ProviderSettings| -> Result<Arc<dyn ChatProvider>, PipelineError> {
            let p = HttpProvider::new(s.to_config()?).map_err(|e| PipelineError::Config(e.to_string()))?;
            Ok(Arc::new(p))
        };
        let default = http(settings("default").unwrap_or_default())?;
        let mut router = RoleRouter::new(default);
        for role in ["author", "student", "teacher"] {
            if let Some(s) = settings(role) {
                router = router.with_role(role, http(s)?);
            }
        }
        Ok(Arc::new(router))
    }

    /// Corpus with relative image paths resolved against the corpus file.
    pub fn load_corpus(&self) -> Result<CorpusManifest, PipelineError> {
        let mut m = corpus::load_manifest(&self.manifest.corpus)?;
        resolve_images(&mut m, &self.manifest.corpus);
        Ok(m)
    }

    pub fn cmd_validate(&self) -> Result<ValidateReport, PipelineError> {
        let raw = std::fs::read_to_string(&self.manifest.corpus)
            .map_err(|e| PipelineError::Config(format!("reading {}: {e}", self.manifest.corpus.display())))?;
        let mut report = ValidateReport::default();
        let manifest = match corpus::parse_manifest(&raw, &corpus::LoadOptions::default()) {
            Ok(m) => m,
            Err(CorpusError::Validation(issues)) => {
                report.errors.extend(issues.iter().map(ToString::to_string));
                let v: serde_json::Value = serde_json::from_str(&raw).unwrap_or_default();
                report.contexts = v["contexts"].as_array().map_or(0, Vec::len);
                return Ok(report);
            }
            Err(e) => return Err(e.into()),
        };
        report.contexts = manifest.contexts.len();
        for doc in &manifest.contexts {
            let path = self.quiz_path(&doc.id);
            if !path.exists() {
                continue;
            }
            let quiz = match authoring::load_quiz(&path) {
                Ok(q) => q,
                Err(e) => {
                    report.errors.push(format!("{}: unreadable quiz: {e}", doc.id));
                    continue;
                }
            };
            if let Err(e) = quiz.check(doc.domain) {
                report.errors.push(format!("{}: {e}", doc.id));
            }
            for f in authoring::lint_quiz(&quiz, doc) {
                let msg = format!("{} {}: {:?}", doc.id, f.question_id, f.kind);
                match f.kind {
                    LintKind::DuplicateStem { .. } | LintKind::AnswerLeakage => report.errors.push(msg),
                    _ => report.warnings.push(msg),
                }
            }
        }
        Ok(report)
    }

    fn authoring_config(&self) -> AuthoringConfig {
        AuthoringConfig {
            seed: self.manifest.authoring_seed,
            timestamps: self.timestamps(),
            ..AuthoringConfig::default()
        }
    }

    /// Lessons and filtered quizzes for every concept. Existing files are
    /// kept unless `force`.
    pub async fn cmd_author(&self, force: bool) -> Result<AuthorSummary, PipelineError> {
        let corpus = self.load_corpus()?;
        let provider = self.provider()?;
        let prompts = self.prompts()?;
        let cfg = self.authoring_config();
        std::fs::create_dir_all(self.lessons_dir())?;
        std::fs::create_dir_all(self.quizzes_dir())?;
        let m = &self.manifest;
        let results: Vec<AuthorSummary> = stream::iter(corpus.contexts.iter())
            .map(|doc| {
                let provider = provider.clone();
                let (prompts, cfg) = (&prompts, &cfg);
                async move {
                    let mut s = AuthorSummary::default();
                    let lesson_path = self.lesson_path(&doc.id);
                    if force || !lesson_path.exists() {
                        let lesson =
                            authoring::generate_lesson(provider.as_ref(), prompts, doc, m.lesson_model(), cfg).await?;
                        authoring::save_json(&lesson, &lesson_path)?;
                        s.lessons_written += 1;
                    } else {
                        s.skipped += 1;
                    }
                    let quiz_path = self.quiz_path(&doc.id);
                    if force || !quiz_path.exists() {
                        let draft = authoring::generate_quiz(provider.as_ref(), prompts, doc, m.quiz_model(), cfg).await?;
                        let (quiz, audit) = authoring::adversarial_filter(
                            provider.as_ref(),
                            prompts,
                            doc,
                            draft,
                            &m.weak_model,
                            m.quiz_model(),
                            cfg,
                        )
                        .await?;
                        authoring::write_audit(
                            &self.audit_dir().join(format!("{}.jsonl", sanitize_component(&doc.id))),
                            &audit,
                        )?;
                        s.lint_warnings += authoring::lint_quiz(&quiz, doc).len();
                        authoring::save_json(&quiz, &quiz_path)?;
                        s.quizzes_written += 1;
                    } else {
                        s.skipped += 1;
                    }
                    info!(concept = %doc.id, "authored");
                    Ok::<_, PipelineError>(s)
                }
            })
            .buffer_unordered(m.parallel)
            .try_collect()
            .await?;
        Ok(results.into_iter().fold(AuthorSummary::default(), |mut a, s| {
            a.lessons_written += s.lessons_written;
            a.quizzes_written += s.quizzes_written;
            a.skipped += s.skipped;
            a.lint_warnings += s.lint_warnings;
            a
        }))
    }

    /// Every scenario cell this manifest asks for, in a fixed order:
    /// concepts, then students, scenarios and seeds; teacher references
    /// follow, then borrowed cells.
    pub fn cells(&self, corpus: &CorpusManifest) -> Vec<Cell> {
        let m = &self.manifest;
        let mut out = Vec::new();
        let mut borrowed = Vec::new();
        for doc in &corpus.contexts {
            for student in &m.student_models {
                for &scenario in &m.scenarios {
                    for &seed in &m.seeds {
                        let cfg = m.scenario_config(scenario, student, seed);
                        if scenario == Scenario::BorrowedTranscript {
                            let b = m.borrow.as_ref().expect("checked with the manifest");
                            if *student == b.from_student {
                                continue;
                            }
                            let src = m.scenario_config(b.from_scenario, &b.from_student, seed).run_id(&doc.id);
                            borrowed.push(Cell {
                                concept_id: doc.id.clone(),
                                config: cfg,
                                source: Some(src),
                            });
                        } else {
                            out.push(Cell {
                                concept_id: doc.id.clone(),
                                config: cfg,
                                source: None,
                            });
                        }
                    }
                }
            }
            if m.teacher_reference {
                for &seed in &m.seeds {
                    out.push(Cell {
                        concept_id: doc.id.clone(),
                        config: m.scenario_config(Scenario::TeacherReference, &m.teacher_model, seed),
                        source: None,
                    });
                }
            }
        }
        out.extend(borrowed);
        out
    }

    fn load_quiz(&self, concept: &str) -> Result<Quiz, PipelineError> {
        let p = self.quiz_path(concept);
        if !p.exists() {
            return Err(PipelineError::Config(format!("no quiz for {concept}; run `interact author` first")));
        }
        Ok(authoring::load_quiz(&p)?)
    }

    fn load_lesson(&self, concept: &str) -> Result<Lesson, PipelineError> {
        let p = self.lesson_path(concept);
        if !p.exists() {
            return Err(PipelineError::Config(format!("no lesson for {concept}; run `interact author` first")));
        }
        Ok(authoring::load_lesson(&p)?)
    }

    /// Runs the scenario matrix, resuming unfinished runs, then writes
    /// `records.csv` and a copy of the manifest.
    pub async fn cmd_run(&self) -> Result<RunSummary, PipelineError> {
        let corpus = self.load_corpus()?;
        let cells = self.cells(&corpus);
        let provider = self.provider()?;
        let prompts = self.prompts()?;
        let root = self.transcripts_dir();
        std::fs::create_dir_all(&root)?;
        let runner = Runner::new(provider.as_ref(), &prompts)
            .timestamps(self.timestamps())
            .store_root(&root);
        let docs: BTreeMap<&str, &ContextDocument> = corpus.contexts.iter().map(|d| (d.id.as_str(), d)).collect();
        let mut quizzes = BTreeMap::new();
        let mut lessons = BTreeMap::new();
        for doc in &corpus.contexts {
            quizzes.insert(doc.id.clone(), self.load_quiz(&doc.id)?);
            if self.manifest.scenarios.iter().any(|s| s.uses_lesson()) {
                lessons.insert(doc.id.clone(), self.load_lesson(&doc.id)?);
            }
        }

        let already_done = cells
            .iter()
            .filter(|c| RunStore::new(&root, &c.run_id()).is_done())
            .count();
        let (direct, borrowed): (Vec<&Cell>, Vec<&Cell>) = cells.iter().partition(|c| c.source.is_none());
        let run_cell = |cell: &Cell| {
            let runner = &runner;
            let (doc, quiz) = (docs[cell.concept_id.as_str()], &quizzes[&cell.concept_id]);
            let lesson = cell.config.scenario.uses_lesson().then(|| lessons.get(&cell.concept_id)).flatten();
            let root = &root;
            let cell = cell.clone();
            async move {
                let store = RunStore::new(root, &cell.run_id());
                if store.is_done() {
                    return Ok::<_, PipelineError>(store.load()?);
                }
                let t = match &cell.source {
                    None => runner.run_scenario(&cell.config, doc, quiz, lesson).await?,
                    Some(src) => {
                        let source = RunStore::new(root, src);
                        if !source.exists() {
                            return Err(PipelineError::Config(format!(
                                "{}: source transcript {src} does not exist",
                                cell.run_id()
                            )));
                        }
                        runner.run_borrowed(&cell.config, doc, quiz, &source.load()?).await?
                    }
                };
                info!(run = %t.run_id(), "finished");
                Ok(t)
            }
        };
        let mut transcripts: Vec<Transcript> = stream::iter(direct)
            .map(run_cell)
            .buffer_unordered(self.manifest.parallel)
            .try_collect()
            .await?;
        let more: Vec<Transcript> = stream::iter(borrowed)
            .map(run_cell)
            .buffer_unordered(self.manifest.parallel)
            .try_collect()
            .await?;
        transcripts.extend(more);

        let mut records: Vec<EvaluationRecord> = transcripts.iter().flat_map(Transcript::records).collect();
        records.sort_by(|a, b| a.run_id.cmp(&b.run_id).then(a.round.cmp(&b.round)));
        std::fs::write(self.records_path(), scoring::records_to_string(&records))?;
        std::fs::write(self.run_dir().join("manifest.json"), self.manifest.to_json())?;
        Ok(RunSummary {
            transcripts: transcripts.len(),
            already_done,
            records: records.len(),
        })
    }

    /// Completed transcripts of this manifest's matrix, in cell order.
    pub fn load_transcripts(&self) -> Result<Vec<Transcript>, PipelineError> {
        let corpus = self.load_corpus()?;
        let root = self.transcripts_dir();
        let mut out = Vec::new();
        for cell in self.cells(&corpus) {
            let store = RunStore::new(&root, &cell.run_id());
            if store.is_done() {
                out.push(store.load()?);
            }
        }
        Ok(out)
    }

    pub fn cmd_report(&self) -> Result<Vec<PathBuf>, PipelineError> {
        let path = self.records_path();
        if !path.exists() {
            return Err(PipelineError::Config(format!("{} not found; run `interact run` first", path.display())));
        }
        let records = scoring::load_records(&path)?;
        let dir = self.reports_dir();
        std::fs::create_dir_all(&dir)?;
        let r = &self.manifest.report;
        let mut written = Vec::new();
        for (name, body) in scoring::report::build_report(&records, r.resamples, r.seed)? {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p);
        }
        Ok(written)
    }

    pub fn cmd_features(&self) -> Result<FeatureMatrix, PipelineError> {
        let corpus = self.load_corpus()?;
        let docs: BTreeMap<String, ContextDocument> =
            corpus.contexts.iter().map(|d| (d.id.clone(), d.clone())).collect();
        let keywords = match &self.manifest.keywords_dir {
            Some(d) => Keywords::from_dir(d)?,
            None => Keywords::default(),
        };
        let transcripts = self.load_transcripts()?;
        let m = features::build_feature_matrix_with(&transcripts, &docs, &HeuristicAnnotator::default(), &keywords)?;
        m.save(&self.run_dir())?;
        Ok(m)
    }

    /// Cross-validated grid search on the training split, refit of the best
    /// point, held-out R² overall and per domain.
    pub fn cmd_gainfit(&self) -> Result<GainfitSummary, PipelineError> {
        let dir = self.run_dir();
        if !dir.join("features.csv").exists() {
            return Err(PipelineError::Config("features.csv not found; run `interact features` first".into()));
        }
        let matrix = FeatureMatrix::load(&dir)?;
        let summary = gainfit(&matrix, &self.manifest.gainfit, &dir)?;
        Ok(summary)
    }
}

/// Fits and writes `model.json`, `reports/importances.csv` and
/// `reports/gainfit.json` under `dir`.
pub fn gainfit(matrix: &FeatureMatrix, s: &GainfitSettings, dir: &Path) -> Result<GainfitSummary, PipelineError> {
    let (x, y) = (matrix.x(), matrix.y());
    let n = x.len();
    let (train, test) = gainmodel::train_test_split(n, s.test_fraction, s.seed);
    if train.len() < s.folds.max(2) || test.is_empty() {
        return Err(GainModelError::TooFewRows { n, k: s.folds }.into());
    }
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (xtr, ytr) = pick(&train);
    let (xte, yte) = pick(&test);
    let grid = if s.grid.is_empty() {
        gainmodel::default_grid(s.seed)
    } else {
        s.grid.clone()
    };
    let cv = gainmodel::cross_validate(&xtr, &ytr, &grid, s.folds, s.seed)?;
    let model: ForestModel = gainmodel::fit(&xtr, &ytr, &cv.best)?;
    let pred = model.predict(&xte)?;
    let r2 = gainmodel::r2_score(&yte, &pred)?;

    let mut by_domain: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (k, &i) in test.iter().enumerate() {
        let e = by_domain.entry(matrix.keys[i].domain.as_str().to_string()).or_default();
        e.0.push(yte[k]);
        e.1.push(pred[k]);
    }
    let per_domain_r2 = by_domain
        .into_iter()
        .map(|(d, (t, p))| Ok((d, gainmodel::r2_score(&t, &p)?)))
        .collect::<Result<_, GainModelError>>()?;

    let names: Vec<&str> = FEATURE_NAMES[..N_FEATURES].to_vec();
    let ranked = model.ranked_importances(&names);
    let reports = dir.join("reports");
    std::fs::create_dir_all(&reports)?;
    model.save(&dir.join("model.json"))?;
    let mut w = csv::Writer::from_path(reports.join("importances.csv")).map_err(|e| PipelineError::Config(e.to_string()))?;
    w.write_record(["feature", "importance"]).map_err(|e| PipelineError::Config(e.to_string()))?;
    for (name, v) in &ranked {
        w.write_record([name.to_string(), v.to_string()]).map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    w.flush()?;
    let summary = GainfitSummary {
        rows: n,
        best: cv.best.clone(),
        cv: cv.scores,
        held_out: gainmodel::HeldOut {
            train_rows: train.len(),
            test_rows: test.len(),
            r2,
        },
        per_domain_r2,
        top_features: ranked.iter().take(10).map(|(n, v)| (n.to_string(), *v)).collect(),
    };
    std::fs::write(
        reports.join("gainfit.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| PipelineError::Config(e.to_string()))? + "\n",
    )?;
    Ok(summary)
}

fn resolve_images(m: &mut CorpusManifest, corpus_path: &Path) {
    let base = corpus_path.parent().unwrap_or(Path::new("."));
    for doc in &mut m.contexts {
        if let Some(p) = &mut doc.image_path {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests;

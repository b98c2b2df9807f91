//! Quiz grading, evaluation records and aggregate tables.

mod answer;
mod bootstrap;
pub mod report;

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use answer::{parse_answer, Letter};
pub use bootstrap::{
    bootstrap_ci, quantile_sorted, stratified_bootstrap_ci, Interval, DEFAULT_LEVEL, DEFAULT_RESAMPLES,
};

use crate::corpus::Domain;
use crate::dialogue::Scenario;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("quiz has no questions")]
    EmptyQuiz,
    #[error("no values to aggregate")]
    EmptyInput,
    #[error("records for {model} lack scenario {scenario}")]
    MissingScenario { model: String, scenario: Scenario },
    #[error("records I/O: {0}")]
    Io(#[from] io::Error),
    #[error("records CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// How one quiz question was answered in one evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub raw_answer: String,
    pub parsed_letter: Option<Letter>,
    pub correct: bool,
}

impl QuestionRecord {
    pub fn grade(question_id: impl Into<String>, raw_answer: impl Into<String>, key: Letter) -> Self {
        let raw_answer = raw_answer.into();
        let parsed_letter = parse_answer(&raw_answer);
        QuestionRecord {
            question_id: question_id.into(),
            correct: parsed_letter == Some(key),
            raw_answer,
            parsed_letter,
        }
    }
}

/// Fraction correct. Unparsed answers count as wrong.
pub fn score_quiz(records: &[QuestionRecord]) -> Result<f64, ScoringError> {
    if records.is_empty() {
        return Err(ScoringError::EmptyQuiz);
    }
    let correct = records.iter().filter(|r| r.correct).count();
    Ok(correct as f64 / records.len() as f64)
}

/// One quiz evaluation of one run at one round. The last two columns are
/// not part of the minimal record but are needed to group by model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub run_id: String,
    pub concept_id: String,
    pub domain: Domain,
    pub scenario: Scenario,
    pub seed: u64,
    pub round: u32,
    pub accuracy: f64,
    pub n_questions: u32,
    #[serde(default)]
    pub eval_model: String,
    #[serde(default)]
    pub teacher_model: String,
}

impl EvaluationRecord {
    pub fn correct_count(&self) -> f64 {
        self.accuracy * self.n_questions as f64
    }

    /// `accuracy × n_questions` is a whole number.
    pub fn is_count_ratio(&self) -> bool {
        let c = self.correct_count();
        (c - c.round()).abs() < 1e-6 && (0.0..=1.0).contains(&self.accuracy)
    }
}

pub const RECORDS_HEADER: &str =
    "run_id,concept_id,domain,scenario,seed,round,accuracy,n_questions,eval_model,teacher_model";

pub fn write_records<W: io::Write>(w: W, records: &[EvaluationRecord]) -> Result<(), ScoringError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    if records.is_empty() {
        out.write_record(RECORDS_HEADER.split(','))?;
    }
    out.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[EvaluationRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 csv")
}

pub fn read_records<R: io::Read>(r: R) -> Result<Vec<EvaluationRecord>, ScoringError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(ScoringError::from)).collect()
}

pub fn load_records(path: &Path) -> Result<Vec<EvaluationRecord>, ScoringError> {
    read_records(std::fs::File::open(path)?)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Values of one (model, scenario) slice, averaged over seeds per concept
/// and kept grouped by domain.
#[derive(Debug, Clone, Default)]
pub struct DomainSeries {
    pub by_domain: BTreeMap<Domain, Vec<f64>>,
}

impl DomainSeries {
    fn from_concepts(per_concept: BTreeMap<(Domain, String), Vec<f64>>) -> Self {
        let mut by_domain: BTreeMap<Domain, Vec<f64>> = BTreeMap::new();
        for ((domain, _), seeds) in per_concept {
            by_domain.entry(domain).or_default().push(mean(&seeds));
        }
        DomainSeries { by_domain }
    }

    pub fn domain_mean(&self, d: Domain) -> Option<f64> {
        self.by_domain.get(&d).map(|v| mean(v))
    }

    /// Seeds, then concepts, then domains.
    pub fn overall(&self) -> Option<f64> {
        if self.by_domain.is_empty() {
            return None;
        }
        Some(self.by_domain.values().map(|v| mean(v)).sum::<f64>() / self.by_domain.len() as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.by_domain.is_empty()
    }

    pub fn n(&self) -> usize {
        self.by_domain.values().map(Vec::len).sum()
    }
}

/// Which evaluation of each run to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundPick {
    Start,
    End,
    At(u32),
}

/// Accuracy (0–1) per concept for one eval model and scenario.
pub fn series(
    records: &[EvaluationRecord],
    eval_model: &str,
    scenario: Scenario,
    pick: RoundPick,
) -> DomainSeries {
    let mut per_run: BTreeMap<&str, Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.eval_model == eval_model && r.scenario == scenario)
    {
        per_run.entry(r.run_id.as_str()).or_default().push(r);
    }
    let mut per_concept: BTreeMap<(Domain, String), Vec<f64>> = BTreeMap::new();
    for rs in per_run.values() {
        let chosen = match pick {
            RoundPick::Start => rs.iter().find(|r| r.round == 0),
            RoundPick::End => rs.iter().max_by_key(|r| r.round),
            RoundPick::At(k) => rs.iter().find(|r| r.round == k),
        };
        if let Some(r) = chosen {
            per_concept
                .entry((r.domain, r.concept_id.clone()))
                .or_default()
                .push(r.accuracy);
        }
    }
    DomainSeries::from_concepts(per_concept)
}

/// Start/end accuracies in percent and their difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub eval_model: String,
    pub scenario: Scenario,
    /// `None` for the all-domain row.
    pub domain: Option<Domain>,
    pub start: Option<f64>,
    pub end: f64,
}

impl DeltaRow {
    pub fn delta(&self) -> Option<f64> {
        self.start.map(|s| self.end - s)
    }

    pub fn delta_display(&self) -> String {
        self.delta().map(fmt_delta).unwrap_or_else(|| "—".into())
    }
}

/// Signed with two decimals; `-0.00` prints as `+0.00`.
pub fn fmt_delta(d: f64) -> String {
    let s = format!("{d:+.2}");
    if s == "-0.00" {
        "+0.00".into()
    } else {
        s
    }
}

pub fn eval_models(records: &[EvaluationRecord]) -> Vec<String> {
    let mut m: Vec<String> = records.iter().map(|r| r.eval_model.clone()).collect();
    m.sort();
    m.dedup();
    m
}

/// Per (model, scenario) rows: one per domain plus an all-domain row.
pub fn delta_table(records: &[EvaluationRecord]) -> Vec<DeltaRow> {
    let mut keys: Vec<(String, Scenario)> = records
        .iter()
        .map(|r| (r.eval_model.clone(), r.scenario))
        .collect();
    keys.sort();
    keys.dedup();
    let mut rows = Vec::new();
    for (model, scenario) in keys {
        let start = series(records, &model, scenario, RoundPick::Start);
        let end = series(records, &model, scenario, RoundPick::End);
        for (&domain, _) in end.by_domain.iter() {
            rows.push(DeltaRow {
                eval_model: model.clone(),
                scenario,
                domain: Some(domain),
                start: start.domain_mean(domain).map(|v| v * 100.0),
                end: end.domain_mean(domain).unwrap() * 100.0,
            });
        }
        if let Some(e) = end.overall() {
            // The all-domain start is only meaningful if every domain has one.
            let start_all = if start.by_domain.len() == end.by_domain.len() {
                start.overall().map(|v| v * 100.0)
            } else {
                None
            };
            rows.push(DeltaRow {
                eval_model: model.clone(),
                scenario,
                domain: None,
                start: start_all,
                end: e * 100.0,
            });
        }
    }
    rows
}

/// Table-2 style row for one student model. Accuracies are percentages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub eval_model: String,
    pub teacher_model: String,
    pub start_wo: f64,
    pub end_wo: f64,
    pub start_w: f64,
    pub end_w: f64,
    pub teacher: f64,
    /// Mean over domains of `100 · end_wo / start_w`.
    pub rec_vs_lesson_start: f64,
    /// Mean over domains of `100 · end_wo / teacher`.
    pub rec_vs_teacher: f64,
    /// `100 · end_wo / start_w` on the all-domain means.
    pub rec_vs_lesson_start_aggregate: f64,
    /// `100 · end_wo / teacher` on the all-domain means.
    pub rec_vs_teacher_aggregate: f64,
}

/// Per-domain mean of `100 · num / den` over domains present in both.
pub fn mean_domain_ratio(num: &DomainSeries, den: &DomainSeries) -> Option<f64> {
    let ratios: Vec<f64> = num
        .by_domain
        .keys()
        .filter_map(|d| Some(100.0 * num.domain_mean(*d)? / den.domain_mean(*d)?))
        .collect();
    (!ratios.is_empty()).then(|| mean(&ratios))
}

fn require(s: DomainSeries, model: &str, scenario: Scenario) -> Result<DomainSeries, ScoringError> {
    if s.is_empty() {
        Err(ScoringError::MissingScenario { model: model.to_string(), scenario })
    } else {
        Ok(s)
    }
}

/// Recovery row for one student model. Teacher accuracy comes from
/// teacher-reference records whose eval model is this student's teacher.
pub fn recovery_row(records: &[EvaluationRecord], eval_model: &str) -> Result<RecoveryRow, ScoringError> {
    let wo_end = require(series(records, eval_model, Scenario::DynamicNoLesson, RoundPick::End), eval_model, Scenario::DynamicNoLesson)?;
    let wo_start = series(records, eval_model, Scenario::DynamicNoLesson, RoundPick::Start);
    let w_start = require(series(records, eval_model, Scenario::DynamicWithLesson, RoundPick::Start), eval_model, Scenario::DynamicWithLesson)?;
    let w_end = series(records, eval_model, Scenario::DynamicWithLesson, RoundPick::End);
    let teacher_model = records
        .iter()
        .find(|r| r.eval_model == eval_model && r.scenario == Scenario::DynamicNoLesson)
        .map(|r| r.teacher_model.clone())
        .unwrap_or_default();
    let teacher = require(
        series(records, &teacher_model, Scenario::TeacherReference, RoundPick::End),
        eval_model,
        Scenario::TeacherReference,
    )?;
    let pct = |s: &DomainSeries| s.overall().unwrap_or(f64::NAN) * 100.0;
    let (end_wo, start_w, teacher_all) = (pct(&wo_end), pct(&w_start), pct(&teacher));
    Ok(RecoveryRow {
        eval_model: eval_model.to_string(),
        teacher_model,
        start_wo: pct(&wo_start),
        end_wo,
        start_w,
        end_w: pct(&w_end),
        teacher: teacher_all,
        rec_vs_lesson_start: mean_domain_ratio(&wo_end, &w_start).unwrap_or(f64::NAN),
        rec_vs_teacher: mean_domain_ratio(&wo_end, &teacher).unwrap_or(f64::NAN),
        rec_vs_lesson_start_aggregate: 100.0 * end_wo / start_w,
        rec_vs_teacher_aggregate: 100.0 * end_wo / teacher_all,
    })
}

/// One row per student model; fails on the first model missing a scenario.
pub fn recovery_percentages(records: &[EvaluationRecord]) -> Result<Vec<RecoveryRow>, ScoringError> {
    students(records)
        .iter()
        .map(|m| recovery_row(records, m))
        .collect()
}

/// Models that appear as students (anything but teacher-reference evals).
pub fn students(records: &[EvaluationRecord]) -> Vec<String> {
    let mut m: Vec<String> = records
        .iter()
        .filter(|r| r.scenario != Scenario::TeacherReference)
        .map(|r| r.eval_model.clone())
        .collect();
    m.sort();
    m.dedup();
    m
}

/// Mean accuracy with CI for one curve point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCell {
    pub eval_model: String,
    pub scenario: Scenario,
    pub domain: Option<Domain>,
    pub round: u32,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Per-round accuracy curves (percent) with bootstrap CIs over concepts.
pub fn curves(records: &[EvaluationRecord], resamples: usize, seed: u64) -> Vec<AggregateCell> {
    let mut keys: Vec<(String, Scenario, u32)> = records
        .iter()
        .map(|r| (r.eval_model.clone(), r.scenario, r.round))
        .collect();
    keys.sort();
    keys.dedup();
    let mut out = Vec::new();
    for (model, scenario, round) in keys {
        let s = series(records, &model, scenario, RoundPick::At(round));
        for (domain, values) in &s.by_domain {
            let pct: Vec<f64> = values.iter().map(|v| v * 100.0).collect();
            let ci = bootstrap_ci(&pct, DEFAULT_LEVEL, resamples, seed).expect("non-empty");
            out.push(AggregateCell {
                eval_model: model.clone(),
                scenario,
                domain: Some(*domain),
                round,
                mean: ci.mean,
                ci_low: ci.low,
                ci_high: ci.high,
                n: values.len(),
            });
        }
        let groups: Vec<Vec<f64>> = s
            .by_domain
            .values()
            .map(|v| v.iter().map(|x| x * 100.0).collect())
            .collect();
        if let Ok(ci) = stratified_bootstrap_ci(&groups, DEFAULT_LEVEL, resamples, seed) {
            out.push(AggregateCell {
                eval_model: model.clone(),
                scenario,
                domain: None,
                round,
                mean: ci.mean,
                ci_low: ci.low,
                ci_high: ci.high,
                n: s.n(),
            });
        }
    }
    out
}

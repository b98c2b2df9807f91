//! Per-round interaction features and the feature matrix.
//!
//! Column order is [`FEATURE_NAMES`]; the last column is the label. Every
//! feature of round `r` reads only rounds `1..=r` plus the round-0 and
//! round-`r-1` quiz scores, so the matrix never sees the label's own
//! evaluation except through `learning_gain`.

pub mod annotator;
pub mod embed;
pub mod metrics;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

pub use annotator::{Annotator, HeuristicAnnotator, Keywords};
pub use embed::{cosine, hash_embed, HashEmbedder};
pub use metrics::{depth_proxy, readability, type_token_ratio};

use crate::corpus::{ContextDocument, Domain};
use crate::dialogue::Transcript;
use crate::text::{content_words, raw_words, sentences, words};

pub const N_FEATURES: usize = 44;
pub const N_COLUMNS: usize = 45;

pub const FEATURE_NAMES: [&str; N_COLUMNS] = [
    // question-level
    "question_length",
    "question_complexity",
    "lexical_sophistication",
    "named_entity_count",
    "question_informativeness",
    "question_directness",
    "politeness_hedging",
    "question_type",
    "question_novelty",
    "question_specificity",
    // teacher-response-level
    "response_length",
    "info_density",
    "response_novelty",
    "response_correctness",
    "response_completeness",
    "response_complexity",
    "entity_diversity",
    "temporal_positioning",
    "use_of_examples",
    // interaction dynamics
    "turn_index",
    "cumulative_exposure",
    "student_adaptation",
    "teacher_adaptation",
    "information_gain",
    "topic_shifts",
    "unanswered_queries",
    "progressive_elaboration",
    // linguistic / style
    "lexical_diversity_student",
    "lexical_diversity_teacher",
    "domain_specific_terms",
    "sentence_length_variability",
    "readability_score",
    "passive_voice_count",
    "modal_language_count",
    // semantic
    "semantic_similarity_to_summary",
    "coreference_complexity",
    "semantic_cohesion",
    "coverage_of_key_plots",
    // performance / contextual
    "prior_knowledge_estimate",
    "student_confidence",
    "improvement_in_questions",
    "redundancy_in_answers",
    "politeness_social_cues",
    "meta_linguistic_feedback",
    // label
    "learning_gain",
];

pub const BINARY_FEATURES: &[&str] = &[
    "question_directness",
    "question_specificity",
    "response_completeness",
    "use_of_examples",
    "meta_linguistic_feedback",
];

pub const RATIO_FEATURES: &[&str] = &[
    "info_density",
    "question_novelty",
    "response_novelty",
    "response_correctness",
    "information_gain",
    "lexical_diversity_student",
    "lexical_diversity_teacher",
    "coverage_of_key_plots",
    "prior_knowledge_estimate",
    "redundancy_in_answers",
];

/// `question_type` codes: 0 = none, then these starters in order, then 8 =
/// an auxiliary opening a yes/no question.
pub const QUESTION_STARTERS: [&str; 7] = ["who", "what", "where", "when", "why", "how", "which"];
pub const YES_NO_OPENERS: &[&str] = &[
    "are", "can", "could", "did", "do", "does", "had", "has", "have", "is", "should", "was", "were",
    "will", "would",
];

pub const HEDGES: &[&str] = &[
    "could", "guess", "kindly", "maybe", "might", "perhaps", "please", "possibly", "probably",
    "seems", "somewhat", "wonder", "would",
];
pub const MODALS: &[&str] = &[
    "can", "could", "likely", "may", "maybe", "might", "must", "perhaps", "possibly", "probably",
    "shall", "should", "will", "would",
];
pub const TEMPORAL: &[&str] = &[
    "after", "afterward", "afterwards", "before", "century", "currently", "day", "days", "decade",
    "during", "earlier", "eventually", "finally", "first", "later", "meanwhile", "month", "months",
    "next", "now", "previously", "recently", "since", "soon", "then", "today", "tomorrow", "until",
    "week", "weeks", "when", "while", "year", "years", "yesterday",
];
pub const SOCIAL_CUES: &[&str] = &[
    "appreciate", "glad", "kindly", "please", "pleasure", "sorry", "thank", "thanks", "welcome",
];
pub const EXAMPLE_MARKERS: &[&str] = &["e.g.", "for example", "for instance", "such as", "to illustrate"];
pub const META_MARKERS: &[&str] = &[
    "as i mentioned",
    "as i said",
    "as mentioned",
    "as discussed",
    "as noted",
    "as we saw",
    "like i said",
    "you asked",
];

pub const KEY_TERMS: usize = 20;
pub const TOPIC_SHIFT_BELOW: f64 = 0.3;
pub const UNANSWERED_BELOW: f64 = 0.1;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{run_id}: round {round} has no question/answer pair")]
    MissingRound { run_id: String, round: u32 },
    #[error("{run_id}: no quiz evaluation for round {round}")]
    MissingEval { run_id: String, round: u32 },
    #[error("no context document for concept `{0}`")]
    MissingDoc(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_COLUMNS],
}

impl FeatureVector {
    pub fn column(name: &str) -> Option<usize> {
        FEATURE_NAMES.iter().position(|n| *n == name)
    }

    /// Panics on an unknown name.
    pub fn get(&self, name: &str) -> f64 {
        self.values[Self::column(name).unwrap_or_else(|| panic!("unknown feature `{name}`"))]
    }

    pub fn features(&self) -> &[f64] {
        &self.values[..N_FEATURES]
    }

    pub fn learning_gain(&self) -> f64 {
        self.values[N_FEATURES]
    }

    /// One-vs-rest expansion of `question_type`: slot `k-1` is set for code `k`.
    pub fn question_type_indicators(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        let code = self.get("question_type") as usize;
        if (1..=8).contains(&code) {
            out[code - 1] = 1.0;
        }
        out
    }
}

pub fn question_type(question: &str) -> usize {
    let Some(first) = words(question).into_iter().next() else {
        return 0;
    };
    if let Some(i) = QUESTION_STARTERS.iter().position(|s| *s == first) {
        return i + 1;
    }
    if YES_NO_OPENERS.contains(&first.as_str()) {
        return 8;
    }
    0
}

/// SQuAD-style token-overlap F1 on lowercased word multisets.
pub fn overlap_f1(a: &str, b: &str) -> f64 {
    let (wa, wb) = (words(a), words(b));
    if wa.is_empty() || wb.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in &wb {
        *counts.entry(w.as_str()).or_default() += 1;
    }
    let mut common = 0usize;
    for w in &wa {
        if let Some(c) = counts.get_mut(w.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / wa.len() as f64;
    let r = common as f64 / wb.len() as f64;
    2.0 * p * r / (p + r)
}

/// Text standing in for the concept: the body, or title and caption for images.
pub fn reference_text(doc: &ContextDocument) -> String {
    if !doc.body.trim().is_empty() {
        return doc.body.clone();
    }
    match &doc.caption {
        Some(c) => format!("{}. {}", doc.title, c),
        None => doc.title.clone(),
    }
}

/// Most frequent content words of `text`, ties alphabetical.
pub fn key_terms(text: &str, n: usize) -> Vec<String> {
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for w in content_words(text) {
        *freq.entry(w).or_default() += 1;
    }
    let mut v: Vec<(String, usize)> = freq.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().take(n).map(|(w, _)| w).collect()
}

fn count_in(ws: &[String], list: &[&str]) -> usize {
    ws.iter().filter(|w| list.contains(&w.as_str())).count()
}

fn contains_any(text: &str, markers: &[&str]) -> bool {
    let lower = text.to_lowercase();
    markers.iter().any(|m| lower.contains(m))
}

fn population_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn unique(ws: &[String]) -> BTreeSet<&str> {
    ws.iter().map(String::as_str).collect()
}

fn default_keywords() -> &'static Keywords {
    static K: OnceLock<Keywords> = OnceLock::new();
    K.get_or_init(Keywords::default)
}

/// Features of `round` with the bundled keyword lists.
pub fn extract_round_features(
    transcript: &Transcript,
    round: u32,
    doc: &ContextDocument,
    annotator: &dyn Annotator,
) -> Result<FeatureVector, FeatureError> {
    extract_round_features_with(transcript, round, doc, annotator, default_keywords())
}

pub fn extract_round_features_with(
    transcript: &Transcript,
    round: u32,
    doc: &ContextDocument,
    annotator: &dyn Annotator,
    keywords: &Keywords,
) -> Result<FeatureVector, FeatureError> {
    let run_id = transcript.run_id();
    let missing = |r| FeatureError::MissingRound {
        run_id: run_id.to_string(),
        round: r,
    };
    if round == 0 {
        return Err(missing(0));
    }
    let mut qs = Vec::with_capacity(round as usize);
    let mut answers = Vec::with_capacity(round as usize);
    for j in 1..=round {
        qs.push(transcript.question(j).ok_or_else(|| missing(j))?);
        answers.push(transcript.answer(j).ok_or_else(|| missing(j))?);
    }
    let acc = |r: u32| {
        transcript.accuracy(r).ok_or_else(|| FeatureError::MissingEval {
            run_id: run_id.to_string(),
            round: r,
        })
    };
    let acc_now = acc(round)?;
    let acc_prev = acc(round - 1)?;
    let acc_initial = acc(0)?;

    let domain = transcript.meta.domain;
    let kw = keywords.get(domain);
    let reference = reference_text(doc);
    let r = round as usize - 1;
    let (q, a) = (qs[r], answers[r]);
    let qw = words(q);
    let aw = words(a);
    let q_emb: Vec<Vec<f64>> = qs.iter().map(|t| annotator.embed(t)).collect();
    let a_emb: Vec<Vec<f64>> = answers.iter().map(|t| annotator.embed(t)).collect();
    let q_depth: Vec<f64> = qs.iter().map(|t| annotator.depth(t)).collect();
    let a_depth = annotator.depth(a);
    let q_entities = annotator.entities(q);
    let a_entities = annotator.entities(a);

    let novelty = |embs: &[Vec<f64>]| {
        let last = &embs[r];
        embs[..r]
            .iter()
            .map(|e| cosine(last, e))
            .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
            .map_or(1.0, |m| 1.0 - m.max(0.0))
    };

    let ref_sentences = sentences(&reference);
    let best = ref_sentences.iter().fold((None, -1.0), |(best, score), s| {
        let f = overlap_f1(q, s);
        if f > score { (Some(*s), f) } else { (best, score) }
    });
    let correctness = best.0.map_or(0.0, |s| overlap_f1(a, s));

    let exposure: BTreeSet<String> = answers.iter().flat_map(|t| words(t)).collect();
    let prev_a_depth = if r > 0 { annotator.depth(answers[r - 1]) } else { a_depth };
    let topic_shifts = (1..=r)
        .filter(|&j| cosine(&q_emb[j], &q_emb[j - 1]) < TOPIC_SHIFT_BELOW)
        .count();
    let unanswered = (0..r)
        .filter(|&j| overlap_f1(qs[j], answers[j]) < UNANSWERED_BELOW)
        .count();
    let lens: Vec<f64> = answers.iter().map(|t| words(t).len() as f64).collect();
    let elaboration = if r == 0 {
        0.0
    } else {
        lens[r] - lens[..r].iter().sum::<f64>() / r as f64
    };

    let sent_lens: Vec<f64> = sentences(a).iter().map(|s| raw_words(s).count() as f64).collect();
    let cohesion = if r == 0 {
        0.0
    } else {
        a_emb[..r].iter().map(|e| cosine(&a_emb[r], e)).sum::<f64>() / r as f64
    };
    let terms = key_terms(&reference, KEY_TERMS);
    let coverage = if terms.is_empty() {
        0.0
    } else {
        terms.iter().filter(|t| exposure.contains(*t)).count() as f64 / terms.len() as f64
    };
    let a_unique = unique(&aw);
    let earlier: BTreeSet<String> = answers[..r].iter().flat_map(|t| words(t)).collect();
    let redundancy = if r == 0 || a_unique.is_empty() {
        0.0
    } else {
        a_unique.iter().filter(|w| earlier.contains(**w)).count() as f64 / a_unique.len() as f64
    };
    let content = aw.iter().filter(|w| !crate::text::is_stopword(w) && w.chars().any(char::is_alphabetic)).count();
    let mean_len = |ws: &[String]| {
        if ws.is_empty() {
            0.0
        } else {
            ws.iter().map(|w| w.chars().count()).sum::<usize>() as f64 / ws.len() as f64
        }
    };
    let flesch = metrics::readability_with(a, |w| annotator.syllables(w));
    let binary = |b: bool| if b { 1.0 } else { 0.0 };
    let entity_names: BTreeSet<&str> = a_entities.iter().map(|e| e.1.as_str()).collect();

    let values = [
        qw.len() as f64,
        q_depth[r],
        mean_len(&qw),
        q_entities.len() as f64,
        unique(&qw).iter().filter(|w| kw.contains(**w)).count() as f64,
        binary(q.contains('?')),
        count_in(&qw, HEDGES) as f64,
        question_type(q) as f64,
        novelty(&q_emb),
        binary(!q_entities.is_empty()),
        aw.len() as f64,
        if aw.is_empty() { 0.0 } else { content as f64 / aw.len() as f64 },
        novelty(&a_emb),
        correctness,
        binary(correctness > 0.5),
        a_depth,
        entity_names.len() as f64,
        count_in(&aw, TEMPORAL) as f64,
        binary(contains_any(a, EXAMPLE_MARKERS)),
        round as f64,
        exposure.len() as f64,
        if r == 0 { 0.0 } else { q_depth[r] - q_depth[r - 1] },
        a_depth - prev_a_depth,
        if r == 0 { 1.0 } else { 1.0 - cosine(&a_emb[r], &a_emb[r - 1]).max(0.0) },
        topic_shifts as f64,
        unanswered as f64,
        elaboration,
        type_token_ratio(q),
        type_token_ratio(a),
        aw.iter().filter(|w| kw.contains(w.as_str())).count() as f64,
        population_std(&sent_lens),
        flesch,
        annotator.passive_count(a) as f64,
        count_in(&aw, MODALS) as f64,
        cosine(&a_emb[r], &annotator.embed(&reference)),
        annotator.coreference(a) as f64,
        cohesion,
        coverage,
        acc_initial,
        100.0 * acc_prev,
        q_depth[r] - q_depth[0],
        redundancy,
        (count_in(&qw, SOCIAL_CUES) + count_in(&aw, SOCIAL_CUES)) as f64,
        binary(contains_any(a, META_MARKERS)),
        acc_now - acc_prev,
    ];
    Ok(FeatureVector { values })
}

/// Identifies the run and round behind a matrix row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowKey {
    pub run_id: String,
    pub concept_id: String,
    pub domain: Domain,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub keys: Vec<RowKey>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn x(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features().to_vec()).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.rows.iter().map(FeatureVector::learning_gain).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FeatureError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(FEATURE_NAMES)?;
        for row in &self.rows {
            out.write_record(row.values.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_index_csv<W: Write>(&self, w: W) -> Result<(), FeatureError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run_id", "concept_id", "domain", "round"])?;
        for k in &self.keys {
            out.write_record([&k.run_id, &k.concept_id, k.domain.as_str(), &k.round.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Writes `features.csv` and `features_index.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), FeatureError> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("features.csv"))?)?;
        self.write_index_csv(std::fs::File::create(dir.join("features_index.csv"))?)?;
        Ok(())
    }

    /// Reads a matrix written by [`FeatureMatrix::save`].
    pub fn load(dir: &Path) -> Result<Self, FeatureError> {
        let mut rows = Vec::new();
        let mut rdr = csv::Reader::from_path(dir.join("features.csv"))?;
        let header = rdr.headers()?.clone();
        if header.iter().ne(FEATURE_NAMES.iter().copied()) {
            return Err(FeatureError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "features.csv header does not match the expected columns",
            )));
        }
        for rec in rdr.records() {
            let rec = rec?;
            let mut values = [0.0; N_COLUMNS];
            for (v, s) in values.iter_mut().zip(rec.iter()) {
                *v = s.parse().map_err(|_| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad number `{s}`"))
                })?;
            }
            rows.push(FeatureVector { values });
        }
        let mut keys = Vec::new();
        let mut rdr = csv::Reader::from_path(dir.join("features_index.csv"))?;
        for rec in rdr.records() {
            let rec = rec?;
            let bad = |what: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, what.to_string());
            keys.push(RowKey {
                run_id: rec[0].to_string(),
                concept_id: rec[1].to_string(),
                domain: rec[2].parse().map_err(|e: String| bad(&e))?,
                round: rec[3].parse().map_err(|_| bad("bad round"))?,
            });
        }
        if keys.len() != rows.len() {
            return Err(FeatureError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "features.csv and features_index.csv differ in length",
            )));
        }
        Ok(FeatureMatrix { keys, rows })
    }
}

/// One row per `(run, round >= 1)` whose question, answer and the quiz
/// scores at rounds 0, `r-1` and `r` are all present; other rounds are
/// skipped. Rows follow transcript order, then round.
pub fn build_feature_matrix(
    transcripts: &[Transcript],
    docs: &BTreeMap<String, ContextDocument>,
    annotator: &dyn Annotator,
) -> Result<FeatureMatrix, FeatureError> {
    build_feature_matrix_with(transcripts, docs, annotator, default_keywords())
}

pub fn build_feature_matrix_with(
    transcripts: &[Transcript],
    docs: &BTreeMap<String, ContextDocument>,
    annotator: &dyn Annotator,
    keywords: &Keywords,
) -> Result<FeatureMatrix, FeatureError> {
    let mut jobs = Vec::new();
    for t in transcripts {
        let doc = docs
            .get(t.concept_id())
            .ok_or_else(|| FeatureError::MissingDoc(t.concept_id().to_string()))?;
        for r in 1..=t.completed_rounds() {
            let ready = t.question(r).is_some()
                && t.answer(r).is_some()
                && [0, r - 1, r].iter().all(|&k| t.accuracy(k).is_some());
            if ready {
                jobs.push((t, doc, r));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|(t, doc, r)| extract_round_features_with(t, *r, doc, annotator, keywords))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = jobs
        .iter()
        .map(|(t, _, r)| RowKey {
            run_id: t.run_id().to_string(),
            concept_id: t.concept_id().to_string(),
            domain: t.meta.domain,
            round: *r,
        })
        .collect();
    Ok(FeatureMatrix { keys, rows })
}

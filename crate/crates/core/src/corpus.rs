//! Concept corpora: loading, validation, truncation and summary statistics.
//!
//! A corpus manifest is a JSON file listing one context document per concept.
//! Text documents must be published strictly after the manifest's cutoff date;
//! image documents are exempt and carry a file path instead of a body.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cutoff: everything must postdate December 2023.
pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 12, 31).unwrap()
}

/// Word budget applied to academic papers at load time.
pub const ACADEMIC_PAPER_MAX_WORDS: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    SongLyrics,
    NewsArticles,
    MoviePlots,
    AcademicPapers,
    Images,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::SongLyrics,
        Domain::NewsArticles,
        Domain::MoviePlots,
        Domain::AcademicPapers,
        Domain::Images,
    ];

    pub fn is_text(self) -> bool {
        self != Domain::Images
    }

    /// The serialized (manifest) name.
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::SongLyrics => "song_lyrics",
            Domain::NewsArticles => "news_articles",
            Domain::MoviePlots => "movie_plots",
            Domain::AcademicPapers => "academic_papers",
            Domain::Images => "images",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Domain::SongLyrics => "Song Lyrics",
            Domain::NewsArticles => "News Articles",
            Domain::MoviePlots => "Movie Plots",
            Domain::AcademicPapers => "Academic Papers",
            Domain::Images => "Images",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown domain `{s}`"))
    }
}

/// One concept's ground-truth material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub id: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomain: Option<String>,
    pub title: String,
    pub source_url: String,
    pub published_at: NaiveDate,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    /// Always recomputed from `body` on load.
    #[serde(default)]
    pub word_count: usize,
}

impl ContextDocument {
    pub fn text(
        id: impl Into<String>,
        domain: Domain,
        title: impl Into<String>,
        published_at: NaiveDate,
        body: impl Into<String>,
    ) -> Self {
        let body = body.into();
        ContextDocument {
            id: id.into(),
            domain,
            subdomain: None,
            title: title.into(),
            source_url: String::new(),
            published_at,
            word_count: count_words(&body),
            body,
            image_path: None,
            caption: None,
        }
    }

    pub fn image(
        id: impl Into<String>,
        title: impl Into<String>,
        published_at: NaiveDate,
        image_path: impl Into<PathBuf>,
    ) -> Self {
        ContextDocument {
            id: id.into(),
            domain: Domain::Images,
            subdomain: None,
            title: title.into(),
            source_url: String::new(),
            published_at,
            body: String::new(),
            image_path: Some(image_path.into()),
            caption: None,
            word_count: 0,
        }
    }

    pub fn with_subdomain(mut self, subdomain: impl Into<String>) -> Self {
        self.subdomain = Some(subdomain.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub cutoff_date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
    pub contexts: Vec<ContextDocument>,
}

impl CorpusManifest {
    pub fn new(contexts: Vec<ContextDocument>) -> Self {
        CorpusManifest {
            cutoff_date: default_cutoff(),
            created_at: None,
            contexts,
        }
    }

    pub fn get(&self, id: &str) -> Option<&ContextDocument> {
        self.contexts.iter().find(|c| c.id == id)
    }

    /// Context count per domain, including zero entries for absent domains.
    pub fn domain_counts(&self) -> BTreeMap<Domain, usize> {
        let mut counts: BTreeMap<Domain, usize> = Domain::ALL.iter().map(|d| (*d, 0)).collect();
        for c in &self.contexts {
            *counts.entry(c.domain).or_default() += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    DuplicateId(String),
    BeforeCutoff { id: String, published_at: NaiveDate, cutoff: NaiveDate },
    MissingBody(String),
    MissingImage(String),
    UnexpectedImage(String),
    UnexpectedBody(String),
    EmptyId,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::DuplicateId(id) => write!(f, "{id}: duplicate context id"),
            ValidationIssue::BeforeCutoff { id, published_at, cutoff } => write!(
                f,
                "{id}: published {published_at} is not after the cutoff {cutoff}"
            ),
            ValidationIssue::MissingBody(id) => write!(f, "{id}: text document has an empty body"),
            ValidationIssue::MissingImage(id) => write!(f, "{id}: image document has no image_path"),
            ValidationIssue::UnexpectedImage(id) => {
                write!(f, "{id}: text document must not carry an image_path")
            }
            ValidationIssue::UnexpectedBody(id) => write!(f, "{id}: image document must not carry a body"),
            ValidationIssue::EmptyId => write!(f, "context with an empty id"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("manifest failed validation:\n{}", format_issues(.0))]
    Validation(Vec<ValidationIssue>),
    #[error("{0} is an image document and cannot be truncated")]
    Domain(String),
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Per-domain word budgets applied while loading.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub max_words: BTreeMap<Domain, usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_words: BTreeMap::from([(Domain::AcademicPapers, ACADEMIC_PAPER_MAX_WORDS)]),
        }
    }
}

pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    load_manifest_with(path, &LoadOptions::default())
}

pub fn load_manifest_with(path: &Path, opts: &LoadOptions) -> Result<CorpusManifest, CorpusError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&raw, opts)
}

pub fn parse_manifest(raw: &str, opts: &LoadOptions) -> Result<CorpusManifest, CorpusError> {
    #[derive(Deserialize)]
    struct RawManifest {
        #[serde(default = "default_cutoff")]
        cutoff_date: NaiveDate,
        #[serde(default)]
        created_at: Option<DateTime<Utc>>,
        contexts: Vec<ContextDocument>,
    }

    let parsed: RawManifest = serde_json::from_str(raw)?;
    let mut manifest = CorpusManifest {
        cutoff_date: parsed.cutoff_date,
        created_at: parsed.created_at,
        contexts: parsed.contexts,
    };
    for doc in &mut manifest.contexts {
        match opts.max_words.get(&doc.domain) {
            Some(&limit) if doc.domain.is_text() => truncate_in_place(doc, limit),
            _ => doc.word_count = count_words(&doc.body),
        }
    }
    validate(&manifest)?;
    Ok(manifest)
}

/// Check every document invariant, collecting all issues.
pub fn validate(manifest: &CorpusManifest) -> Result<(), CorpusError> {
    let issues = validation_issues(manifest);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(CorpusError::Validation(issues))
    }
}

pub fn validation_issues(manifest: &CorpusManifest) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for doc in &manifest.contexts {
        if doc.id.trim().is_empty() {
            issues.push(ValidationIssue::EmptyId);
        } else if !seen.insert(doc.id.as_str()) {
            issues.push(ValidationIssue::DuplicateId(doc.id.clone()));
        }
        if doc.domain.is_text() {
            if doc.body.trim().is_empty() {
                issues.push(ValidationIssue::MissingBody(doc.id.clone()));
            }
            if doc.image_path.is_some() {
                issues.push(ValidationIssue::UnexpectedImage(doc.id.clone()));
            }
            if doc.published_at <= manifest.cutoff_date {
                issues.push(ValidationIssue::BeforeCutoff {
                    id: doc.id.clone(),
                    published_at: doc.published_at,
                    cutoff: manifest.cutoff_date,
                });
            }
        } else {
            if doc.image_path.is_none() {
                issues.push(ValidationIssue::MissingImage(doc.id.clone()));
            }
            if !doc.body.is_empty() {
                issues.push(ValidationIssue::UnexpectedBody(doc.id.clone()));
            }
        }
    }
    issues
}

/// Canonical serialized form: pretty JSON with a trailing newline.
pub fn manifest_to_string(manifest: &CorpusManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn write_manifest(manifest: &CorpusManifest, path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, manifest_to_string(manifest)).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Keep the first `max_words` whitespace tokens, joined by single spaces.
/// Bodies already within the budget are returned untouched.
pub fn truncate_document(
    doc: &ContextDocument,
    max_words: usize,
) -> Result<ContextDocument, CorpusError> {
    if !doc.domain.is_text() {
        return Err(CorpusError::Domain(doc.id.clone()));
    }
    let mut out = doc.clone();
    truncate_in_place(&mut out, max_words);
    Ok(out)
}

fn truncate_in_place(doc: &mut ContextDocument, max_words: usize) {
    if count_words(&doc.body) > max_words {
        doc.body = doc
            .body
            .split_whitespace()
            .take(max_words)
            .collect::<Vec<_>>()
            .join(" ");
    }
    doc.word_count = count_words(&doc.body);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub domain: Domain,
    /// `None` for the domain-level aggregate row.
    pub subdomain: Option<String>,
    pub count: usize,
    /// `None` for image domains, which have no body text.
    pub mean_word_count: Option<f64>,
}

impl StatsRow {
    pub fn display_mean(&self) -> String {
        match self.mean_word_count {
            Some(m) => format!("{m:.1}"),
            None => "-".to_string(),
        }
    }
}

/// One aggregate row per present domain, followed by its subdomain rows (sorted by name).
pub fn corpus_stats(manifest: &CorpusManifest) -> Vec<StatsRow> {
    let mut rows = Vec::new();
    for domain in Domain::ALL {
        let docs: Vec<&ContextDocument> =
            manifest.contexts.iter().filter(|c| c.domain == domain).collect();
        if docs.is_empty() {
            continue;
        }
        rows.push(stats_row(domain, None, &docs));
        let mut subdomains: BTreeMap<&str, Vec<&ContextDocument>> = BTreeMap::new();
        for d in &docs {
            if let Some(sub) = d.subdomain.as_deref() {
                subdomains.entry(sub).or_default().push(d);
            }
        }
        for (sub, members) in subdomains {
            rows.push(stats_row(domain, Some(sub.to_string()), &members));
        }
    }
    rows
}

fn stats_row(domain: Domain, subdomain: Option<String>, docs: &[&ContextDocument]) -> StatsRow {
    let mean = if domain.is_text() {
        let total: usize = docs.iter().map(|d| d.word_count).sum();
        Some(total as f64 / docs.len() as f64)
    } else {
        None
    };
    StatsRow {
        domain,
        subdomain,
        count: docs.len(),
        mean_word_count: mean,
    }
}

pub fn render_stats_markdown(rows: &[StatsRow]) -> String {
    let mut out = String::from("| Domain | Subdomain | Contexts | Avg. words |\n|---|---|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            r.domain.label(),
            r.subdomain.as_deref().unwrap_or("-"),
            r.count,
            r.display_mean()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn empty_manifest_has_zero_counts() {
        let m = parse_manifest(r#"{"cutoff_date":"2023-12-31","contexts":[]}"#, &LoadOptions::default())
            .unwrap();
        assert!(m.contexts.is_empty());
        assert!(m.domain_counts().values().all(|&c| c == 0));
        assert_eq!(m.domain_counts().len(), 5);
    }

    #[test]
    fn text_before_cutoff_is_rejected() {
        let raw = r#"{"cutoff_date":"2023-12-31","contexts":[
            {"id":"n1","domain":"news_articles","title":"t","source_url":"u",
             "published_at":"2023-11-01","body":"some text"}]}"#;
        match parse_manifest(raw, &LoadOptions::default()) {
            Err(CorpusError::Validation(issues)) => {
                assert!(matches!(&issues[0], ValidationIssue::BeforeCutoff { id, .. } if id == "n1"))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn cutoff_day_itself_is_rejected() {
        let mut m = CorpusManifest::new(vec![ContextDocument::text(
            "s",
            Domain::SongLyrics,
            "t",
            date(2023, 12, 31),
            "la la",
        )]);
        assert!(validate(&m).is_err());
        m.contexts[0].published_at = date(2024, 1, 1);
        assert!(validate(&m).is_ok());
    }

    #[test]
    fn images_are_exempt_from_cutoff() {
        let m = CorpusManifest::new(vec![ContextDocument::image("i", "img", date(2014, 5, 1), "a.jpg")]);
        assert!(validate(&m).is_ok());
    }

    #[test]
    fn duplicate_ids_and_missing_payloads() {
        let m = CorpusManifest::new(vec![
            ContextDocument::text("a", Domain::MoviePlots, "t", date(2024, 2, 1), "x"),
            ContextDocument::text("a", Domain::MoviePlots, "t", date(2024, 2, 1), "   "),
            ContextDocument {
                image_path: None,
                ..ContextDocument::image("i", "img", date(2024, 2, 1), "a.jpg")
            },
        ]);
        let issues = validation_issues(&m);
        assert!(issues.contains(&ValidationIssue::DuplicateId("a".into())));
        assert!(issues.contains(&ValidationIssue::MissingBody("a".into())));
        assert!(issues.contains(&ValidationIssue::MissingImage("i".into())));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            parse_manifest("{not json", &LoadOptions::default()),
            Err(CorpusError::Parse(_))
        ));
    }

    #[test]
    fn truncation_examples() {
        let long = ContextDocument::text("p", Domain::AcademicPapers, "t", date(2024, 10, 1), words(2000));
        let t = truncate_document(&long, 1500).unwrap();
        assert_eq!(t.word_count, 1500);
        assert_eq!(count_words(&t.body), 1500);
        assert!(t.body.starts_with("w0 w1 w2"));
        assert!(t.body.ends_with("w1499"));

        let short = ContextDocument::text("q", Domain::AcademicPapers, "t", date(2024, 10, 1), words(100));
        assert_eq!(truncate_document(&short, 1500).unwrap(), short);

        let ws = ContextDocument::text("r", Domain::NewsArticles, "t", date(2024, 10, 1), "a  b\tc");
        let t = truncate_document(&ws, 2).unwrap();
        assert_eq!(t.body, "a b");
        assert_eq!(t.word_count, 2);
    }

    #[test]
    fn truncating_images_is_a_domain_error() {
        let img = ContextDocument::image("i", "img", date(2024, 1, 2), "a.jpg");
        assert!(matches!(truncate_document(&img, 10), Err(CorpusError::Domain(_))));
    }

    #[test]
    fn load_truncates_academic_papers() {
        let doc = ContextDocument::text("p", Domain::AcademicPapers, "t", date(2024, 10, 1), words(1600));
        let raw = manifest_to_string(&CorpusManifest::new(vec![doc]));
        let m = parse_manifest(&raw, &LoadOptions::default()).unwrap();
        assert_eq!(m.contexts[0].word_count, 1500);
    }

    #[test]
    fn stats_rows() {
        let m = CorpusManifest::new(vec![
            ContextDocument::text("s", Domain::SongLyrics, "t", date(2024, 3, 1), words(300)),
            ContextDocument::text("n1", Domain::NewsArticles, "t", date(2024, 3, 1), words(1000))
                .with_subdomain("Sports"),
            ContextDocument::text("n2", Domain::NewsArticles, "t", date(2024, 3, 1), words(1200))
                .with_subdomain("Sports"),
            ContextDocument::image("i", "img", date(2014, 1, 1), "x.png"),
        ]);
        let rows = corpus_stats(&m);
        assert_eq!(rows[0].domain, Domain::SongLyrics);
        assert_eq!(rows[0].subdomain, None);
        assert_eq!(rows[0].count, 1);
        assert_eq!(rows[0].display_mean(), "300.0");
        assert_eq!(rows[1].mean_word_count, Some(1100.0));
        assert_eq!(rows[2].subdomain.as_deref(), Some("Sports"));
        assert_eq!(rows[3].domain, Domain::Images);
        assert_eq!(rows[3].display_mean(), "-");
    }

    #[test]
    fn paper_scale_composition_counts() {
        let mut contexts = Vec::new();
        let composition = [
            (Domain::SongLyrics, 467),
            (Domain::NewsArticles, 346),
            (Domain::MoviePlots, 214),
            (Domain::AcademicPapers, 170),
            (Domain::Images, 150),
        ];
        for (domain, n) in composition {
            for i in 0..n {
                let id = format!("{domain}-{i}");
                contexts.push(if domain.is_text() {
                    ContextDocument::text(id, domain, "t", date(2024, 6, 1), "body words")
                } else {
                    ContextDocument::image(id, "t", date(2015, 6, 1), "img.jpg")
                });
            }
        }
        let raw = manifest_to_string(&CorpusManifest::new(contexts));
        let m = parse_manifest(&raw, &LoadOptions::default()).unwrap();
        let counts = m.domain_counts();
        for (domain, n) in composition {
            assert_eq!(counts[&domain], n);
        }
        assert_eq!(m.contexts.len(), 1347);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_body() -> impl Strategy<Value = String> {
            proptest::collection::vec("[a-zA-Z0-9éü,.]{1,8}", 1..60)
                .prop_flat_map(|ws| {
                    let n = ws.len();
                    (Just(ws), proptest::collection::vec(prop_oneof![Just(" "), Just("  "), Just("\t"), Just("\n")], n))
                })
                .prop_map(|(ws, seps)| {
                    ws.iter().zip(seps).map(|(w, s)| format!("{w}{s}")).collect::<String>()
                })
        }

        proptest! {
            #[test]
            fn truncation_is_idempotent(body in arb_body(), limit in 1usize..40) {
                let doc = ContextDocument::text("x", Domain::NewsArticles, "t", date(2024, 5, 5), body);
                let once = truncate_document(&doc, limit).unwrap();
                let twice = truncate_document(&once, limit).unwrap();
                prop_assert!(once.word_count <= limit);
                prop_assert_eq!(&once, &twice);
                let orig: Vec<&str> = doc.body.split_whitespace().collect();
                let kept: Vec<&str> = once.body.split_whitespace().collect();
                prop_assert_eq!(&orig[..kept.len()], &kept[..]);
            }

            #[test]
            fn manifest_round_trip(bodies in proptest::collection::vec(arb_body(), 0..6), days in 1i64..900) {
                let contexts = bodies.into_iter().enumerate().map(|(i, b)| {
                    ContextDocument::text(format!("c{i}"), Domain::ALL[i % 4], "title", date(2024, 1, 1) + chrono::Duration::days(days), b)
                }).collect();
                let m = parse_manifest(&manifest_to_string(&CorpusManifest::new(contexts)), &LoadOptions::default()).unwrap();
                let s1 = manifest_to_string(&m);
                let m2 = parse_manifest(&s1, &LoadOptions::default()).unwrap();
                prop_assert_eq!(&m, &m2);
                prop_assert_eq!(s1, manifest_to_string(&m2));
            }

            #[test]
            fn cutoff_rule(offset in -400i64..400, image in any::<bool>()) {
                let published = default_cutoff() + chrono::Duration::days(offset);
                let doc = if image {
                    ContextDocument::image("i", "t", published, "a.jpg")
                } else {
                    ContextDocument::text("t", Domain::MoviePlots, "t", published, "plot")
                };
                let ok = validate(&CorpusManifest::new(vec![doc])).is_ok();
                prop_assert_eq!(ok, image || offset > 0);
            }
        }
    }
}

//! Linguistic signals behind a swappable boundary.

use std::collections::BTreeSet;
use std::path::Path;

use super::embed::HashEmbedder;
use super::metrics;
use crate::corpus::Domain;

/// Source of the linguistic signals the extractor needs. Implementations
/// must be deterministic and safe to share across threads.
pub trait Annotator: Send + Sync {
    fn id(&self) -> &str;
    /// Entity mentions, as `(first token index, text)` in order.
    fn entities(&self, text: &str) -> Vec<(usize, String)>;
    fn depth(&self, text: &str) -> f64;
    fn passive_count(&self, text: &str) -> usize;
    fn syllables(&self, word: &str) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
    fn coreference(&self, text: &str) -> usize;
}

/// Rule-based stand-ins for parsing, NER and coreference tooling.
#[derive(Debug, Clone, Default)]
pub struct HeuristicAnnotator {
    pub embedder: HashEmbedder,
}

impl Annotator for HeuristicAnnotator {
    fn id(&self) -> &str {
        "heuristic-v1"
    }

    fn entities(&self, text: &str) -> Vec<(usize, String)> {
        metrics::entity_spans(text)
    }

    fn depth(&self, text: &str) -> f64 {
        metrics::depth_proxy(text)
    }

    fn passive_count(&self, text: &str) -> usize {
        metrics::passive_count(text)
    }

    fn syllables(&self, word: &str) -> usize {
        metrics::syllables(word)
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        self.embedder.embed(text)
    }

    fn coreference(&self, text: &str) -> usize {
        metrics::coreference_count(text)
    }
}

/// Per-domain keyword lists, one word per line.
#[derive(Debug, Clone)]
pub struct Keywords {
    sets: Vec<(Domain, BTreeSet<String>)>,
}

fn parse_list(raw: &str) -> BTreeSet<String> {
    raw.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

impl Default for Keywords {
    fn default() -> Self {
        let raw = [
            (Domain::SongLyrics, include_str!("../../data/keywords/song_lyrics.txt")),
            (Domain::NewsArticles, include_str!("../../data/keywords/news_articles.txt")),
            (Domain::MoviePlots, include_str!("../../data/keywords/movie_plots.txt")),
            (Domain::AcademicPapers, include_str!("../../data/keywords/academic_papers.txt")),
            (Domain::Images, include_str!("../../data/keywords/images.txt")),
        ];
        Keywords {
            sets: raw.into_iter().map(|(d, r)| (d, parse_list(r))).collect(),
        }
    }
}

impl Keywords {
    /// Bundled lists, with any `<dir>/<domain>.txt` replacing its default.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut k = Keywords::default();
        for (d, set) in &mut k.sets {
            let p = dir.join(format!("{}.txt", d.as_str()));
            if p.exists() {
                *set = parse_list(&std::fs::read_to_string(p)?);
            }
        }
        Ok(k)
    }

    pub fn get(&self, domain: Domain) -> &BTreeSet<String> {
        &self.sets.iter().find(|(d, _)| *d == domain).expect("every domain has a list").1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_load() {
        let k = Keywords::default();
        assert!(k.get(Domain::SongLyrics).contains("chorus"));
        assert!(k.get(Domain::MoviePlots).contains("protagonist"));
        for d in [Domain::NewsArticles, Domain::AcademicPapers, Domain::Images] {
            assert!(k.get(d).len() >= 20);
        }
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("images.txt"), "# custom\nPixel\n\n").unwrap();
        let k = Keywords::from_dir(dir.path()).unwrap();
        assert_eq!(k.get(Domain::Images).iter().collect::<Vec<_>>(), ["pixel"]);
        assert!(k.get(Domain::SongLyrics).contains("chorus"));
    }
}

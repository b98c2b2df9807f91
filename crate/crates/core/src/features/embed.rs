//! Signed feature-hashing embeddings.

use crate::text::words;
use crate::util::{fnv1a, fnv1a_with_basis, mix64};

pub const DEFAULT_DIM: usize = 256;
/// Offset basis for the sign hash; any value other than the FNV default works.
const SIGN_BASIS: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub bigrams: bool,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder {
            dim: DEFAULT_DIM,
            bigrams: true,
        }
    }
}

impl HashEmbedder {
    pub fn unigrams(dim: usize) -> Self {
        HashEmbedder { dim, bigrams: false }
    }

    /// Lowercased unigrams, then `"w1 w2"` bigrams.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let w = words(text);
        let mut out = w.clone();
        if self.bigrams {
            out.extend(w.windows(2).map(|p| format!("{} {}", p[0], p[1])));
        }
        out
    }

    /// Bucket `H(t) mod dim`, sign from the parity of a second hash, then
    /// L2-normalized. Text without tokens maps to the zero vector.
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for t in self.tokens(text) {
            let idx = (mix64(fnv1a(t.as_bytes())) % self.dim as u64) as usize;
            let sign = if mix64(fnv1a_with_basis(t.as_bytes(), SIGN_BASIS)) & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

pub fn hash_embed(text: &str, dim: usize) -> Vec<f64> {
    HashEmbedder { dim, bigrams: true }.embed(text)
}

/// Cosine similarity; 0 when either vector is zero. Identical nonzero
/// inputs give exactly 1.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

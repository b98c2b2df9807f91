//! Random-forest regression for per-round learning gain.

pub mod tree;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tree::{Node, Tree};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GainModelError {
    #[error("need at least 2 rows, got {0}")]
    DegenerateData(usize),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} columns, row {row} has {found}")]
    ShapeMismatch { expected: usize, found: usize, row: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{n} rows cannot fill {k} folds")]
    TooFewRows { n: usize, k: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` means `ceil(p / 3)`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: None,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_features(&self, p: usize) -> usize {
        self.features_per_split.unwrap_or(p.div_ceil(3)).clamp(1, p.max(1))
    }

    fn validate(&self, p: usize) -> Result<(), GainModelError> {
        if self.n_trees == 0 {
            return Err(GainModelError::InvalidParams("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(GainModelError::InvalidParams("min_samples_leaf must be at least 1".into()));
        }
        if let Some(k) = self.features_per_split {
            if k == 0 || k > p {
                return Err(GainModelError::InvalidParams(format!(
                    "features_per_split {k} outside 1..={p}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub n_features: usize,
    pub params: ForestParams,
    pub trees: Vec<Tree>,
    pub feature_importances: Vec<f64>,
}

fn check_matrix(x: &[Vec<f64>], p: usize) -> Result<(), GainModelError> {
    for (row, r) in x.iter().enumerate() {
        if r.len() != p {
            return Err(GainModelError::ShapeMismatch {
                expected: p,
                found: r.len(),
                row,
            });
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(GainModelError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Generator for tree `i`: the forest seed on stream `i`, so each tree's
/// draws are independent of how trees are scheduled.
fn tree_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<ForestModel, GainModelError> {
    if x.len() != y.len() {
        return Err(GainModelError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(GainModelError::DegenerateData(n));
    }
    let p = x[0].len();
    check_matrix(x, p)?;
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(GainModelError::NonFinite { row, col: p });
    }
    params.validate(p)?;
    let settings = tree::TreeSettings {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: params.resolved_features(p),
    };
    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_rng(params.seed, i);
            let rows = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree::grow(x, y, rows, settings, &mut rng)
        })
        .collect();

    let mut importances = vec![0.0; p];
    for (_, g) in &grown {
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            importances.iter_mut().zip(g).for_each(|(acc, v)| *acc += v / total);
        }
    }
    let sum: f64 = importances.iter().sum();
    if sum > 0.0 {
        importances.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(ForestModel {
        version: MODEL_FORMAT_VERSION,
        n_features: p,
        params: params.clone(),
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        feature_importances: importances,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, GainModelError> {
        check_matrix(x, self.n_features)?;
        Ok(x.iter().map(|r| self.predict_row(r)).collect())
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn save(&self, path: &Path) -> Result<(), GainModelError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GainModelError> {
        let m: ForestModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(GainModelError::Version(m.version));
        }
        Ok(m)
    }

    /// `(name, importance)` sorted by importance, highest first; ties keep column order.
    pub fn ranked_importances<'a>(&self, names: &[&'a str]) -> Vec<(&'a str, f64)> {
        let mut v: Vec<(&str, f64)> = names.iter().copied().zip(self.feature_importances.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }
}

pub fn predict(model: &ForestModel, x: &[Vec<f64>]) -> Result<Vec<f64>, GainModelError> {
    model.predict(x)
}

/// Coefficient of determination. With constant targets the score is 1 for
/// a perfect prediction and 0 otherwise.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64, GainModelError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(GainModelError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Seeded shuffle; the last `round(test_fraction * n)` rows (at least one
/// on each side) become the test set.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1.min(n), n.saturating_sub(1));
    let test = idx.split_off(n - n_test);
    (idx, test)
}

/// Row `perm[i]` lands in fold `i % k`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (i, &row) in perm.iter().enumerate() {
        folds[row] = i % k;
    }
    folds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub params: ForestParams,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: ForestParams,
    pub best_index: usize,
    pub scores: Vec<GridScore>,
}

fn select(rows: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// k-fold grid search. The best point has the highest mean fold R²; ties
/// go to fewer trees, then shallower depth.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[f64],
    grid: &[ForestParams],
    k: usize,
    seed: u64,
) -> Result<CvResult, GainModelError> {
    if x.len() != y.len() {
        return Err(GainModelError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if k < 2 || n < k {
        return Err(GainModelError::TooFewRows { n, k });
    }
    if grid.is_empty() {
        return Err(GainModelError::InvalidParams("empty grid".into()));
    }
    let folds = fold_assignment(n, k, seed);
    let mut scores = Vec::with_capacity(grid.len());
    for params in grid {
        let mut fold_scores = Vec::with_capacity(k);
        for f in 0..k {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| folds[i] != f);
            let model = fit(&select(x, &train), &train.iter().map(|&i| y[i]).collect::<Vec<_>>(), params)?;
            let pred = model.predict(&select(x, &test))?;
            fold_scores.push(r2_score(&test.iter().map(|&i| y[i]).collect::<Vec<_>>(), &pred)?);
        }
        let mean = fold_scores.iter().sum::<f64>() / k as f64;
        scores.push(GridScore {
            params: params.clone(),
            fold_scores,
            mean,
        });
    }
    let depth_key = |d: Option<usize>| d.unwrap_or(usize::MAX);
    let best_index = (0..scores.len())
        .min_by(|&a, &b| {
            let (sa, sb) = (&scores[a], &scores[b]);
            sb.mean
                .total_cmp(&sa.mean)
                .then(sa.params.n_trees.cmp(&sb.params.n_trees))
                .then(depth_key(sa.params.max_depth).cmp(&depth_key(sb.params.max_depth)))
        })
        .expect("grid is non-empty");
    Ok(CvResult {
        best: scores[best_index].params.clone(),
        best_index,
        scores,
    })
}

/// Default search space: tree count, depth and leaf size.
pub fn default_grid(seed: u64) -> Vec<ForestParams> {
    let mut grid = Vec::new();
    for n_trees in [100, 200] {
        for max_depth in [Some(4), Some(8), None] {
            for min_samples_leaf in [2, 5] {
                grid.push(ForestParams {
                    n_trees,
                    max_depth,
                    min_samples_leaf,
                    seed,
                    ..ForestParams::default()
                });
            }
        }
    }
    grid
}

/// `y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + N(0, noise)` over uniform
/// `[0,1]^p` inputs; columns past the third carry no signal.
pub fn synthetic_benchmark(n: usize, p: usize, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    assert!(p >= 3, "the target uses three inputs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).expect("noise is a valid standard deviation");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
        let t = 10.0 * (std::f64::consts::PI * row[0] * row[1]).sin() + 20.0 * (row[2] - 0.5).powi(2);
        y.push(t + normal.sample(&mut rng));
        x.push(row);
    }
    (x, y)
}

/// Held-out evaluation used by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub train_rows: usize,
    pub test_rows: usize,
    pub r2: f64,
}

pub fn held_out_r2(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    test_fraction: f64,
    seed: u64,
) -> Result<(ForestModel, HeldOut), GainModelError> {
    if x.len() != y.len() {
        return Err(GainModelError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(GainModelError::DegenerateData(x.len()));
    }
    let (train, test) = train_test_split(x.len(), test_fraction, seed);
    let model = fit(&select(x, &train), &train.iter().map(|&i| y[i]).collect::<Vec<_>>(), params)?;
    let pred = model.predict(&select(x, &test))?;
    let r2 = r2_score(&test.iter().map(|&i| y[i]).collect::<Vec<_>>(), &pred)?;
    Ok((
        model,
        HeldOut {
            train_rows: train.len(),
            test_rows: test.len(),
            r2,
        },
    ))
}

//! Percentile bootstrap for the mean.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScoringError;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { mean: v, low: v, high: v }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolation quantile of sorted data (`(n-1)·q` positioning).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn percentile_interval(point: f64, mut stats: Vec<f64>, level: f64) -> Interval {
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let low = quantile_sorted(&stats, alpha);
    let high = quantile_sorted(&stats, 1.0 - alpha);
    // The percentile interval need not contain the point estimate for very
    // skewed small samples; widen to keep `low <= mean <= high`.
    Interval {
        mean: point,
        low: low.min(point),
        high: high.max(point),
    }
}

/// Percentile bootstrap CI of the mean: `resamples` draws with replacement,
/// bounds at the `(1-level)/2` and `(1+level)/2` quantiles of the resampled means.
pub fn bootstrap_ci(values: &[f64], level: f64, resamples: usize, seed: u64) -> Result<Interval, ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    let m = mean(values);
    if values.iter().all(|v| *v == values[0]) {
        return Ok(Interval::point(values[0]));
    }
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; n];
    let stats = (0..resamples.max(1))
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.random_range(0..n)];
            }
            mean(&buf)
        })
        .collect();
    Ok(percentile_interval(m, stats, level))
}

/// Bootstrap of a mean of group means, resampling within each group.
/// Used for "average over domains" aggregates.
pub fn stratified_bootstrap_ci(
    groups: &[Vec<f64>],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<Interval, ScoringError> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    if groups.is_empty() {
        return Err(ScoringError::EmptyInput);
    }
    let point = groups.iter().map(|g| mean(g)).sum::<f64>() / groups.len() as f64;
    if groups.iter().all(|g| g.iter().all(|v| *v == g[0])) {
        return Ok(Interval::point(point));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = (0..resamples.max(1))
        .map(|_| {
            let total: f64 = groups
                .iter()
                .map(|g| {
                    let s: f64 = (0..g.len()).map(|_| g[rng.random_range(0..g.len())]).sum();
                    s / g.len() as f64
                })
                .sum();
            total / groups.len() as f64
        })
        .collect();
    Ok(percentile_interval(point, stats, level))
}

//! CART regression tree with variance-reduction splits.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes stored flat; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeSettings {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Mean that does not depend on the order rows arrive in.
fn stable_mean(ys: &mut [f64]) -> f64 {
    ys.sort_by(f64::total_cmp);
    ys.iter().sum::<f64>() / ys.len() as f64
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows a tree over `rows` (indices into `x`, repeats allowed). Returns the
/// tree and the summed squared-error reduction credited to each feature.
pub(crate) fn grow<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    settings: TreeSettings,
    rng: &mut R,
) -> (Tree, Vec<f64>) {
    let p = x.first().map_or(0, Vec::len);
    let mut tree = Tree { nodes: Vec::new() };
    let mut gains = vec![0.0; p];
    build(x, y, rows, 0, settings, rng, &mut tree, &mut gains);
    (tree, gains)
}

#[allow(clippy::too_many_arguments)]
fn build<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    depth: usize,
    s: TreeSettings,
    rng: &mut R,
    tree: &mut Tree,
    gains: &mut [f64],
) -> usize {
    let id = tree.nodes.len();
    let mut ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let mean = stable_mean(&mut ys);
    tree.nodes.push(Node::Leaf { value: mean });

    let constant = ys.first() == ys.last();
    let depth_ok = s.max_depth.is_none_or(|d| depth < d);
    if constant || !depth_ok || rows.len() < 2 * s.min_samples_leaf {
        return id;
    }
    let Some(best) = best_split(x, y, &rows, mean, s, rng) else {
        return id;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][best.feature] <= best.threshold);
    gains[best.feature] += best.gain;
    let left = build(x, y, l, depth + 1, s, rng, tree, gains);
    let right = build(x, y, r, depth + 1, s, rng, tree, gains);
    tree.nodes[id] = Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    id
}

fn best_split<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    mean: f64,
    s: TreeSettings,
    rng: &mut R,
) -> Option<Best> {
    let p = x[0].len();
    let mut features: Vec<usize> = if s.features_per_split >= p {
        (0..p).collect()
    } else {
        sample(rng, p, s.features_per_split).into_vec()
    };
    features.sort_unstable();

    let n = rows.len();
    let mut best: Option<Best> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in &features {
        pairs.clear();
        // Centering keeps S^2/n terms small and the sums well conditioned.
        pairs.extend(rows.iter().map(|&r| (x[r][f], y[r] - mean)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let base = total * total / n as f64;
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            let nl = i + 1;
            let nr = n - nl;
            if pairs[i].0 == pairs[i + 1].0 || nl < s.min_samples_leaf || nr < s.min_samples_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let (a, b) = (pairs[i].0, pairs[i + 1].0);
                let mut threshold = a + (b - a) / 2.0;
                // Adjacent floats can have no midpoint strictly below b.
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Best {
                    gain,
                    feature: f,
                    threshold,
                });
            }
        }
    }
    best
}

//! Least-squares gradient-boosted regression trees.
//!
//! Each round fits a depth-limited tree to the current residuals. Splits
//! maximize the weighted variance reduction over pre-binned feature values
//! (at most 256 bins per feature, exact when a feature has fewer distinct
//! values). A child's histogram is built by scanning only the smaller child
//! and subtracting it from the parent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

const MAX_BINS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbrtError {
    #[error("{got} training rows, need at least {needed}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },
    #[error("row {row} has a non-finite value or weight")]
    NonFinite { row: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbrtConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbrtConfig {
    fn default() -> Self {
        GbrtConfig { rounds: 50, max_depth: 3, learning_rate: 0.1, min_samples_leaf: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        /// Weighted squared-error reduction achieved by this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    /// Adds each split's gain to `acc[feature]`.
    pub fn accumulate_gain(&self, acc: &mut [f64]) {
        fn walk(n: &TreeNode, acc: &mut [f64]) {
            if let TreeNode::Split { feature, gain, left, right, .. } = n {
                acc[*feature] += gain;
                walk(left, acc);
                walk(right, acc);
            }
        }
        walk(&self.root, acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    pub n_samples: usize,
    /// Weighted MSE after the base score and after each round.
    pub train_loss: Vec<f64>,
}

impl BoostedEnsemble {
    pub fn constant(value: f64, n_features: usize) -> Self {
        BoostedEnsemble {
            base_score: value,
            learning_rate: 0.0,
            trees: Vec::new(),
            n_features,
            n_samples: 0,
            train_loss: Vec::new(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// Per-feature bin edges plus the binned training matrix (column-major).
struct Binned {
    cuts: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    total_bins: usize,
    cols: Vec<Vec<u8>>,
}

impl Binned {
    fn new(x: &[&[f64]], n_features: usize) -> Self {
        let n = x.len();
        let mut cuts = Vec::with_capacity(n_features);
        let mut cols = Vec::with_capacity(n_features);
        let mut col = vec![0.0; n];
        for f in 0..n_features {
            for (i, row) in x.iter().enumerate() {
                col[i] = row[f];
            }
            let mut sorted = col.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            sorted.dedup();
            let c: Vec<f64> = if sorted.len() <= MAX_BINS {
                sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                // Quantile edges over the full (non-deduplicated) column.
                let mut all = col.clone();
                all.sort_by(|a, b| a.total_cmp(b));
                let mut c = Vec::with_capacity(MAX_BINS - 1);
                for k in 1..MAX_BINS {
                    let v = all[k * n / MAX_BINS];
                    let next = all.partition_point(|x| *x <= v);
                    if next < n {
                        let cut = 0.5 * (v + all[next]);
                        if c.last().is_none_or(|l| *l < cut) {
                            c.push(cut);
                        }
                    }
                }
                c
            };
            cols.push(col.iter().map(|v| c.partition_point(|cut| cut < v) as u8).collect());
            cuts.push(c);
        }
        let mut offsets = Vec::with_capacity(n_features);
        let mut total_bins = 0;
        for c in &cuts {
            offsets.push(total_bins);
            total_bins += c.len() + 1;
        }
        Binned { cuts, offsets, total_bins, cols }
    }
}

#[derive(Clone, Copy, Default)]
struct Bin {
    g: f64,
    w: f64,
    n: u32,
}

struct Grower<'a> {
    binned: &'a Binned,
    grad: &'a [f64],
    weight: &'a [f64],
    cfg: &'a GbrtConfig,
    min_gain: f64,
    /// Unshrunk leaf value per row, filled as leaves are created.
    leaf_of_row: Vec<f64>,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[u32]) -> Vec<Bin> {
        let mut h = vec![Bin::default(); self.binned.total_bins];
        for (f, col) in self.binned.cols.iter().enumerate() {
            let hf = &mut h[self.binned.offsets[f]..];
            for &r in rows {
                let r = r as usize;
                let b = &mut hf[col[r] as usize];
                b.g += self.grad[r];
                b.w += self.weight[r];
                b.n += 1;
            }
        }
        h
    }

    fn leaf(&mut self, rows: &[u32], g: f64, w: f64) -> TreeNode {
        let value = if w > 0.0 { g / w } else { 0.0 };
        for &r in rows {
            self.leaf_of_row[r as usize] = value;
        }
        TreeNode::Leaf { value }
    }

    fn grow(&mut self, rows: &mut [u32], hist: Vec<Bin>, depth: usize) -> TreeNode {
        let n_features = self.binned.cols.len();
        let root_bins = &hist[self.binned.offsets[0]..self.binned.offsets[0] + self.binned.cuts[0].len() + 1];
        let (g, w) = root_bins.iter().fold((0.0, 0.0), |(g, w), b| (g + b.g, w + b.w));
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        if depth >= self.cfg.max_depth || rows.len() < 2 * min_leaf || w <= 0.0 {
            return self.leaf(rows, g, w);
        }

        let parent_score = g * g / w;
        let mut best: Option<(f64, usize, usize)> = None;
        for f in 0..n_features {
            let nb = self.binned.cuts[f].len() + 1;
            let hf = &hist[self.binned.offsets[f]..self.binned.offsets[f] + nb];
            let (mut gl, mut wl, mut nl) = (0.0, 0.0, 0usize);
            for (b, bin) in hf.iter().enumerate().take(nb - 1) {
                gl += bin.g;
                wl += bin.w;
                nl += bin.n as usize;
                let nr = rows.len() - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let wr = w - wl;
                if wl <= 0.0 || wr <= 0.0 {
                    continue;
                }
                let gr = g - gl;
                let gain = gl * gl / wl + gr * gr / wr - parent_score;
                if best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, b));
                }
            }
        }
        let Some((gain, feature, bin)) = best.filter(|(gain, _, _)| *gain > self.min_gain) else {
            return self.leaf(rows, g, w);
        };

        let col = &self.binned.cols[feature];
        let mut split = 0;
        for i in 0..rows.len() {
            if col[rows[i] as usize] as usize <= bin {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(split);
        let (small_hist, small_is_left) = if left_rows.len() <= right_rows.len() {
            (self.histogram(left_rows), true)
        } else {
            (self.histogram(right_rows), false)
        };
        let mut large_hist = hist;
        for (l, s) in large_hist.iter_mut().zip(&small_hist) {
            l.g -= s.g;
            l.w -= s.w;
            l.n -= s.n;
        }
        let (left_hist, right_hist) =
            if small_is_left { (small_hist, large_hist) } else { (large_hist, small_hist) };
        let left = self.grow(left_rows, left_hist, depth + 1);
        let right = self.grow(right_rows, right_hist, depth + 1);
        TreeNode::Split {
            feature,
            threshold: self.binned.cuts[feature][bin],
            gain,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

fn weighted_mse(y: &[f64], pred: &[f64], w: &[f64], wsum: f64) -> f64 {
    y.iter().zip(pred).zip(w).map(|((y, p), w)| w * (y - p).powi(2)).sum::<f64>() / wsum
}

/// Fits a boosted ensemble on row-major features with per-row weights.
pub fn fit_matrix(x: &[&[f64]], y: &[f64], w: &[f64], cfg: &GbrtConfig) -> Result<BoostedEnsemble, GbrtError> {
    let n = x.len();
    assert_eq!(n, y.len());
    assert_eq!(n, w.len());
    let needed = cfg.min_samples_leaf.max(1);
    if n < needed {
        return Err(GbrtError::TooFewSamples { needed, got: n });
    }
    let n_features = x[0].len();
    for (row, xs) in x.iter().enumerate() {
        if xs.len() != n_features {
            return Err(GbrtError::RaggedRows { row, expected: n_features, got: xs.len() });
        }
        if !xs.iter().all(|v| v.is_finite()) || !y[row].is_finite() || !(w[row].is_finite() && w[row] >= 0.0) {
            return Err(GbrtError::NonFinite { row });
        }
    }
    let wsum: f64 = w.iter().sum();
    if wsum <= 0.0 {
        return Err(GbrtError::TooFewSamples { needed, got: 0 });
    }

    let all_equal = y.iter().all(|v| *v == y[0]);
    let base_score = if all_equal { y[0] } else { y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / wsum };
    let mut pred = vec![base_score; n];
    let mut train_loss = vec![weighted_mse(y, &pred, w, wsum)];
    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_gain = 1e-12 * wsum * (1.0 + y_scale * y_scale);

    let binned = Binned::new(x, n_features);
    let mut trees = Vec::with_capacity(cfg.rounds);
    let mut grad = vec![0.0; n];
    if !all_equal && n_features > 0 {
        for _ in 0..cfg.rounds {
            for i in 0..n {
                grad[i] = w[i] * (y[i] - pred[i]);
            }
            let mut grower = Grower {
                binned: &binned,
                grad: &grad,
                weight: w,
                cfg,
                min_gain,
                leaf_of_row: vec![0.0; n],
            };
            let mut rows: Vec<u32> = (0..n as u32).collect();
            let hist = grower.histogram(&rows);
            let root = grower.grow(&mut rows, hist, 0);
            let tree = RegressionTree { root };
            let is_stump = matches!(tree.root, TreeNode::Leaf { .. });
            for i in 0..n {
                pred[i] += cfg.learning_rate * grower.leaf_of_row[i];
            }
            trees.push(tree);
            train_loss.push(weighted_mse(y, &pred, w, wsum));
            if is_stump {
                // Residuals carry no further splittable structure.
                break;
            }
        }
    }

    Ok(BoostedEnsemble {
        base_score,
        learning_rate: cfg.learning_rate,
        trees,
        n_features,
        n_samples: n,
        train_loss,
    })
}

/// Fits on `(features, target, weight)` rows.
pub fn fit_gbrt(rows: &[(FeatureVector, f64, f64)], cfg: &GbrtConfig) -> Result<BoostedEnsemble, GbrtError> {
    let x: Vec<&[f64]> = rows.iter().map(|r| r.0.as_slice()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let w: Vec<f64> = rows.iter().map(|r| r.2).collect();
    fit_matrix(&x, &y, &w, cfg)
}

//! Weighted squared-error gradient boosting over histogram-binned features.
//!
//! Bin edges are midpoints between consecutive *distinct* feature values, so
//! they do not depend on sample multiplicities: an integer sample weight and
//! the corresponding physical duplication produce the same trees.
//!
//! Split gain (weighted-SSE reduction with L2 leaf shrinkage):
//!
//! ```text
//! gain = G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2)
//! ```
//!
//! with `G = sum w*r`, `H = sum w` over the node. A split is accepted only if
//! its gain exceeds `leaf_penalty`. Leaves take `G/(H+l2)`.

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, N_FEATURES};
use crate::error::{Error, Result};
use crate::par;

const MAX_BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf_weight: f64,
    /// Per-leaf structural penalty; the minimum gain a split must exceed.
    pub leaf_penalty: f64,
    /// L2 penalty on leaf values.
    pub l2: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: 6,
            min_leaf_weight: 1.0,
            leaf_penalty: 0.0,
            l2: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(Error::invalid_config("n_trees and max_depth must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid_config("learning_rate must lie in (0, 1]"));
        }
        if !(self.min_leaf_weight >= 0.0 && self.leaf_penalty >= 0.0 && self.l2 >= 0.0) {
            return Err(Error::invalid_config("penalties must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Loss reduction achieved by this split.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree stored as a flat node array; node 0 is the root.
/// Samples with `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x.0[*feature] <= *threshold { *left } else { *right },
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

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Additive tree ensemble: `base_score + learning_rate * sum_m T_m(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Mean per-tree loss reduction attributed to each feature.
    pub fn gain_importance(&self) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        if self.trees.is_empty() {
            return out;
        }
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, gain, .. } = n {
                    out[*feature] += gain;
                }
            }
        }
        let m = self.trees.len() as f64;
        out.iter_mut().for_each(|g| *g /= m);
        out
    }
}

/// Training trace returned next to the ensemble.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Weighted training MSE before the first tree and after each tree.
    pub loss: Vec<f64>,
    /// Sum of split gains over all trees, accumulated while training.
    pub total_gain: f64,
}

struct Binned {
    /// Per-feature split thresholds, ascending.
    cuts: Vec<Vec<f64>>,
    /// Column-major bin indices: `bins[f][row]`.
    bins: Vec<Vec<u8>>,
}

fn feature_cuts(values: &mut Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mids: Vec<f64> = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    if mids.len() < MAX_BINS {
        return mids;
    }
    // Evenly spaced subset of the distinct-value midpoints.
    let k = MAX_BINS - 1;
    let mut cuts: Vec<f64> = (0..k).map(|j| mids[(j * mids.len()) / k]).collect();
    cuts.dedup();
    cuts
}

fn bin_features(x: &[FeatureVector]) -> Binned {
    let cols: Vec<(Vec<f64>, Vec<u8>)> = par::map_range(N_FEATURES, |f| {
        let mut vals: Vec<f64> = x.iter().map(|r| r.0[f]).collect();
        let cuts = feature_cuts(&mut vals);
        let bins = x.iter().map(|r| cuts.partition_point(|&c| c < r.0[f]) as u8).collect();
        (cuts, bins)
    });
    let (cuts, bins) = cols.into_iter().unzip();
    Binned { cuts, bins }
}

#[derive(Clone, Copy, Default)]
struct Stat {
    g: f64,
    h: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

/// `a` beats `b` only if strictly better beyond rounding noise, so earlier
/// (lower feature, lower threshold) candidates win ties.
fn better(a: f64, b: f64) -> bool {
    a > b + 1e-12 * b.abs().max(1e-300)
}

struct Builder<'a> {
    data: &'a Binned,
    grad: &'a [f64],
    hess: &'a [f64],
    hp: &'a Hyperparams,
    nodes: Vec<Node>,
    total_gain: f64,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        let d = h + self.hp.l2;
        if d > 0.0 {
            g * g / d
        } else {
            0.0
        }
    }

    fn leaf(&self, g: f64, h: f64) -> f64 {
        let d = h + self.hp.l2;
        if d > 0.0 {
            g / d
        } else {
            0.0
        }
    }

    fn best_split(&self, rows: &[u32], g: f64, h: f64, node_loss: f64) -> Option<Candidate> {
        let parent = self.score(g, h);
        let per_feature: Vec<Option<Candidate>> = par::map_range(N_FEATURES, |f| {
            let n_bins = self.data.cuts[f].len() + 1;
            if n_bins < 2 {
                return None;
            }
            let col = &self.data.bins[f];
            let mut hist = vec![Stat::default(); n_bins];
            for &r in rows {
                let s = &mut hist[col[r as usize] as usize];
                s.g += self.grad[r as usize];
                s.h += self.hess[r as usize];
            }
            let mut best: Option<Candidate> = None;
            let (mut gl, mut hl) = (0.0, 0.0);
            for (b, s) in hist.iter().enumerate().take(n_bins - 1) {
                gl += s.g;
                hl += s.h;
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.hp.min_leaf_weight || hr < self.hp.min_leaf_weight || hl <= 0.0 || hr <= 0.0 {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gr, hr) - parent;
                if best.is_none_or(|c| better(gain, c.gain)) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        bin: b,
                    });
                }
            }
            best
        });
        let mut best: Option<Candidate> = None;
        for c in per_feature.into_iter().flatten() {
            if best.is_none_or(|b| better(c.gain, b.gain)) {
                best = Some(c);
            }
        }
        let floor = self.hp.leaf_penalty.max(1e-9 * node_loss);
        best.filter(|c| c.gain > floor)
    }

    fn grow(&mut self, rows: Vec<u32>, depth: usize) -> usize {
        let (mut g, mut h, mut loss) = (0.0, 0.0, 0.0);
        for &r in &rows {
            let (gr, hr) = (self.grad[r as usize], self.hess[r as usize]);
            g += gr;
            h += hr;
            if hr > 0.0 {
                loss += gr * gr / hr;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: self.leaf(g, h) });
        if depth >= self.hp.max_depth || rows.len() < 2 {
            return id;
        }
        let Some(split) = self.best_split(&rows, g, h, loss) else {
            return id;
        };
        let col = &self.data.bins[split.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            rows.into_iter().partition(|&r| (col[r as usize] as usize) <= split.bin);
        self.total_gain += split.gain;
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: self.data.cuts[split.feature][split.bin],
            left,
            right,
            gain: split.gain,
        };
        id
    }
}

fn weighted_mse(y: &[f64], pred: &[f64], w: &[f64], total_w: f64) -> f64 {
    y.iter()
        .zip(pred)
        .zip(w)
        .map(|((y, p), w)| w * (y - p) * (y - p))
        .sum::<f64>()
        / total_w
}

/// Fits a boosted ensemble to `(x, y)` with per-sample weights.
pub fn fit_gbt(x: &[FeatureVector], y: &[f64], weights: &[f64], hp: &Hyperparams) -> Result<(Ensemble, FitTrace)> {
    hp.validate()?;
    if x.len() < 2 || x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::invalid_input(
            "boosting needs at least two records with matching labels and weights",
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input(
            "weights must be finite and nonnegative, labels finite",
        ));
    }
    let total_w: f64 = weights.iter().sum();
    if !(total_w > 0.0) {
        return Err(Error::invalid_input("total sample weight must be positive"));
    }
    let base_score = y.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total_w;
    let data = bin_features(x);
    let mut pred = vec![base_score; x.len()];
    let mut grad = vec![0.0; x.len()];
    let mut trace = FitTrace {
        loss: vec![weighted_mse(y, &pred, weights, total_w)],
        total_gain: 0.0,
    };
    let all_rows: Vec<u32> = (0..x.len() as u32).filter(|&r| weights[r as usize] > 0.0).collect();
    let mut trees = Vec::with_capacity(hp.n_trees);
    for _ in 0..hp.n_trees {
        for i in 0..x.len() {
            grad[i] = weights[i] * (y[i] - pred[i]);
        }
        let mut b = Builder {
            data: &data,
            grad: &grad,
            hess: weights,
            hp,
            nodes: Vec::new(),
            total_gain: 0.0,
        };
        b.grow(all_rows.clone(), 0);
        trace.total_gain += b.total_gain;
        let tree = Tree { nodes: b.nodes };
        for (p, xi) in pred.iter_mut().zip(x) {
            *p += hp.learning_rate * tree.predict(xi);
        }
        let loss = weighted_mse(y, &pred, weights, total_w);
        let prev = *trace.loss.last().unwrap_or(&loss);
        if loss > prev + 1e-9 * prev.abs().max(1e-12) {
            return Err(Error::Consistency(format!(
                "training loss increased from {prev} to {loss}"
            )));
        }
        trace.loss.push(loss);
        trees.push(tree);
    }
    Ok((
        Ensemble {
            base_score,
            learning_rate: hp.learning_rate,
            trees,
        },
        trace,
    ))
}

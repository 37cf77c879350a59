//! Random-forest classifier with randomised axis-aligned splits.
//!
//! Each node draws a pool of candidate splits (uniform feature, threshold
//! uniform in the node's observed range) and keeps the one with the largest
//! information gain. Samples with `x[feature] <= threshold` go left.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::util::derive_seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForestError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} has {got} features, expected {expected}")]
    Dimension { index: usize, expected: usize, got: usize },
    #[error("target {target} of sample {index} is not below the class count {classes}")]
    Target { index: usize, target: usize, classes: usize },
    #[error("invalid forest parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree_count: usize,
    /// Candidates per node; `None` means `4 * ceil(sqrt(D))`.
    pub split_pool_size: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Train each tree on a same-size resample drawn with replacement.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { tree_count: 100, split_pool_size: None, min_leaf: 2, max_depth: None, bootstrap: true, seed: 0 }
    }
}

impl ForestParams {
    pub fn pool_size(&self, dims: usize) -> usize {
        self.split_pool_size.unwrap_or_else(|| 4 * (dims as f64).sqrt().ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Empirical class distribution; sums to one.
    Leaf { leaf: Vec<f64> },
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { leaf } => return leaf,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + rec(t, *left).max(rec(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        rec(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub num_features: usize,
    pub num_classes: usize,
    pub trees: Vec<Tree>,
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts.iter().filter(|&&c| c > 0).map(|&c| {
        let p = c as f64 / n;
        -p * p.log2()
    }).sum()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    params: &'a ForestParams,
    pool: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let mut dist = vec![0.0; self.classes];
        for &i in idx {
            dist[self.y[i]] += 1.0;
        }
        let n = idx.len() as f64;
        dist.iter_mut().for_each(|p| *p /= n);
        Node::Leaf { leaf: dist }
    }

    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Best `(gain, feature, threshold)` from a fresh candidate pool.
    fn best_split(&mut self, idx: &[usize]) -> Option<(f64, usize, f64)> {
        let parent = entropy(&self.counts(idx), idx.len());
        let dims = self.x[idx[0]].len();
        let mut best: Option<(f64, usize, f64)> = None;
        for _ in 0..self.pool {
            let f = self.rng.gen_range(0..dims);
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(self.x[i][f]), hi.max(self.x[i][f]))
            });
            if lo >= hi {
                continue;
            }
            let t = self.rng.gen_range(lo..hi);
            let mut left = vec![0; self.classes];
            let mut nl = 0;
            for &i in idx {
                if self.x[i][f] <= t {
                    left[self.y[i]] += 1;
                    nl += 1;
                }
            }
            let nr = idx.len() - nl;
            if nl < self.params.min_leaf || nr < self.params.min_leaf {
                continue;
            }
            let right: Vec<usize> = self.counts(idx).iter().zip(&left).map(|(a, b)| a - b).collect();
            let n = idx.len() as f64;
            let gain = parent - (nl as f64 / n) * entropy(&left, nl) - (nr as f64 / n) * entropy(&right, nr);
            if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                best = Some((gain, f, t));
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let capped = self.params.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || capped || idx.len() < 2 * self.params.min_leaf { None } else { self.best_split(&idx) };
        let Some((_, feature, threshold)) = split else {
            let leaf = self.leaf(&idx);
            self.nodes.push(leaf);
            return id;
        };
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

/// Trains `params.tree_count` trees; tree `t` uses seed
/// `derive_seed(params.seed, t)` so trees can be built in parallel.
pub fn train_forest(x: &[Vec<f64>], y: &[usize], classes: usize, params: &ForestParams) -> Result<Forest, ForestError> {
    if x.len() < 2 || y.len() != x.len() {
        return Err(ForestError::TooFewSamples(x.len().min(y.len())));
    }
    if params.tree_count == 0 || params.min_leaf == 0 {
        return Err(ForestError::Params("tree_count and min_leaf must be positive".into()));
    }
    let dims = x[0].len();
    for (index, row) in x.iter().enumerate() {
        if row.len() != dims {
            return Err(ForestError::Dimension { index, expected: dims, got: row.len() });
        }
    }
    if let Some(index) = y.iter().position(|&t| t >= classes) {
        return Err(ForestError::Target { index, target: y[index], classes });
    }
    let pool = params.pool_size(dims);
    let trees = (0..params.tree_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, t as u64));
            let idx: Vec<usize> = if params.bootstrap {
                (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect()
            } else {
                (0..x.len()).collect()
            };
            let mut b = Builder { x, y, classes, params, pool, rng, nodes: Vec::new() };
            b.grow(idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(Forest { params: *params, num_features: dims, num_classes: classes, trees })
}

impl Forest {
    /// Mean leaf distribution and its argmax; ties go to the lower class.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>), ForestError> {
        if x.len() != self.num_features {
            return Err(ForestError::Dimension { index: 0, expected: self.num_features, got: x.len() });
        }
        let mut dist = vec![0.0; self.num_classes];
        for t in &self.trees {
            for (d, &p) in dist.iter_mut().zip(t.leaf_for(x)) {
                *d += p;
            }
        }
        let n = self.trees.len() as f64;
        dist.iter_mut().for_each(|d| *d /= n);
        let mut best = 0;
        for (k, &p) in dist.iter().enumerate() {
            if p > dist[best] + 1e-12 {
                best = k;
            }
        }
        Ok((best, dist))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serialises")
    }
}

//! Synthetic problem-class generators.
//!
//! Each generator is a pure function of `(spec, seed)`. Sizes are drawn
//! uniformly from the class ranges so that instances of one class vary.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Factor, FactorGraph};
use crate::scalar::Energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    GridPotts,
    GridGeneral,
    FullPairwise,
    PartitionPotts,
    HigherOrderPattern,
    ChainTree,
    RandomIrregular,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 7] = [
        GeneratorKind::GridPotts,
        GeneratorKind::GridGeneral,
        GeneratorKind::FullPairwise,
        GeneratorKind::PartitionPotts,
        GeneratorKind::HigherOrderPattern,
        GeneratorKind::ChainTree,
        GeneratorKind::RandomIrregular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::GridPotts => "grid-potts",
            GeneratorKind::GridGeneral => "grid-general",
            GeneratorKind::FullPairwise => "full-pairwise",
            GeneratorKind::PartitionPotts => "partition-potts",
            GeneratorKind::HigherOrderPattern => "higher-order-pattern",
            GeneratorKind::ChainTree => "chain-tree",
            GeneratorKind::RandomIrregular => "random-irregular",
        }
    }

    /// Largest supported variable count.
    fn max_vars(self) -> usize {
        match self {
            GeneratorKind::PartitionPotts => 60,
            GeneratorKind::FullPairwise => 200,
            _ => 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("class `{class}`: {message}")]
    OutOfRange { class: String, message: String },
}

/// Parameters of one synthetic problem class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    /// Class tag written into generated models.
    pub name: String,
    pub generator: GeneratorKind,
    /// Inclusive range of variable counts. Grids use the largest
    /// `w x h <= n` with `w = floor(sqrt(n))`.
    pub vars: (usize, usize),
    /// Inclusive range of label counts (ignored for partitioning, which
    /// always uses one label per variable).
    pub labels: (usize, usize),
    /// Edge probability for random graphs and partitioning models.
    pub connectivity: f64,
    /// Inclusive range of pattern-factor orders (higher-order classes only).
    pub order: (usize, usize),
    pub unary_scale: f64,
    pub pairwise_scale: f64,
    pub higher_scale: f64,
}

impl ClassSpec {
    pub fn new(generator: GeneratorKind) -> Self {
        let (vars, labels, order) = match generator {
            GeneratorKind::GridPotts | GeneratorKind::GridGeneral => ((64, 144), (2, 6), (2, 2)),
            GeneratorKind::FullPairwise => ((8, 20), (3, 8), (2, 2)),
            GeneratorKind::PartitionPotts => ((8, 16), (8, 16), (2, 2)),
            GeneratorKind::HigherOrderPattern => ((64, 144), (2, 2), (3, 4)),
            GeneratorKind::ChainTree => ((20, 60), (3, 8), (2, 2)),
            GeneratorKind::RandomIrregular => ((20, 60), (3, 6), (2, 2)),
        };
        ClassSpec {
            name: generator.name().to_string(),
            generator,
            vars,
            labels,
            connectivity: 0.15,
            order,
            unary_scale: 1.0,
            pairwise_scale: 1.0,
            higher_scale: 1.0,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn vars(mut self, lo: usize, hi: usize) -> Self {
        self.vars = (lo, hi);
        self
    }

    pub fn labels(mut self, lo: usize, hi: usize) -> Self {
        self.labels = (lo, hi);
        self
    }

    pub fn order(mut self, lo: usize, hi: usize) -> Self {
        self.order = (lo, hi);
        self
    }

    pub fn connectivity(mut self, p: f64) -> Self {
        self.connectivity = p;
        self
    }

    pub fn scales(mut self, unary: f64, pairwise: f64, higher: f64) -> Self {
        self.unary_scale = unary;
        self.pairwise_scale = pairwise;
        self.higher_scale = higher;
        self
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let err = |message: String| Err(SpecError::OutOfRange { class: self.name.clone(), message });
        let g = self.generator;
        if self.vars.0 < 1 || self.vars.0 > self.vars.1 {
            return err(format!("empty variable range {:?}", self.vars));
        }
        if self.vars.1 > g.max_vars() {
            return err(format!("at most {} variables supported", g.max_vars()));
        }
        if matches!(g, GeneratorKind::GridPotts | GeneratorKind::GridGeneral | GeneratorKind::HigherOrderPattern)
            && self.vars.0 < 4
        {
            return err("grids need at least 4 variables".into());
        }
        if g != GeneratorKind::PartitionPotts
            && (self.labels.0 < 1 || self.labels.0 > self.labels.1 || self.labels.1 > 1000)
        {
            return err(format!("label range {:?} outside 1..=1000", self.labels));
        }
        if g == GeneratorKind::HigherOrderPattern {
            if self.order.0 < 3 || self.order.0 > self.order.1 || self.order.1 > 6 {
                return err(format!("pattern order range {:?} outside 3..=6", self.order));
            }
            if (self.labels.1 as f64).powi(self.order.1 as i32) > 4096.0 {
                return err("pattern tables larger than 4096 entries".into());
            }
        } else if self.order != (2, 2) {
            return err("factor order other than 2 is only supported for higher-order-pattern".into());
        }
        if !(0.0..=1.0).contains(&self.connectivity) {
            return err(format!("connectivity {} outside [0, 1]", self.connectivity));
        }
        for s in [self.unary_scale, self.pairwise_scale, self.higher_scale] {
            if !s.is_finite() || s < 0.0 {
                return err(format!("energy scale {s} must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Builds one instance of `spec`. Deterministic in `(spec, seed)`.
pub fn generate<T: Energy>(spec: &ClassSpec, seed: u64) -> Result<FactorGraph<T>, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(spec.vars.0..=spec.vars.1);
    let labels = rng.gen_range(spec.labels.0..=spec.labels.1);
    let mut b = Builder::default();
    match spec.generator {
        GeneratorKind::GridPotts => {
            let (w, h) = grid_dims(n);
            b.cards = vec![labels; w * h];
            b.random_unaries(&mut rng, spec.unary_scale);
            for (i, j) in grid_edges(w, h) {
                let wgt = spec.pairwise_scale * rng.gen_range(0.5..1.5);
                b.potts(i, j, labels, 0.0, wgt);
            }
        }
        GeneratorKind::GridGeneral => {
            let (w, h) = grid_dims(n);
            b.cards = vec![labels; w * h];
            b.random_unaries(&mut rng, spec.unary_scale);
            for (i, j) in grid_edges(w, h) {
                b.random_pair(&mut rng, i, j, spec.pairwise_scale);
            }
        }
        GeneratorKind::FullPairwise => {
            b.cards = vec![labels; n];
            b.random_unaries(&mut rng, spec.unary_scale);
            for i in 0..n {
                for j in i + 1..n {
                    b.random_pair(&mut rng, i, j, spec.pairwise_scale);
                }
            }
        }
        GeneratorKind::PartitionPotts => partition(&mut b, &mut rng, spec, n),
        GeneratorKind::HigherOrderPattern => pattern(&mut b, &mut rng, spec, n, labels),
        GeneratorKind::ChainTree => {
            b.cards = vec![labels; n];
            b.random_unaries(&mut rng, spec.unary_scale);
            for i in 1..n {
                let parent = rng.gen_range(i.saturating_sub(3)..i);
                b.random_pair(&mut rng, parent, i, spec.pairwise_scale);
            }
        }
        GeneratorKind::RandomIrregular => {
            b.cards = vec![labels; n];
            b.random_unaries(&mut rng, spec.unary_scale);
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(spec.connectivity) {
                        b.random_pair(&mut rng, i, j, spec.pairwise_scale);
                    }
                }
            }
        }
    }
    let gm = FactorGraph::new(b.cards, b.factors.into_iter().map(|(c, t)| {
        Factor::new(c, t.into_iter().map(T::lit).collect())
    }).collect())
    .expect("generators produce valid models");
    Ok(gm.with_class_tag(spec.name.clone()))
}

#[derive(Default)]
struct Builder {
    cards: Vec<usize>,
    factors: Vec<(Vec<usize>, Vec<f64>)>,
}

impl Builder {
    fn random_unaries(&mut self, rng: &mut ChaCha8Rng, scale: f64) {
        for v in 0..self.cards.len() {
            let t = (0..self.cards[v]).map(|_| scale * rng.gen::<f64>()).collect();
            self.factors.push((vec![v], t));
        }
    }

    fn potts(&mut self, i: usize, j: usize, l: usize, same: f64, diff: f64) {
        let mut t = vec![diff; l * l];
        for a in 0..l {
            t[a * l + a] = same;
        }
        self.factors.push((vec![i, j], t));
    }

    fn random_pair(&mut self, rng: &mut ChaCha8Rng, i: usize, j: usize, scale: f64) {
        let len = self.cards[i] * self.cards[j];
        let t = (0..len).map(|_| scale * rng.gen::<f64>()).collect();
        self.factors.push((vec![i, j], t));
    }
}

fn grid_dims(n: usize) -> (usize, usize) {
    let w = ((n as f64).sqrt().floor() as usize).max(1);
    (w, n / w)
}

/// Right and down neighbours of a `w x h` grid, row-major variables.
fn grid_edges(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * w * h);
    for r in 0..h {
        for c in 0..w {
            let v = r * w + c;
            if c + 1 < w {
                edges.push((v, v + 1));
            }
            if r + 1 < h {
                edges.push((v, v + w));
            }
        }
    }
    edges
}

/// Correlation-clustering model with a planted partition and no unaries.
fn partition(b: &mut Builder, rng: &mut ChaCha8Rng, spec: &ClassSpec, n: usize) {
    b.cards = vec![n; n];
    let k = rng.gen_range(2..=(n / 3).max(2));
    let planted: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    for i in 0..n {
        for j in i + 1..n {
            if !rng.gen_bool(spec.connectivity) {
                continue;
            }
            let w = spec.pairwise_scale * rng.gen_range(0.5..1.5);
            let attract = (planted[i] == planted[j]) != rng.gen_bool(0.1);
            b.potts(i, j, n, 0.0, if attract { w } else { -w });
        }
    }
}

/// Binary-texture style grid: noisy unaries, Potts smoothing and
/// pattern factors rewarding patches close to the clean image.
fn pattern(b: &mut Builder, rng: &mut ChaCha8Rng, spec: &ClassSpec, n: usize, labels: usize) {
    let (w, h) = grid_dims(n);
    b.cards = vec![labels; w * h];
    let period = rng.gen_range(2..=4);
    let clean: Vec<usize> = (0..w * h).map(|v| ((v % w) / period + (v / w) / period) % labels).collect();
    for (v, &truth) in clean.iter().enumerate() {
        let observed = if rng.gen_bool(0.2) { rng.gen_range(0..labels) } else { truth };
        let t = (0..labels)
            .map(|a| spec.unary_scale * (if a == observed { 0.0 } else { 1.0 } + 0.1 * rng.gen::<f64>()))
            .collect();
        b.factors.push((vec![v], t));
    }
    for (i, j) in grid_edges(w, h) {
        let wgt = spec.pairwise_scale * rng.gen_range(0.2..0.6);
        b.potts(i, j, labels, 0.0, wgt);
    }
    let k = rng.gen_range(spec.order.0..=spec.order.1);
    for clique in pattern_cliques(w, h, k) {
        let len = labels.pow(clique.len() as u32);
        let mut t = Vec::with_capacity(len);
        for idx in 0..len {
            let mut rem = idx;
            let mut mismatch = 0usize;
            for &v in clique.iter().rev() {
                if rem % labels != clean[v] {
                    mismatch += 1;
                }
                rem /= labels;
            }
            let frac = mismatch as f64 / clique.len() as f64;
            t.push(spec.higher_scale * (frac + 0.2 * rng.gen::<f64>()));
        }
        b.factors.push((clique, t));
    }
}

/// Non-overlapping cliques: 2x2 patches for order 4, horizontal runs otherwise.
fn pattern_cliques(w: usize, h: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 4 && w >= 2 && h >= 2 {
        for r in (0..h - 1).step_by(2) {
            for c in (0..w - 1).step_by(2) {
                let v = r * w + c;
                out.push(vec![v, v + 1, v + w, v + w + 1]);
            }
        }
    } else if k <= w {
        for r in 0..h {
            for c in (0..=w - k).step_by(k) {
                out.push((0..k).map(|d| r * w + c + d).collect());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::classify_factor;

    #[test]
    fn grid_potts_counts() {
        let spec = ClassSpec::new(GeneratorKind::GridPotts).vars(64, 64).labels(4, 4);
        let gm: FactorGraph<f64> = generate(&spec, 7).unwrap();
        assert_eq!(gm.num_vars(), 64);
        assert_eq!(gm.factors().iter().filter(|f| f.order() == 1).count(), 64);
        assert_eq!(gm.factors().iter().filter(|f| f.order() == 2).count(), 112);
        assert_eq!(gm.num_factors(), 176);
        assert!(gm.factors().iter().filter(|f| f.order() == 2).all(|f| classify_factor(f, &gm).potts));
        assert_eq!(gm.class_tag(), Some("grid-potts"));
    }

    #[test]
    fn partition_has_one_label_per_variable() {
        let spec = ClassSpec::new(GeneratorKind::PartitionPotts).vars(12, 12).connectivity(0.6);
        let gm: FactorGraph<f64> = generate(&spec, 3).unwrap();
        assert_eq!(gm.num_vars(), 12);
        assert!(gm.cards().iter().all(|&c| c == 12));
        assert!(gm.factors().iter().all(|f| f.order() == 2));
        let mut signs = (false, false);
        for f in gm.factors() {
            let c = classify_factor(f, &gm);
            assert!(c.potts);
            let (_, d) = c.potts_values.unwrap();
            if d > 0.0 { signs.0 = true } else { signs.1 = true }
        }
        assert!(signs.0 && signs.1, "expected mixed-sign e_diff");
    }

    #[test]
    fn chain_tree_is_a_tree() {
        let spec = ClassSpec::new(GeneratorKind::ChainTree).vars(5, 5);
        let gm: FactorGraph<f64> = generate(&spec, 11).unwrap();
        let pairs: Vec<_> = gm.factors().iter().filter(|f| f.order() == 2).collect();
        assert_eq!(pairs.len(), 4);
        // union-find: no pairwise factor closes a cycle
        let mut parent: Vec<usize> = (0..5).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for f in pairs {
            let (a, b) = (find(&mut parent, f.clique[0]), find(&mut parent, f.clique[1]));
            assert_ne!(a, b);
            parent[a] = b;
        }
    }

    #[test]
    fn higher_order_has_pattern_factors() {
        let spec = ClassSpec::new(GeneratorKind::HigherOrderPattern).vars(64, 64).order(4, 4);
        let gm: FactorGraph<f64> = generate(&spec, 1).unwrap();
        assert_eq!(gm.max_factor_order(), 4);
        assert_eq!(gm.factors().iter().filter(|f| f.order() == 4).count(), 16);
        let spec3 = spec.clone().order(3, 3);
        let gm3: FactorGraph<f64> = generate(&spec3, 1).unwrap();
        assert_eq!(gm3.max_factor_order(), 3);
    }

    #[test]
    fn deterministic_and_valid() {
        for g in GeneratorKind::ALL {
            let spec = ClassSpec::new(g);
            for seed in 0..3 {
                let a: FactorGraph<f64> = generate(&spec, seed).unwrap();
                let b: FactorGraph<f64> = generate(&spec, seed).unwrap();
                assert_eq!(a, b);
                assert!(a.validate().is_empty());
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ClassSpec::new(GeneratorKind::GridPotts).vars(10, 5).validate().is_err());
        assert!(ClassSpec::new(GeneratorKind::GridPotts).order(3, 3).validate().is_err());
        assert!(ClassSpec::new(GeneratorKind::PartitionPotts).vars(8, 500).validate().is_err());
        assert!(ClassSpec::new(GeneratorKind::HigherOrderPattern).labels(2, 20).validate().is_err());
        assert!(generate::<f64>(&ClassSpec::new(GeneratorKind::ChainTree).labels(0, 0), 0).is_err());
    }
}

//! Feature-blind baselines and the superclass heuristic they route on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{classify_factor, FactorGraph};
use crate::inference::AlgorithmName;
use crate::scalar::Energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Superclass {
    Pairwise,
    HigherOrder,
    Partitioning,
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Partitioning when there are no unaries, every other factor is Potts and
/// each variable has at least as many labels as its connected component
/// has variables; otherwise higher-order when some factor has order >= 3.
pub fn superclass<T: Energy>(gm: &FactorGraph<T>) -> Superclass {
    let potts_only = gm.factors().iter().all(|f| f.order() >= 2 && classify_factor(f, gm).potts);
    if potts_only {
        let n = gm.num_vars();
        let mut parent: Vec<usize> = (0..n).collect();
        for f in gm.factors() {
            let a = find(&mut parent, f.clique[0]);
            for &v in &f.clique[1..] {
                let b = find(&mut parent, v);
                parent[b] = a;
            }
        }
        let mut size = vec![0usize; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            size[r] += 1;
        }
        if (0..n).all(|v| gm.card(v) >= size[find(&mut parent, v)]) {
            return Superclass::Partitioning;
        }
    }
    if gm.max_factor_order() >= 3 {
        Superclass::HigherOrder
    } else {
        Superclass::Pairwise
    }
}

/// Most frequent target; ties go to registry order. `None` when empty.
pub fn modal(targets: impl IntoIterator<Item = AlgorithmName>) -> Option<AlgorithmName> {
    let mut counts: BTreeMap<AlgorithmName, usize> = BTreeMap::new();
    for t in targets {
        *counts.entry(t).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.registry_index().cmp(&a.0.registry_index())))
        .map(|(a, _)| a)
}

/// Always predicts the training set's modal target.
pub fn baseline_nb(targets: &[AlgorithmName]) -> Option<AlgorithmName> {
    modal(targets.iter().copied())
}

/// Modal target per superclass, falling back to the overall mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperclassBaseline {
    pub by_superclass: BTreeMap<Superclass, AlgorithmName>,
    pub fallback: AlgorithmName,
}

impl SuperclassBaseline {
    pub fn predict(&self, sc: Superclass) -> AlgorithmName {
        self.by_superclass.get(&sc).copied().unwrap_or(self.fallback)
    }
}

pub fn baseline_sb(samples: &[(Superclass, AlgorithmName)]) -> Option<SuperclassBaseline> {
    let fallback = modal(samples.iter().map(|s| s.1))?;
    let mut groups: BTreeMap<Superclass, Vec<AlgorithmName>> = BTreeMap::new();
    for &(sc, t) in samples {
        groups.entry(sc).or_default().push(t);
    }
    let by_superclass = groups.into_iter().filter_map(|(sc, ts)| modal(ts).map(|m| (sc, m))).collect();
    Some(SuperclassBaseline { by_superclass, fallback })
}

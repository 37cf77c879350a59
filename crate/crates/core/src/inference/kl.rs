//! Kernighan-Lin style partitioning for pairwise Potts models.
//!
//! Labels are cluster ids, so only equal/unequal matters. With
//! `w = e_diff - e_same` per edge the energy is `sum(e_same)` plus the
//! total `w` of cut edges. At most `min(cards)` clusters are used.

use std::collections::BTreeMap;

use crate::graph::{classify_factor, FactorGraph, Labelling};
use crate::inference::control::{Control, SolveError};
use crate::scalar::Energy;

/// Reason the model cannot be treated as a Potts partitioning problem.
pub fn kl_incompatibility<T: Energy>(gm: &FactorGraph<T>) -> Option<String> {
    for (fi, f) in gm.factors().iter().enumerate() {
        match f.order() {
            1 => return Some(format!("factor {fi} is unary")),
            2 if !classify_factor(f, gm).potts => return Some(format!("factor {fi} is not Potts")),
            2 => {}
            m => return Some(format!("factor {fi} has order {m}")),
        }
    }
    None
}

pub fn kl_solve<T: Energy>(gm: &FactorGraph<T>, max_passes: usize) -> Result<Labelling, SolveError> {
    kl_with(gm, max_passes, &mut Control::unlimited())
}

struct Problem {
    n: usize,
    k: usize,
    /// Symmetric `(neighbour, w)` lists with parallel edges merged.
    adj: Vec<Vec<(usize, f64)>>,
}

impl Problem {
    fn new<T: Energy>(gm: &FactorGraph<T>) -> Self {
        let n = gm.num_vars();
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for f in gm.factors() {
            let (same, diff) = classify_factor(f, gm).potts_values.unwrap_or((0.0, 0.0));
            *merged.entry((f.clique[0], f.clique[1])).or_default() += diff - same;
        }
        let mut adj = vec![Vec::new(); n];
        for (&(i, j), &w) in &merged {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let k = gm.cards().iter().copied().min().unwrap_or(1);
        Problem { n, k, adj }
    }

    /// Sum of `w` to neighbours in each cluster.
    fn connections(&self, v: usize, labels: &[usize]) -> BTreeMap<usize, f64> {
        let mut c = BTreeMap::new();
        for &(u, w) in &self.adj[v] {
            *c.entry(labels[u]).or_insert(0.0) += w;
        }
        c
    }
}

/// Bottom-up agglomeration: always merge the pair with the largest gain,
/// while the gain is positive or there are more clusters than `k`.
fn greedy_merge(p: &Problem, ctl: &mut Control) -> Vec<usize> {
    let mut cluster: Vec<usize> = (0..p.n).collect();
    let mut members: Vec<Vec<usize>> = (0..p.n).map(|v| vec![v]).collect();
    let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); p.n];
    for v in 0..p.n {
        for &(u, w) in &p.adj[v] {
            *links[v].entry(u).or_insert(0.0) += w;
        }
    }
    let mut alive: Vec<usize> = (0..p.n).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for &a in &alive {
            for (&b, &w) in &links[a] {
                if a < b && best.is_none_or(|(g, _, _)| w > g) {
                    best = Some((w, a, b));
                }
            }
            ctl.tick(links[a].len());
        }
        let forced = alive.len() > p.k;
        let pick = match best {
            Some((g, a, b)) if g > 0.0 => Some((a, b)),
            _ if forced => {
                // a non-adjacent pair costs nothing; prefer it over a negative merge
                let free = alive.iter().find_map(|&a| {
                    alive.iter().find(|&&b| b > a && !links[a].contains_key(&b)).map(|&b| (a, b))
                });
                free.or(best.map(|(_, a, b)| (a, b)))
            }
            _ => None,
        };
        let Some((a, b)) = pick else { break };
        let moved = std::mem::take(&mut members[b]);
        for &v in &moved {
            cluster[v] = a;
        }
        members[a].extend(moved);
        let lb = std::mem::take(&mut links[b]);
        for (c, w) in lb {
            links[c].remove(&b);
            if c != a {
                *links[a].entry(c).or_insert(0.0) += w;
                *links[c].entry(a).or_insert(0.0) += w;
            }
        }
        links[a].remove(&b);
        alive.retain(|&c| c != b);
    }
    relabel(&cluster)
}

/// Renumbers clusters by first occurrence.
fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// One KL pass: move every variable once, best move first, then keep the
/// best prefix. Returns the gain realised.
fn kl_pass(p: &Problem, labels: &mut [usize], ctl: &mut Control) -> f64 {
    let mut locked = vec![false; p.n];
    let mut history: Vec<(usize, usize)> = Vec::with_capacity(p.n);
    let (mut total, mut best_total, mut best_len) = (0.0, 0.0, 0);
    let mut sizes = vec![0usize; p.k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for _ in 0..p.n {
        let empty = sizes.iter().position(|&s| s == 0);
        let mut best: Option<(f64, usize, usize)> = None;
        for v in (0..p.n).filter(|&v| !locked[v]) {
            let conn = p.connections(v, labels);
            let here = conn.get(&labels[v]).copied().unwrap_or(0.0);
            let mut consider = |gain: f64, target: usize| {
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, v, target));
                }
            };
            for (&c, &w) in &conn {
                if c != labels[v] {
                    consider(w - here, c);
                }
            }
            if let Some(e) = empty.filter(|_| sizes[labels[v]] > 1) {
                consider(-here, e);
            }
            ctl.tick(p.adj[v].len() + 1);
        }
        let Some((gain, v, target)) = best else { break };
        history.push((v, labels[v]));
        sizes[labels[v]] -= 1;
        sizes[target] += 1;
        labels[v] = target;
        locked[v] = true;
        total += gain;
        if total > best_total + 1e-12 {
            best_total = total;
            best_len = history.len();
        }
    }
    for &(v, old) in history[best_len..].iter().rev() {
        labels[v] = old;
    }
    best_total
}

pub(crate) fn kl_with<T: Energy>(
    gm: &FactorGraph<T>,
    max_passes: usize,
    ctl: &mut Control,
) -> Result<Labelling, SolveError> {
    if let Some(reason) = kl_incompatibility(gm) {
        return Err(SolveError::Incompatible(reason));
    }
    let p = Problem::new(gm);
    let mut labels = greedy_merge(&p, ctl);
    for _ in 0..max_passes {
        ctl.check()?;
        if kl_pass(&p, &mut labels, ctl) <= 0.0 {
            break;
        }
    }
    Ok(Labelling(relabel(&labels)))
}

//! Sequential tree-reweighted message passing on a pairwise model.
//!
//! Variables are ordered by index. Every edge points from its lower to its
//! higher endpoint, and the model is covered by monotonic chains built by
//! pairing each node's incoming edges with its outgoing ones. A node lying
//! on `n_s` chains uses weight `1 / n_s`.

use crate::graph::{FactorGraph, Labelling};
use crate::inference::control::{Control, SolveError};
use crate::inference::pairwise::{argmin, normalise, PairwiseModel};
use crate::scalar::Energy;

#[derive(Debug, Clone, PartialEq)]
pub struct TrwsOutcome<T> {
    pub labelling: Labelling,
    pub energy: T,
    /// Final lower bound on the optimum of the pairwise model.
    pub lower_bound: T,
    /// Bound after every completed iteration.
    pub bound_trace: Vec<T>,
}

/// Bound improvement below which iteration stops.
pub const BOUND_TOL: f64 = 1e-9;

pub fn trws_solve<T: Energy>(gm: &FactorGraph<T>, max_iters: usize) -> (Labelling, T) {
    let out = trws_with(gm, max_iters, &mut Control::unlimited()).expect("unlimited control");
    (out.labelling, out.lower_bound)
}

/// A monotonic chain: `nodes[k]` and `nodes[k+1]` are joined by `edges[k]`.
#[derive(Debug, Clone, PartialEq)]
struct Chain {
    nodes: Vec<usize>,
    edges: Vec<usize>,
}

/// Each edge lies on exactly one chain and node `s` on exactly `n_s` chains.
fn build_chains<T: Energy>(pm: &PairwiseModel<T>) -> (Vec<Chain>, Vec<usize>) {
    let n = pm.num_vars();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, edge) in pm.edges.iter().enumerate() {
        outgoing[edge.i].push(e);
        incoming[edge.j].push(e);
    }
    let weight_count: Vec<usize> =
        (0..n).map(|s| incoming[s].len().max(outgoing[s].len()).max(1)).collect();
    // successor[e]: the outgoing edge paired with incoming edge e at its head
    let mut successor = vec![None; pm.edges.len()];
    let mut has_pred = vec![false; pm.edges.len()];
    for s in 0..n {
        for (&a, &b) in incoming[s].iter().zip(&outgoing[s]) {
            successor[a] = Some(b);
            has_pred[b] = true;
        }
    }
    let mut chains = Vec::new();
    for s in 0..n {
        if incoming[s].is_empty() && outgoing[s].is_empty() {
            chains.push(Chain { nodes: vec![s], edges: vec![] });
        }
    }
    for start in 0..pm.edges.len() {
        if has_pred[start] {
            continue;
        }
        let mut nodes = vec![pm.edges[start].i];
        let mut edges = Vec::new();
        let mut cur = Some(start);
        while let Some(e) = cur {
            edges.push(e);
            nodes.push(pm.edges[e].j);
            cur = successor[e];
        }
        chains.push(Chain { nodes, edges });
    }
    (chains, weight_count)
}

struct State<'a, T> {
    pm: &'a PairwiseModel<T>,
    gamma: Vec<T>,
    /// `fwd[e]` is indexed by the head label, `bwd[e]` by the tail label.
    fwd: Vec<Vec<T>>,
    bwd: Vec<Vec<T>>,
}

impl<'a, T: Energy> State<'a, T> {
    /// Unary plus all incoming messages of `s`.
    fn hat(&self, s: usize) -> Vec<T> {
        let mut h = self.pm.unary[s].clone();
        for &(e, _) in &self.pm.adj[s] {
            let m = if self.pm.edges[e].j == s { &self.fwd[e] } else { &self.bwd[e] };
            for (x, &v) in h.iter_mut().zip(m) {
                *x += v;
            }
        }
        h
    }

    fn pass(&mut self, forward: bool, labels: &mut [usize], ctl: &mut Control) {
        let n = self.pm.num_vars();
        let order: Vec<usize> = if forward { (0..n).collect() } else { (0..n).rev().collect() };
        for s in order {
            let hat = self.hat(s);
            if forward {
                labels[s] = self.choose(s, labels);
            }
            let ls = self.pm.cards[s];
            for &(e, t) in &self.pm.adj[s] {
                if (t > s) != forward {
                    continue;
                }
                let edge = &self.pm.edges[e];
                let lt = self.pm.cards[t];
                let back = if forward { &self.bwd[e] } else { &self.fwd[e] };
                let base: Vec<T> = (0..ls).map(|a| self.gamma[s] * hat[a] - back[a]).collect();
                let mut msg = vec![T::infinity(); lt];
                for (a, &b0) in base.iter().enumerate() {
                    for (b, m) in msg.iter_mut().enumerate() {
                        let th = if forward { edge.at(lt, a, b) } else { edge.at(ls, b, a) };
                        let v = b0 + th;
                        if v < *m {
                            *m = v;
                        }
                    }
                }
                normalise(&mut msg);
                if forward {
                    self.fwd[e] = msg;
                } else {
                    self.bwd[e] = msg;
                }
                ctl.tick(ls * lt);
            }
        }
    }

    /// Label of `s` given already-decoded lower neighbours.
    fn choose(&self, s: usize, labels: &[usize]) -> usize {
        let mut cost = self.pm.unary[s].clone();
        let ls = self.pm.cards[s];
        for &(e, t) in &self.pm.adj[s] {
            let edge = &self.pm.edges[e];
            if t < s {
                for (b, c) in cost.iter_mut().enumerate() {
                    *c += edge.at(ls, labels[t], b);
                }
            } else {
                for (a, c) in cost.iter_mut().enumerate() {
                    *c += self.bwd[e][a];
                }
            }
        }
        argmin(&cost)
    }

    fn bound(&self, chains: &[Chain], ctl: &mut Control) -> T {
        let n = self.pm.num_vars();
        let node: Vec<Vec<T>> =
            (0..n).map(|s| self.hat(s).into_iter().map(|x| x * self.gamma[s]).collect()).collect();
        let mut total = T::zero();
        for c in chains {
            let mut acc = node[c.nodes[0]].clone();
            for (k, &e) in c.edges.iter().enumerate() {
                let (s, t) = (c.nodes[k], c.nodes[k + 1]);
                let edge = &self.pm.edges[e];
                let lt = self.pm.cards[t];
                let mut next = vec![T::infinity(); lt];
                for (a, &va) in acc.iter().enumerate() {
                    for (b, m) in next.iter_mut().enumerate() {
                        let th = edge.at(lt, a, b) - self.fwd[e][b] - self.bwd[e][a];
                        let v = va + th;
                        if v < *m {
                            *m = v;
                        }
                    }
                }
                for (m, &u) in next.iter_mut().zip(&node[t]) {
                    *m += u;
                }
                ctl.tick(self.pm.cards[s] * lt);
                acc = next;
            }
            total += acc.into_iter().fold(T::infinity(), T::min);
        }
        total
    }
}

pub(crate) fn trws_with<T: Energy>(
    gm: &FactorGraph<T>,
    max_iters: usize,
    ctl: &mut Control,
) -> Result<TrwsOutcome<T>, SolveError> {
    let pm = PairwiseModel::new(gm);
    let (chains, counts) = build_chains(&pm);
    let mut st = State {
        pm: &pm,
        gamma: counts.iter().map(|&c| T::one() / T::lit(c as f64)).collect(),
        fwd: pm.edges.iter().map(|e| vec![T::zero(); pm.cards[e.j]]).collect(),
        bwd: pm.edges.iter().map(|e| vec![T::zero(); pm.cards[e.i]]).collect(),
    };
    let mut labels = vec![0usize; pm.num_vars()];
    let mut best = Labelling(labels.clone());
    let mut best_e = T::infinity();
    let mut trace: Vec<T> = Vec::new();
    for _ in 0..max_iters.max(1) {
        ctl.check()?;
        st.pass(true, &mut labels, ctl);
        st.pass(false, &mut labels, ctl);
        let e = pm.energy(&labels);
        if e < best_e {
            best_e = e;
            best = Labelling(labels.clone());
        }
        let lb = st.bound(&chains, ctl);
        let improved = trace.last().is_none_or(|&prev| lb - prev >= T::lit(BOUND_TOL));
        trace.push(lb);
        if !improved {
            break;
        }
    }
    let lower_bound = trace.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(TrwsOutcome { labelling: best, energy: best_e, lower_bound, bound_trace: trace })
}

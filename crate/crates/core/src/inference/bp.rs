//! Min-sum loopy belief propagation on the factor graph.
//!
//! Unary factors are folded into per-variable potentials; every other
//! factor exchanges messages with its variables. Factor-to-variable
//! messages are normalised to a zero minimum and damped.

use crate::graph::{FactorGraph, Labelling};
use crate::inference::control::{Control, SolveError};
use crate::inference::pairwise::{argmin, normalise};
use crate::scalar::Energy;

/// Message update order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// All factors update from the previous iteration's messages.
    Parallel,
    /// Factors update in place, forward then backward by first variable.
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutcome {
    pub labelling: Labelling,
    pub converged: bool,
    pub iterations: usize,
}

/// Converged when no message entry moves by more than this.
pub const CONVERGENCE_TOL: f64 = 1e-6;

pub fn lbp_solve<T: Energy>(gm: &FactorGraph<T>, damping: f64, max_iters: usize, schedule: Schedule) -> Labelling {
    bp_with(gm, damping, max_iters, schedule, &mut Control::unlimited())
        .expect("unlimited control")
        .labelling
}

struct Net<'a, T> {
    gm: &'a FactorGraph<T>,
    /// Non-unary factor indices, sorted by clique.
    factors: Vec<usize>,
    /// First message slot of each entry in `factors`.
    offset: Vec<usize>,
    potential: Vec<Vec<T>>,
    /// Factor-to-variable messages, one per (factor, position).
    msgs: Vec<Vec<T>>,
    /// Potential plus all incoming messages.
    belief: Vec<Vec<T>>,
}

impl<'a, T: Energy> Net<'a, T> {
    fn new(gm: &'a FactorGraph<T>) -> Self {
        let cards = gm.cards();
        let mut potential: Vec<Vec<T>> = cards.iter().map(|&c| vec![T::zero(); c]).collect();
        let mut factors = Vec::new();
        for (fi, f) in gm.factors().iter().enumerate() {
            if f.order() == 1 {
                for (p, &e) in potential[f.clique[0]].iter_mut().zip(&f.table) {
                    *p += e;
                }
            } else {
                factors.push(fi);
            }
        }
        factors.sort_by(|&a, &b| gm.factors()[a].clique.cmp(&gm.factors()[b].clique).then(a.cmp(&b)));
        let mut offset = Vec::with_capacity(factors.len());
        let mut msgs = Vec::new();
        for &fi in &factors {
            let f = &gm.factors()[fi];
            offset.push(msgs.len());
            msgs.extend(f.clique.iter().map(|&v| vec![T::zero(); cards[v]]));
        }
        let belief = potential.clone();
        Net { gm, factors, offset, potential, msgs, belief }
    }

    /// Computes fresh outgoing messages of factor `k` from the current beliefs.
    fn compute(&self, k: usize, out: &mut [Vec<T>]) {
        let f = &self.gm.factors()[self.factors[k]];
        let cards = self.gm.cards();
        let m = f.order();
        let off = self.offset[k];
        for o in out.iter_mut() {
            o.iter_mut().for_each(|x| *x = T::infinity());
        }
        let mut x = vec![0usize; m];
        for &theta in &f.table {
            let mut s = theta;
            for p in 0..m {
                s += self.belief[f.clique[p]][x[p]] - self.msgs[off + p][x[p]];
            }
            for p in 0..m {
                let val = s - (self.belief[f.clique[p]][x[p]] - self.msgs[off + p][x[p]]);
                if val < out[p][x[p]] {
                    out[p][x[p]] = val;
                }
            }
            for p in (0..m).rev() {
                x[p] += 1;
                if x[p] < cards[f.clique[p]] {
                    break;
                }
                x[p] = 0;
            }
        }
        for o in out.iter_mut() {
            normalise(o);
        }
    }

    /// Damps `fresh` into the stored messages of factor `k`; returns the
    /// largest absolute change. Beliefs are updated when `live` is set.
    fn commit(&mut self, k: usize, fresh: &[Vec<T>], damping: T, live: bool) -> T {
        let f = &self.gm.factors()[self.factors[k]];
        let off = self.offset[k];
        let mut delta = T::zero();
        for (p, new) in fresh.iter().enumerate() {
            let v = f.clique[p];
            for (l, &n) in new.iter().enumerate() {
                let old = self.msgs[off + p][l];
                let val = damping * old + (T::one() - damping) * n;
                delta = delta.max((val - old).abs());
                self.msgs[off + p][l] = val;
                if live {
                    self.belief[v][l] += val - old;
                }
            }
        }
        delta
    }

    fn rebuild_beliefs(&mut self) {
        self.belief.clone_from(&self.potential);
        for (k, &fi) in self.factors.iter().enumerate() {
            for (p, &v) in self.gm.factors()[fi].clique.iter().enumerate() {
                for (b, &m) in self.belief[v].iter_mut().zip(&self.msgs[self.offset[k] + p]) {
                    *b += m;
                }
            }
        }
    }

    fn scratch(&self, k: usize) -> Vec<Vec<T>> {
        let cards = self.gm.cards();
        self.gm.factors()[self.factors[k]].clique.iter().map(|&v| vec![T::zero(); cards[v]]).collect()
    }

    fn work(&self, k: usize) -> usize {
        let f = &self.gm.factors()[self.factors[k]];
        f.table.len() * f.order()
    }

    fn decode(&self) -> Labelling {
        Labelling(self.belief.iter().map(|b| argmin(b)).collect())
    }
}

pub(crate) fn bp_with<T: Energy>(
    gm: &FactorGraph<T>,
    damping: f64,
    max_iters: usize,
    schedule: Schedule,
    ctl: &mut Control,
) -> Result<BpOutcome, SolveError> {
    let mut net = Net::new(gm);
    let damp = T::lit(damping);
    let tol = T::lit(CONVERGENCE_TOL);
    let nf = net.factors.len();
    let mut scratch: Vec<Vec<Vec<T>>> = (0..nf).map(|k| net.scratch(k)).collect();
    let mut converged = nf == 0;
    let mut iterations = 0;
    while !converged && iterations < max_iters {
        ctl.check()?;
        iterations += 1;
        let mut delta = T::zero();
        match schedule {
            Schedule::Parallel => {
                for (k, s) in scratch.iter_mut().enumerate() {
                    net.compute(k, s);
                    ctl.tick(net.work(k));
                }
                for (k, s) in scratch.iter().enumerate() {
                    delta = delta.max(net.commit(k, s, damp, false));
                }
                net.rebuild_beliefs();
            }
            Schedule::Sequential => {
                for k in (0..nf).chain((0..nf).rev()) {
                    let s = &mut scratch[k];
                    net.compute(k, s);
                    ctl.tick(net.work(k));
                    delta = delta.max(net.commit(k, s, damp, true));
                }
            }
        }
        converged = delta < tol;
    }
    ctl.tick(gm.num_vars());
    Ok(BpOutcome { labelling: net.decode(), converged, iterations })
}

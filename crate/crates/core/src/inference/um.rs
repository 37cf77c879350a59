//! Unary modes: each variable takes the argmin of its summed unaries.

use crate::graph::{FactorGraph, Labelling};
use crate::inference::control::Control;
use crate::inference::pairwise::argmin;
use crate::scalar::Energy;

pub fn um_solve<T: Energy>(gm: &FactorGraph<T>) -> Labelling {
    um_with(gm, &mut Control::unlimited())
}

pub(crate) fn um_with<T: Energy>(gm: &FactorGraph<T>, ctl: &mut Control) -> Labelling {
    let mut sums: Vec<Vec<T>> = gm.cards().iter().map(|&c| vec![T::zero(); c]).collect();
    for f in gm.factors().iter().filter(|f| f.order() == 1) {
        for (s, &e) in sums[f.clique[0]].iter_mut().zip(&f.table) {
            *s += e;
        }
        ctl.tick(f.table.len());
    }
    ctl.tick(gm.num_vars());
    Labelling(sums.iter().map(|s| argmin(s)).collect())
}

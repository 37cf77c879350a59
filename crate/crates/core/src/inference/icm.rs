//! Iterated conditional modes.

use crate::graph::{FactorGraph, Labelling};
use crate::inference::control::{Control, SolveError};
use crate::scalar::Energy;

/// Sweeps variables in ascending order, moving each to its conditional
/// argmin, until a sweep changes nothing or `max_sweeps` is reached.
pub fn icm_solve<T: Energy>(gm: &FactorGraph<T>, init: &Labelling, max_sweeps: usize) -> Labelling {
    icm_with(gm, init, max_sweeps, &mut Control::unlimited()).expect("unlimited control")
}

pub(crate) fn icm_with<T: Energy>(
    gm: &FactorGraph<T>,
    init: &Labelling,
    max_sweeps: usize,
    ctl: &mut Control,
) -> Result<Labelling, SolveError> {
    let inc = gm.incidence();
    let mut labels = init.0.clone();
    let sweep_cost: usize = (0..gm.num_vars())
        .map(|v| gm.card(v) * inc.by_var[v].iter().map(|&(f, _)| gm.factors()[f].order()).sum::<usize>())
        .sum();
    for _ in 0..max_sweeps {
        ctl.check()?;
        let mut changed = false;
        for v in 0..gm.num_vars() {
            let current = inc.local_energy(gm, &labels, v, labels[v]);
            let tol = T::lit(1e-12) * (T::one() + current.abs());
            let (mut best, mut best_label) = (current, labels[v]);
            for l in 0..gm.card(v) {
                let e = inc.local_energy(gm, &labels, v, l);
                if e < best - tol || (e < best && best_label != labels[v]) {
                    best = e;
                    best_label = l;
                }
            }
            if best_label != labels[v] {
                labels[v] = best_label;
                changed = true;
            }
        }
        ctl.tick(sweep_cost);
        if !changed {
            break;
        }
    }
    Ok(Labelling(labels))
}

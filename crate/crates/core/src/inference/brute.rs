//! Exhaustive enumeration, used as a test oracle.

use crate::graph::{FactorGraph, Labelling};
use crate::inference::control::{Control, SolveError};
use crate::scalar::Energy;

/// Largest state space [`brute_force_solve`] will enumerate.
pub const MAX_STATES: f64 = 1e6;

/// Global optimum; ties resolve to the lexicographically smallest labelling.
pub fn brute_force_solve<T: Energy>(gm: &FactorGraph<T>) -> Result<Labelling, SolveError> {
    brute_with(gm, &mut Control::unlimited())
}

pub(crate) fn brute_with<T: Energy>(gm: &FactorGraph<T>, ctl: &mut Control) -> Result<Labelling, SolveError> {
    let states = gm.state_space();
    if states > MAX_STATES {
        return Err(SolveError::Refused(format!("state space {states:e} exceeds {MAX_STATES:e}")));
    }
    let n = gm.num_vars();
    let cards = gm.cards();
    let mut x = vec![0usize; n];
    let mut best = x.clone();
    let mut best_e = gm.energy_unchecked(&x);
    let per_state = gm.num_factors().max(1);
    let mut count = 0u64;
    loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(Labelling(best));
            }
            pos -= 1;
            x[pos] += 1;
            if x[pos] < cards[pos] {
                break;
            }
            x[pos] = 0;
        }
        let e = gm.energy_unchecked(&x);
        if e < best_e {
            best_e = e;
            best.copy_from_slice(&x);
        }
        ctl.tick(per_state);
        count += 1;
        if count.is_multiple_of(4096) {
            ctl.check()?;
        }
    }
}

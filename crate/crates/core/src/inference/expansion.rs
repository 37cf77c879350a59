//! Alpha-expansion with graph-cut moves.
//!
//! Each move lets every variable keep its label (`y = 0`) or switch to
//! `alpha` (`y = 1`). In the cut network the source side is `y = 0`.
//! Non-submodular move terms are truncated so the cut is well defined;
//! a move is kept only when it strictly lowers the true energy. Binary
//! models start with one unrestricted cut, which is exact when the model
//! is submodular.

use crate::graph::{FactorGraph, Labelling};
use crate::inference::control::{Control, SolveError};
use crate::inference::maxflow::FlowNetwork;
use crate::inference::pairwise::PairwiseModel;
use crate::inference::um::um_with;
use crate::scalar::Energy;

pub fn alpha_expansion_solve<T: Energy>(gm: &FactorGraph<T>, max_rounds: usize) -> Labelling {
    let init = um_with(gm, &mut Control::unlimited());
    alpha_expansion_from(gm, &init, max_rounds)
}

pub fn alpha_expansion_from<T: Energy>(gm: &FactorGraph<T>, init: &Labelling, max_rounds: usize) -> Labelling {
    expansion_with(gm, init, max_rounds, &mut Control::unlimited()).expect("unlimited control")
}

/// Adds `coef * y_i` to the network, up to a constant.
fn add_linear(net: &mut FlowNetwork, i: usize, coef: f64) {
    let (s, t) = (net.source(), net.sink());
    if coef > 0.0 {
        net.add_edge(s, i, coef, 0.0);
    } else if coef < 0.0 {
        net.add_edge(i, t, -coef, 0.0);
    }
}

fn expansion_move<T: Energy>(pm: &PairwiseModel<T>, labels: &[usize], alpha: usize, ctl: &mut Control) -> Vec<usize> {
    let n = pm.num_vars();
    let free: Vec<bool> = (0..n).map(|v| pm.cards[v] > alpha && labels[v] != alpha).collect();
    let mut net = FlowNetwork::new(n);
    for v in (0..n).filter(|&v| free[v]) {
        let u = &pm.unary[v];
        add_linear(&mut net, v, (u[alpha] - u[labels[v]]).as_f64());
    }
    for edge in &pm.edges {
        let (i, j) = (edge.i, edge.j);
        let lj = pm.cards[j];
        let (xi, xj) = (labels[i], labels[j]);
        let f = |a: usize, b: usize| edge.at(lj, a, b).as_f64();
        match (free[i], free[j]) {
            (false, false) => {}
            (false, true) => add_linear(&mut net, j, f(xi, alpha) - f(xi, xj)),
            (true, false) => add_linear(&mut net, i, f(alpha, xj) - f(xi, xj)),
            (true, true) => {
                let (a, b, mut c, d) = (f(xi, xj), f(xi, alpha), f(alpha, xj), f(alpha, alpha));
                if a + d > b + c {
                    c += a + d - b - c;
                }
                add_linear(&mut net, i, c - a);
                add_linear(&mut net, j, d - c);
                let w = b + c - a - d;
                if w > 0.0 {
                    net.add_edge(i, j, w, 0.0);
                }
            }
        }
    }
    net.max_flow();
    let side = net.source_side();
    ctl.tick(net.work() as usize);
    (0..n).map(|v| if free[v] && !side[v] { alpha } else { labels[v] }).collect()
}

pub(crate) fn expansion_with<T: Energy>(
    gm: &FactorGraph<T>,
    init: &Labelling,
    max_rounds: usize,
    ctl: &mut Control,
) -> Result<Labelling, SolveError> {
    let pm = PairwiseModel::new(gm);
    let max_card = pm.cards.iter().copied().max().unwrap_or(0);
    let mut labels = init.0.clone();
    let mut energy = pm.energy(&labels);
    if max_card == 2 {
        // from all zeros, expanding label 1 frees every variable: an exact cut
        let proposal = expansion_move(&pm, &vec![0; pm.num_vars()], 1, ctl);
        let e = pm.energy(&proposal);
        if e < energy {
            labels = proposal;
            energy = e;
        }
        let submodular = pm.edges.iter().all(|edge| {
            let lj = pm.cards[edge.j];
            let f = |a: usize, b: usize| edge.at(lj, a, b).as_f64();
            pm.cards[edge.i] < 2 || lj < 2 || f(0, 0) + f(1, 1) <= f(0, 1) + f(1, 0)
        });
        if submodular {
            // the cut above is a global optimum
            return Ok(Labelling(labels));
        }
    }
    for _ in 0..max_rounds {
        let mut accepted = false;
        for alpha in 0..max_card {
            ctl.check()?;
            let proposal = expansion_move(&pm, &labels, alpha, ctl);
            ctl.tick(pm.table_size());
            let e = pm.energy(&proposal);
            if e < energy {
                labels = proposal;
                energy = e;
                accepted = true;
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(Labelling(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Factor;
    use crate::inference::brute::brute_force_solve;
    use crate::inference::icm::icm_solve;
    use crate::inference::um::um_solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(w: usize, h: usize, labels: usize, seed: u64, pair: impl Fn(&mut ChaCha8Rng) -> Vec<f64>) -> FactorGraph<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fs = Vec::new();
        for v in 0..w * h {
            fs.push(Factor::new(vec![v], (0..labels).map(|_| rng.gen_range(0.0..1.0)).collect()));
        }
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    fs.push(Factor::new(vec![v, v + 1], pair(&mut rng)));
                }
                if y + 1 < h {
                    fs.push(Factor::new(vec![v, v + w], pair(&mut rng)));
                }
            }
        }
        FactorGraph::new(vec![labels; w * h], fs).unwrap()
    }

    #[test]
    fn binary_submodular_is_exact() {
        for seed in 0..15 {
            let gm = grid(3, 3, 2, seed, |r| {
                let (a, d) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                let b = r.gen_range(-1.0..1.0);
                let c = a + d - b + r.gen_range(0.0..1.0);
                vec![a, b, c, d]
            });
            let out = alpha_expansion_solve(&gm, 100);
            let opt = brute_force_solve(&gm).unwrap();
            let (e, eo) = (gm.evaluate_energy(&out).unwrap(), gm.evaluate_energy(&opt).unwrap());
            assert!((e - eo).abs() < 1e-9, "seed {seed}: {e} vs {eo}");
        }
    }

    #[test]
    fn potts_beats_um_and_icm() {
        for seed in 0..10 {
            let gm = grid(3, 3, 3, seed, |r| {
                let s = r.gen_range(0.2..1.0);
                (0..9).map(|k| if k / 3 == k % 3 { 0.0 } else { s }).collect()
            });
            let um = um_solve(&gm);
            let icm = icm_solve(&gm, &um, 1000);
            let ae = alpha_expansion_solve(&gm, 100);
            let e = |x: &Labelling| gm.evaluate_energy(x).unwrap();
            assert!(e(&ae) <= e(&um) + 1e-12 && e(&ae) <= e(&icm) + 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn optimal_init_is_unchanged() {
        let gm = grid(2, 2, 3, 4, |r| {
            let s = r.gen_range(0.2..1.0);
            (0..9).map(|k| if k / 3 == k % 3 { 0.0 } else { s }).collect()
        });
        let opt = brute_force_solve(&gm).unwrap();
        assert_eq!(alpha_expansion_from(&gm, &opt, 100), opt);
    }

    #[test]
    fn non_metric_never_worse_than_init() {
        for seed in 0..10 {
            let gm = grid(3, 2, 3, seed, |r| (0..9).map(|_| r.gen_range(-1.0..1.0)).collect());
            let init = um_solve(&gm);
            let out = alpha_expansion_from(&gm, &init, 100);
            assert!(gm.evaluate_energy(&out).unwrap() <= gm.evaluate_energy(&init).unwrap());
        }
    }

    #[test]
    fn mixed_cardinalities_stay_in_range() {
        let gm = FactorGraph::new(
            vec![2, 4],
            vec![
                Factor::new(vec![0], vec![1.0, 0.0]),
                Factor::new(vec![1], vec![1.0, 1.0, 1.0, -2.0]),
                Factor::new(vec![0, 1], vec![0.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5]),
            ],
        )
        .unwrap();
        let out = alpha_expansion_solve(&gm, 10);
        gm.check_labelling(&out).unwrap();
        assert_eq!(out, brute_force_solve(&gm).unwrap());
    }
}

//! The solver pool behind a uniform, time-limited interface.
//!
//! [`run`] executes one parameterised algorithm and never fails: every
//! outcome is encoded in the returned [`RunRecord`]. [`meta_run`] runs all
//! registered parameterisations of an algorithm and keeps the best.

mod bp;
mod brute;
mod control;
mod expansion;
mod icm;
mod kl;
pub mod maxflow;
mod pairwise;
mod trws;
mod um;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::graph::{FactorGraph, Labelling};
use crate::scalar::Energy;

pub use bp::{lbp_solve, BpOutcome, Schedule, CONVERGENCE_TOL};
pub use brute::{brute_force_solve, MAX_STATES};
pub use control::{Control, SolveError};
pub use expansion::{alpha_expansion_from, alpha_expansion_solve};
pub use icm::icm_solve;
pub use kl::{kl_incompatibility, kl_solve};
pub use trws::{trws_solve, TrwsOutcome, BOUND_TOL};
pub use um::um_solve;

/// Full-featured variants that report convergence, bounds and work.
pub mod detailed {
    use super::*;

    pub fn lbp<T: Energy>(
        gm: &FactorGraph<T>,
        damping: f64,
        max_iters: usize,
        schedule: Schedule,
        ctl: &mut Control,
    ) -> Result<BpOutcome, SolveError> {
        bp::bp_with(gm, damping, max_iters, schedule, ctl)
    }

    pub fn trws<T: Energy>(gm: &FactorGraph<T>, max_iters: usize, ctl: &mut Control) -> Result<TrwsOutcome<T>, SolveError> {
        trws::trws_with(gm, max_iters, ctl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AlgorithmName {
    Um,
    Icm,
    Lbp,
    Bps,
    Trws,
    Alphaexp,
    Kl,
    Brute,
}

impl AlgorithmName {
    /// The selectable pool, in registry order. The oracle is not included.
    pub const POOL: [AlgorithmName; 7] = [
        AlgorithmName::Um,
        AlgorithmName::Icm,
        AlgorithmName::Lbp,
        AlgorithmName::Bps,
        AlgorithmName::Trws,
        AlgorithmName::Alphaexp,
        AlgorithmName::Kl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmName::Um => "UM",
            AlgorithmName::Icm => "ICM",
            AlgorithmName::Lbp => "LBP",
            AlgorithmName::Bps => "BPS",
            AlgorithmName::Trws => "TRWS",
            AlgorithmName::Alphaexp => "ALPHAEXP",
            AlgorithmName::Kl => "KL",
            AlgorithmName::Brute => "BRUTE",
        }
    }

    /// Position in registry order; the oracle sorts last.
    pub fn registry_index(self) -> usize {
        Self::POOL.iter().position(|&a| a == self).unwrap_or(Self::POOL.len())
    }

    /// Algorithms that only see factors of order two or less.
    pub fn pairwise_only(self) -> bool {
        matches!(self, AlgorithmName::Trws | AlgorithmName::Alphaexp | AlgorithmName::Kl)
    }

    /// Parameter keys with their defaults.
    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            AlgorithmName::Um | AlgorithmName::Brute => &[],
            AlgorithmName::Icm => &[("max_sweeps", 1000.0)],
            AlgorithmName::Lbp | AlgorithmName::Bps => &[("damping", 0.0), ("max_iters", 250.0)],
            AlgorithmName::Trws => &[("max_iters", 500.0)],
            AlgorithmName::Alphaexp => &[("max_rounds", 100.0)],
            AlgorithmName::Kl => &[("max_passes", 100.0)],
        }
    }

    /// The parameterisations run by [`meta_run`], in tie-break order.
    pub fn parameterisations(self) -> Vec<AlgorithmId> {
        let grid: Vec<Vec<(&str, f64)>> = match self {
            AlgorithmName::Lbp | AlgorithmName::Bps => [0.0, 0.75]
                .iter()
                .flat_map(|&d| [50.0, 250.0].map(|it| vec![("damping", d), ("max_iters", it)]))
                .collect(),
            AlgorithmName::Trws => [100.0, 500.0, 2000.0].iter().map(|&it| vec![("max_iters", it)]).collect(),
            _ => vec![vec![]],
        };
        grid.into_iter()
            .map(|kv| {
                let params = kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                AlgorithmId::new(self, params).expect("registered parameters are valid")
            })
            .collect()
    }
}

impl fmt::Display for AlgorithmName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgorithmError {
    #[error("unknown algorithm `{0}`")]
    UnknownName(String),
    #[error("{alg} has no parameter `{key}`")]
    UnknownParam { alg: AlgorithmName, key: String },
    #[error("{alg}: {key} = {value} out of range ({range})")]
    OutOfRange { alg: AlgorithmName, key: String, value: f64, range: &'static str },
    #[error("malformed parameter `{0}`, expected key=value")]
    Malformed(String),
}

impl FromStr for AlgorithmName {
    type Err = AlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        [Self::POOL.as_slice(), &[AlgorithmName::Brute]]
            .concat()
            .into_iter()
            .find(|a| a.as_str() == up)
            .ok_or_else(|| AlgorithmError::UnknownName(s.to_string()))
    }
}

pub type Params = BTreeMap<String, f64>;

/// Parses `k=v,k=v`; an empty string gives no parameters.
pub fn parse_params(text: &str) -> Result<Params, AlgorithmError> {
    let mut out = Params::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| AlgorithmError::Malformed(item.to_string()))?;
        let v: f64 = v.trim().parse().map_err(|_| AlgorithmError::Malformed(item.to_string()))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// An algorithm with a complete, validated parameter map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmId {
    pub name: AlgorithmName,
    pub params: Params,
}

impl AlgorithmId {
    /// Fills missing keys with defaults and range-checks everything.
    pub fn new(name: AlgorithmName, given: Params) -> Result<Self, AlgorithmError> {
        let defaults = name.defaults();
        let mut params: Params = defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in given {
            if !params.contains_key(&k) {
                return Err(AlgorithmError::UnknownParam { alg: name, key: k });
            }
            params.insert(k, v);
        }
        for (k, &v) in &params {
            let bad = |range| AlgorithmError::OutOfRange { alg: name, key: k.clone(), value: v, range };
            if k == "damping" {
                if !(0.0..1.0).contains(&v) {
                    return Err(bad("[0, 1)"));
                }
            } else if !(v >= 1.0 && v.fract() == 0.0 && v <= 1e9) {
                return Err(bad("integer >= 1"));
            }
        }
        Ok(AlgorithmId { name, params })
    }

    pub fn with_defaults(name: AlgorithmName) -> Self {
        Self::new(name, Params::new()).expect("defaults are valid")
    }

    fn count(&self, key: &str) -> usize {
        self.params[key] as usize
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        let kv: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if !kv.is_empty() {
            write!(f, "({})", kv.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    /// Wall-clock seconds.
    pub time_budget: f64,
    /// Bytes; compared against a pre-run estimate only.
    pub memory_budget: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits { time_budget: 30.0, memory_budget: 4 << 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Completed,
    Incompatible,
    Timeout,
    Error,
}

impl Status {
    fn severity(self) -> u8 {
        match self {
            Status::Completed => 0,
            Status::Incompatible => 1,
            Status::Timeout => 2,
            Status::Error => 3,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Completed => "completed",
            Status::Incompatible => "incompatible",
            Status::Timeout => "timeout",
            Status::Error => "error",
        })
    }
}

/// Outcome of one algorithm on one instance.
///
/// `labels` is present exactly when `status` is completed, and then
/// `energy` is the energy of `labels` on the full model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub alg: AlgorithmName,
    pub params: Params,
    pub instance: String,
    pub status: Status,
    pub energy: Option<f64>,
    pub bound: Option<f64>,
    pub time_s: f64,
    /// Deterministic effort count (table entries touched).
    pub work: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn labelling(&self) -> Option<Labelling> {
        self.labels.clone().map(Labelling)
    }

    pub(crate) fn failed(alg: &AlgorithmId, instance: &str, status: Status, time_s: f64, work: u64, message: String) -> Self {
        RunRecord {
            alg: alg.name,
            params: alg.params.clone(),
            instance: instance.to_string(),
            status,
            energy: None,
            bound: None,
            time_s,
            work,
            labels: None,
            message: Some(message),
        }
    }
}

/// Rough peak memory of a solver in bytes, from table and message sizes.
pub fn memory_estimate<T: Energy>(alg: AlgorithmName, gm: &FactorGraph<T>) -> u64 {
    let scalar = std::mem::size_of::<T>() as u64;
    let tables: u64 = gm.factors().iter().map(|f| f.table.len() as u64).sum();
    let slots: u64 = gm.factors().iter().map(|f| f.clique.iter().map(|&v| gm.card(v) as u64).sum::<u64>()).sum();
    let labels = gm.num_vars() as u64 * 8;
    let extra = match alg {
        AlgorithmName::Lbp | AlgorithmName::Bps => 3 * slots * scalar,
        AlgorithmName::Trws => 2 * slots * scalar + tables * scalar,
        AlgorithmName::Alphaexp => 64 * (gm.num_vars() as u64 + gm.num_factors() as u64) + tables * scalar,
        AlgorithmName::Kl => 48 * gm.num_factors() as u64,
        _ => 0,
    };
    tables * scalar + labels + extra
}

fn solve<T: Energy>(
    alg: &AlgorithmId,
    gm: &FactorGraph<T>,
    ctl: &mut Control,
) -> Result<(Labelling, Option<f64>), SolveError> {
    Ok(match alg.name {
        AlgorithmName::Um => (um::um_with(gm, ctl), None),
        AlgorithmName::Icm => {
            let init = um::um_with(gm, ctl);
            (icm::icm_with(gm, &init, alg.count("max_sweeps"), ctl)?, None)
        }
        AlgorithmName::Lbp | AlgorithmName::Bps => {
            let schedule = if alg.name == AlgorithmName::Lbp { Schedule::Parallel } else { Schedule::Sequential };
            let out = bp::bp_with(gm, alg.params["damping"], alg.count("max_iters"), schedule, ctl)?;
            (out.labelling, None)
        }
        AlgorithmName::Trws => {
            let out = trws::trws_with(gm, alg.count("max_iters"), ctl)?;
            (out.labelling, Some(out.lower_bound.as_f64()))
        }
        AlgorithmName::Alphaexp => {
            let init = um::um_with(gm, ctl);
            (expansion::expansion_with(gm, &init, alg.count("max_rounds"), ctl)?, None)
        }
        AlgorithmName::Kl => (kl::kl_with(gm, alg.count("max_passes"), ctl)?, None),
        AlgorithmName::Brute => (brute::brute_with(gm, ctl)?, None),
    })
}

/// Runs one algorithm on `gm` under `limits`. Solvers are deterministic;
/// `seed` is accepted so stochastic solvers can join the pool.
pub fn run<T: Energy>(alg: &AlgorithmId, gm: &FactorGraph<T>, instance: &str, limits: &RunLimits, seed: u64) -> RunRecord {
    let _ = seed;
    let estimate = memory_estimate(alg.name, gm);
    if estimate > limits.memory_budget {
        let msg = format!("estimated {estimate} bytes exceeds budget of {}", limits.memory_budget);
        return RunRecord::failed(alg, instance, Status::Error, 0.0, 0, msg);
    }
    let start = Instant::now();
    let mut ctl = Control::with_budget(limits.time_budget);
    let result = if alg.name.pairwise_only() {
        let stripped = gm.strip_higher_order();
        solve(alg, &stripped, &mut ctl)
    } else {
        solve(alg, gm, &mut ctl)
    };
    let elapsed = start.elapsed().as_secs_f64();
    let work = ctl.work();
    match result {
        Ok(_) if elapsed > limits.time_budget => {
            RunRecord::failed(alg, instance, Status::Timeout, elapsed, work, SolveError::Timeout.to_string())
        }
        Ok((labelling, bound)) => match gm.evaluate_energy(&labelling) {
            Ok(e) => RunRecord {
                alg: alg.name,
                params: alg.params.clone(),
                instance: instance.to_string(),
                status: Status::Completed,
                energy: Some(e.as_f64()),
                bound,
                time_s: elapsed,
                work,
                labels: Some(labelling.0),
                message: None,
            },
            Err(err) => RunRecord::failed(alg, instance, Status::Error, elapsed, work, err.to_string()),
        },
        Err(err) => {
            let status = match err {
                SolveError::Timeout => Status::Timeout,
                SolveError::Incompatible(_) => Status::Incompatible,
                SolveError::Refused(_) => Status::Error,
            };
            RunRecord::failed(alg, instance, status, elapsed, work, err.to_string())
        }
    }
}

/// Runs every registered parameterisation of `name` against a shared
/// budget and keeps the lowest energy; ties keep the earlier one. Time and
/// work are summed over all parameterisations.
pub fn meta_run<T: Energy>(name: AlgorithmName, gm: &FactorGraph<T>, instance: &str, limits: &RunLimits, seed: u64) -> RunRecord {
    let mut best: Option<RunRecord> = None;
    let mut worst_failure: Option<RunRecord> = None;
    let (mut time_s, mut work) = (0.0, 0u64);
    for alg in name.parameterisations() {
        let remaining = limits.time_budget - time_s;
        let rec = if remaining <= 0.0 {
            RunRecord::failed(&alg, instance, Status::Timeout, 0.0, 0, SolveError::Timeout.to_string())
        } else {
            run(&alg, gm, instance, &RunLimits { time_budget: remaining, ..*limits }, seed)
        };
        time_s += rec.time_s;
        work += rec.work;
        if rec.completed() {
            if best.as_ref().is_none_or(|b| rec.energy < b.energy) {
                best = Some(rec);
            }
        } else if worst_failure.as_ref().is_none_or(|w| rec.status.severity() > w.status.severity()) {
            worst_failure = Some(rec);
        }
    }
    let mut out = best.or(worst_failure).expect("at least one parameterisation");
    out.time_s = time_s;
    out.work = work;
    out
}

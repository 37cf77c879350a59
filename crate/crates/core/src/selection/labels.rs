//! Ground-truth targets derived from run records.

use serde::{Deserialize, Serialize};

use crate::graph::{match_fraction, Labelling};
use crate::inference::{AlgorithmName, RunRecord};

/// What "fastest" is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMeasure {
    /// The deterministic work counter; reproducible across runs.
    #[default]
    Work,
    WallTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelParams {
    pub epsilon_rel: f64,
    pub good_threshold: f64,
    pub cost: CostMeasure,
}

impl Default for LabelParams {
    fn default() -> Self {
        LabelParams { epsilon_rel: 1e-6, good_threshold: 0.98, cost: CostMeasure::Work }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("instance `{0}` has no completed record")]
    NoCompleted(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedLabels {
    /// Best-and-fastest: cheapest record reaching the lowest energy.
    pub bf: AlgorithmName,
    /// Good-and-fastest: cheapest record matching bf's labelling closely enough.
    pub gf: AlgorithmName,
    pub best_energy: f64,
    pub best_labelling: Labelling,
}

fn cost(r: &RunRecord, measure: CostMeasure) -> f64 {
    match measure {
        CostMeasure::Work => r.work as f64,
        CostMeasure::WallTime => r.time_s,
    }
}

fn cheapest<'a>(recs: impl Iterator<Item = &'a RunRecord>, measure: CostMeasure) -> Option<&'a RunRecord> {
    recs.min_by(|a, b| {
        cost(a, measure)
            .total_cmp(&cost(b, measure))
            .then(a.alg.registry_index().cmp(&b.alg.registry_index()))
    })
}

/// Derives both targets from all records of one instance.
pub fn derive_labels(records: &[RunRecord], params: &LabelParams) -> Result<DerivedLabels, LabelError> {
    let done: Vec<&RunRecord> = records.iter().filter(|r| r.completed() && r.energy.is_some()).collect();
    let instance = records.first().map(|r| r.instance.clone()).unwrap_or_default();
    let e_star = done
        .iter()
        .filter_map(|r| r.energy)
        .min_by(f64::total_cmp)
        .ok_or(LabelError::NoCompleted(instance))?;
    let limit = e_star + params.epsilon_rel * e_star.abs().max(1.0);
    let bf = cheapest(done.iter().copied().filter(|r| r.energy.unwrap() <= limit), params.cost)
        .expect("the minimum is in the best set");
    let best_labelling = bf.labelling().expect("completed records carry labels");
    let gf = cheapest(
        done.iter().copied().filter(|r| {
            r.labelling()
                .and_then(|l| match_fraction(&l, &best_labelling).ok())
                .is_some_and(|m| m >= params.good_threshold)
        }),
        params.cost,
    )
    .expect("bf itself qualifies");
    Ok(DerivedLabels { bf: bf.alg, gf: gf.alg, best_energy: e_star, best_labelling })
}

//! Selection models: a forest mapping features to an algorithm name.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::{fmt, fs, io};

use serde::{Deserialize, Serialize};

use crate::features::{extract, FeatureVector, D, FEATURE_NAMES};
use crate::graph::FactorGraph;
use crate::inference::AlgorithmName;
use crate::scalar::Energy;
use crate::selection::forest::{train_forest, Forest, ForestError, ForestParams, Node, Tree};
use crate::util::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Predict the best-and-fastest algorithm.
    Bf,
    /// Predict the good-and-fastest algorithm.
    #[default]
    Gf,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Bf => "bf",
            Task::Gf => "gf",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bf" => Ok(Task::Bf),
            "gf" => Ok(Task::Gf),
            other => Err(format!("unknown task `{other}`, expected bf or gf")),
        }
    }
}

/// One training example. The class tag is carried for reporting only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledSample {
    pub instance_id: String,
    pub class_tag: Option<String>,
    pub features: FeatureVector,
    pub target: AlgorithmName,
}

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error("training targets contain {0} distinct algorithm(s); at least 2 are needed")]
    Degenerate(usize),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("model feature layout does not match this build ({0})")]
    Layout(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel {
    pub task: Task,
    pub feature_names: Vec<String>,
    /// Class `k` of the forest is `registry_order[k]`.
    pub registry_order: Vec<AlgorithmName>,
    #[serde(flatten)]
    pub forest: Forest,
}

fn registry() -> Vec<AlgorithmName> {
    AlgorithmName::POOL.to_vec()
}

/// Trains a forest on the samples' targets.
pub fn train_selector(samples: &[LabelledSample], task: Task, params: &ForestParams) -> Result<SelectorModel, SelectError> {
    let distinct: BTreeSet<AlgorithmName> = samples.iter().map(|s| s.target).collect();
    if distinct.len() < 2 {
        return Err(SelectError::Degenerate(distinct.len()));
    }
    let order = registry();
    let x: Vec<Vec<f64>> = samples.iter().map(|s| s.features.values.clone()).collect();
    let y: Vec<usize> = samples.iter().map(|s| s.target.registry_index()).collect();
    let forest = train_forest(&x, &y, order.len(), params)?;
    Ok(SelectorModel {
        task,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        registry_order: order,
        forest,
    })
}

impl SelectorModel {
    /// A one-leaf model that always predicts `alg`.
    pub fn constant(task: Task, alg: AlgorithmName, params: &ForestParams) -> Self {
        let order = registry();
        let mut leaf = vec![0.0; order.len()];
        leaf[alg.registry_index()] = 1.0;
        SelectorModel {
            task,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            forest: Forest {
                params: *params,
                num_features: D,
                num_classes: order.len(),
                trees: vec![Tree { nodes: vec![Node::Leaf { leaf }] }],
            },
            registry_order: order,
        }
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<(AlgorithmName, Vec<f64>), SelectError> {
        let (k, dist) = self.forest.predict(&fv.values)?;
        Ok((self.registry_order[k], dist))
    }

    pub fn select<T: Energy>(&self, gm: &FactorGraph<T>) -> Result<(AlgorithmName, Vec<f64>), SelectError> {
        self.predict(&extract(gm))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn save(&self, path: &Path) -> Result<(), SelectError> {
        write_atomic(path, self.to_json().as_bytes())
            .map_err(|source| SelectError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, SelectError> {
        let p = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| SelectError::Io { path: p.clone(), source })?;
        let model: SelectorModel = serde_json::from_str(&text).map_err(|source| SelectError::Json { path: p, source })?;
        if model.feature_names != FEATURE_NAMES || model.forest.num_classes != model.registry_order.len() {
            return Err(SelectError::Layout(format!("{} features, {} classes", model.feature_names.len(), model.registry_order.len())));
        }
        Ok(model)
    }
}

/// CSV of features, target and instance id.
pub fn training_csv(samples: &[LabelledSample]) -> String {
    let mut out = FEATURE_NAMES.join(",");
    out.push_str(",target,instance_id\n");
    for s in samples {
        for v in &s.features.values {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{}", s.target, s.instance_id);
    }
    out
}

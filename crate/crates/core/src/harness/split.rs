//! Train/test splits over a manifest.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model_io::DatasetManifest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    RandomHalf,
    /// Leave one class out; the field is the held-out class tag.
    Loco(String),
}

/// Instance ids on each side. The two sides are disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub kind: SplitKind,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    Random,
    Loco,
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "random-half" => Ok(SplitMode::Random),
            "loco" => Ok(SplitMode::Loco),
            other => Err(format!("unknown split `{other}`, expected random or loco")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("manifest is empty")]
    Empty,
    #[error("leave-one-class-out needs at least 2 classes, found {0}")]
    SingleClass(usize),
}

/// Seeded shuffle; the first `floor(n/2)` ids train.
pub fn random_half(manifest: &DatasetManifest, seed: u64) -> Result<Split, SplitError> {
    if manifest.is_empty() {
        return Err(SplitError::Empty);
    }
    let mut ids: Vec<String> = manifest.entries.iter().map(|e| e.id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_ids = ids.split_off(ids.len() / 2);
    Ok(Split { kind: SplitKind::RandomHalf, train_ids: ids, test_ids })
}

/// One split per class tag, in first-appearance order.
pub fn loco(manifest: &DatasetManifest) -> Result<Vec<Split>, SplitError> {
    if manifest.is_empty() {
        return Err(SplitError::Empty);
    }
    let classes = manifest.classes();
    if classes.len() < 2 {
        return Err(SplitError::SingleClass(classes.len()));
    }
    Ok(classes
        .into_iter()
        .map(|c| {
            let (test, train): (Vec<_>, Vec<_>) = manifest.entries.iter().partition(|e| e.class == c);
            Split {
                kind: SplitKind::Loco(c),
                train_ids: train.into_iter().map(|e| e.id.clone()).collect(),
                test_ids: test.into_iter().map(|e| e.id.clone()).collect(),
            }
        })
        .collect())
}

pub fn make_splits(manifest: &DatasetManifest, mode: SplitMode, seed: u64) -> Result<Vec<Split>, SplitError> {
    match mode {
        SplitMode::Random => random_half(manifest, seed).map(|s| vec![s]),
        SplitMode::Loco => loco(manifest),
    }
}

impl Split {
    pub fn is_disjoint(&self) -> bool {
        let train: BTreeSet<&String> = self.train_ids.iter().collect();
        self.test_ids.iter().all(|t| !train.contains(t))
    }
}

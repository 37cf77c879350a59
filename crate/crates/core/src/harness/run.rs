//! Dataset-wide runs of every meta-algorithm on every instance.

use std::io;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::FactorGraph;
use crate::harness::store::RecordStore;
use crate::inference::{meta_run, AlgorithmId, AlgorithmName, RunLimits, RunRecord, Status};
use crate::model_io::DatasetManifest;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    /// Jobs executed by this call.
    pub new: usize,
    /// Jobs already present in the store.
    pub skipped: usize,
    /// New records whose status is not completed.
    pub failed: usize,
}

/// Runs each `(alg, instance)` pair missing from `store` on a pool of
/// `jobs` threads, appending records as they finish. The store is
/// compacted at the end so its file order does not depend on scheduling.
pub fn run_all(
    manifest: &DatasetManifest,
    algs: &[AlgorithmName],
    limits: &RunLimits,
    seed: u64,
    jobs: usize,
    store: &mut RecordStore,
) -> io::Result<RunSummary> {
    let mut todo: Vec<(usize, AlgorithmName)> = Vec::new();
    let mut skipped = 0;
    for (i, e) in manifest.entries.iter().enumerate() {
        for &a in algs {
            if store.contains(a, &e.id) {
                skipped += 1;
            } else {
                todo.push((i, a));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(io::Error::other)?;
    let needed: Vec<usize> = {
        let mut v: Vec<usize> = todo.iter().map(|t| t.0).collect();
        v.dedup();
        v
    };
    let mut models: Vec<Option<Result<FactorGraph<f64>, String>>> = (0..manifest.len()).map(|_| None).collect();
    let loaded: Vec<(usize, Result<FactorGraph<f64>, String>)> = pool.install(|| {
        needed
            .par_iter()
            .map(|&i| (i, manifest.load_model(&manifest.entries[i]).map_err(|e| e.to_string())))
            .collect()
    });
    for (i, m) in loaded {
        models[i] = Some(m);
    }

    let sink = Mutex::new((store, Ok::<(), io::Error>(()), 0usize));
    pool.install(|| {
        todo.par_iter().for_each(|&(i, alg)| {
            let entry = &manifest.entries[i];
            let rec = match models[i].as_ref().expect("loaded above") {
                Ok(gm) => {
                    let s = derive_seed(derive_seed(seed, entry.seed), alg.registry_index() as u64);
                    meta_run(alg, gm, &entry.id, limits, s)
                }
                Err(msg) => RunRecord::failed(&AlgorithmId::with_defaults(alg), &entry.id, Status::Error, 0.0, 0, msg.clone()),
            };
            log::debug!("{} on {}: {} in {:.3}s", alg, entry.id, rec.status, rec.time_s);
            let mut guard = sink.lock().expect("sink lock");
            let (store, result, failed) = &mut *guard;
            if !rec.completed() {
                *failed += 1;
            }
            if result.is_ok() {
                *result = store.append(rec);
            }
        });
    });
    let (store, result, failed) = sink.into_inner().expect("sink lock");
    result?;
    if !store.path().as_os_str().is_empty() {
        store.compact()?;
    }
    Ok(RunSummary { new: todo.len(), skipped, failed })
}

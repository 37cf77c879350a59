//! Evaluation of trained selectors and baselines on held-out instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::features::{extract, FeatureVector};
use crate::graph::match_fraction;
use crate::harness::split::{Split, SplitKind};
use crate::harness::store::RecordStore;
use crate::inference::{AlgorithmName, RunRecord};
use crate::model_io::{CorpusError, DatasetManifest};
use crate::selection::{
    baseline_nb, baseline_sb, derive_labels, superclass, train_selector, DerivedLabels, ForestParams, LabelParams,
    LabelledSample, SelectError, SelectorModel, Superclass, Task,
};
use crate::util::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("split {0} has no usable training instances")]
    EmptyTrain(String),
    #[error("no usable test instances")]
    EmptyTest,
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Everything evaluation needs about one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub id: String,
    pub class: String,
    pub features: FeatureVector,
    pub feature_time_s: f64,
    pub superclass: Superclass,
    pub labels: DerivedLabels,
}

impl InstanceRow {
    pub fn target(&self, task: Task) -> AlgorithmName {
        match task {
            Task::Bf => self.labels.bf,
            Task::Gf => self.labels.gf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: BTreeMap<String, InstanceRow>,
    /// Instances without any completed record, in manifest order.
    pub excluded: Vec<String>,
}

impl Dataset {
    pub fn samples<'a>(&'a self, ids: &'a [String], task: Task) -> impl Iterator<Item = LabelledSample> + 'a {
        ids.iter().filter_map(|id| self.rows.get(id)).map(move |r| LabelledSample {
            instance_id: r.id.clone(),
            class_tag: Some(r.class.clone()),
            features: r.features.clone(),
            target: r.target(task),
        })
    }
}

/// Loads every instance, extracts features and derives both targets.
pub fn build_dataset(manifest: &DatasetManifest, store: &RecordStore, labels: &LabelParams) -> Result<Dataset, EvalError> {
    let mut ds = Dataset::default();
    for e in &manifest.entries {
        let recs: Vec<RunRecord> = store.for_instance(&e.id).into_iter().cloned().collect();
        let Ok(derived) = derive_labels(&recs, labels) else {
            ds.excluded.push(e.id.clone());
            continue;
        };
        let gm = manifest.load_model(e)?;
        let t0 = Instant::now();
        let features = extract(&gm);
        let feature_time_s = t0.elapsed().as_secs_f64();
        let row = InstanceRow {
            id: e.id.clone(),
            class: e.class.clone(),
            features,
            feature_time_s,
            superclass: superclass(&gm),
            labels: derived,
        };
        ds.rows.insert(e.id.clone(), row);
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalParams {
    pub task: Task,
    pub forest: ForestParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodScore {
    /// Percentage of test instances whose prediction equals the target.
    pub pct_correct: f64,
    /// Mean fraction of variables agreeing with the best labelling.
    pub mean_match: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub mean_exhaustive_s: f64,
    pub mean_selected_s: f64,
    pub speed_up: f64,
    pub mean_exhaustive_work: f64,
    pub mean_selected_work: f64,
    pub work_speed_up: f64,
}

/// Rows are true labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub labels: Vec<AlgorithmName>,
    pub counts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub instance: String,
    pub class: String,
    pub target: AlgorithmName,
    pub model: AlgorithmName,
    pub nb: AlgorithmName,
    pub sb: AlgorithmName,
    pub model_match: f64,
    pub nb_match: f64,
    pub sb_match: f64,
    pub exhaustive_s: f64,
    pub selected_s: f64,
    pub exhaustive_work: u64,
    pub selected_work: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub kind: SplitKind,
    pub train: usize,
    pub test: usize,
    /// The training targets had a single value, so a constant model was used.
    pub constant_model: bool,
    pub model: MethodScore,
    pub nb: MethodScore,
    pub sb: MethodScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub test_instances: usize,
    pub model: MethodScore,
    pub nb: MethodScore,
    pub sb: MethodScore,
    pub timing: Timing,
    pub confusion: Confusion,
    pub splits: Vec<SplitSummary>,
    pub excluded: Vec<String>,
    pub selections: Vec<Selection>,
}

fn score_of(hits: &[(bool, f64)]) -> MethodScore {
    if hits.is_empty() {
        return MethodScore::default();
    }
    let n = hits.len() as f64;
    MethodScore {
        pct_correct: 100.0 * hits.iter().filter(|h| h.0).count() as f64 / n,
        mean_match: hits.iter().map(|h| h.1).sum::<f64>() / n,
    }
}

/// Match of `alg`'s labelling against the best one; 0 when `alg` did not complete.
fn match_of(store: &RecordStore, row: &InstanceRow, alg: AlgorithmName) -> f64 {
    store
        .get(alg, &row.id)
        .and_then(RunRecord::labelling)
        .and_then(|l| match_fraction(&l, &row.labels.best_labelling).ok())
        .unwrap_or(0.0)
}

fn train_model(samples: &[LabelledSample], params: &EvalParams) -> Result<(SelectorModel, bool), SelectError> {
    match train_selector(samples, params.task, &params.forest) {
        Ok(m) => Ok((m, false)),
        Err(SelectError::Degenerate(_)) => {
            let alg = baseline_nb(&samples.iter().map(|s| s.target).collect::<Vec<_>>()).expect("non-empty training side");
            Ok((SelectorModel::constant(params.task, alg, &params.forest), true))
        }
        Err(e) => Err(e),
    }
}

fn split_name(kind: &SplitKind) -> String {
    match kind {
        SplitKind::RandomHalf => "random-half".into(),
        SplitKind::Loco(c) => format!("loco({c})"),
    }
}

/// Trains on each split's train side and pools results over all test sides.
pub fn evaluate(dataset: &Dataset, splits: &[Split], store: &RecordStore, params: &EvalParams) -> Result<EvalReport, EvalError> {
    let task = params.task;
    let mut selections = Vec::new();
    let mut summaries = Vec::new();
    let mut excluded: BTreeSet<String> = BTreeSet::new();
    for split in splits {
        assert!(split.is_disjoint(), "train and test sides overlap");
        let train: Vec<LabelledSample> = dataset.samples(&split.train_ids, task).collect();
        if train.is_empty() {
            return Err(EvalError::EmptyTrain(split_name(&split.kind)));
        }
        let (model, constant_model) = train_model(&train, params)?;
        let nb = baseline_nb(&train.iter().map(|s| s.target).collect::<Vec<_>>()).expect("non-empty");
        let sb_pairs: Vec<(Superclass, AlgorithmName)> = split
            .train_ids
            .iter()
            .filter_map(|id| dataset.rows.get(id))
            .map(|r| (r.superclass, r.target(task)))
            .collect();
        let sb = baseline_sb(&sb_pairs).expect("non-empty");

        let first = selections.len();
        for id in &split.test_ids {
            let Some(row) = dataset.rows.get(id) else {
                excluded.insert(id.clone());
                continue;
            };
            let t0 = Instant::now();
            let (pred, _) = model.predict(&row.features)?;
            let predict_s = t0.elapsed().as_secs_f64();
            let sb_pred = sb.predict(row.superclass);
            let recs = store.for_instance(id);
            let chosen = store.get(pred, id);
            selections.push(Selection {
                instance: id.clone(),
                class: row.class.clone(),
                target: row.target(task),
                model: pred,
                nb,
                sb: sb_pred,
                model_match: match_of(store, row, pred),
                nb_match: match_of(store, row, nb),
                sb_match: match_of(store, row, sb_pred),
                exhaustive_s: recs.iter().map(|r| r.time_s).sum(),
                selected_s: row.feature_time_s + predict_s + chosen.map_or(0.0, |r| r.time_s),
                exhaustive_work: recs.iter().map(|r| r.work).sum(),
                selected_work: chosen.map_or(0, |r| r.work),
            });
        }
        let here = &selections[first..];
        summaries.push(SplitSummary {
            kind: split.kind.clone(),
            train: train.len(),
            test: here.len(),
            constant_model,
            model: score_of(&here.iter().map(|s| (s.model == s.target, s.model_match)).collect::<Vec<_>>()),
            nb: score_of(&here.iter().map(|s| (s.nb == s.target, s.nb_match)).collect::<Vec<_>>()),
            sb: score_of(&here.iter().map(|s| (s.sb == s.target, s.sb_match)).collect::<Vec<_>>()),
        });
    }
    if selections.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    excluded.extend(dataset.excluded.iter().cloned());
    let n = selections.len() as f64;
    let mean = |f: &dyn Fn(&Selection) -> f64| selections.iter().map(f).sum::<f64>() / n;
    let (ex_s, sel_s) = (mean(&|s| s.exhaustive_s), mean(&|s| s.selected_s));
    let (ex_w, sel_w) = (mean(&|s| s.exhaustive_work as f64), mean(&|s| s.selected_work as f64));
    let timing = Timing {
        mean_exhaustive_s: ex_s,
        mean_selected_s: sel_s,
        speed_up: if sel_s > 0.0 { ex_s / sel_s } else { f64::INFINITY },
        mean_exhaustive_work: ex_w,
        mean_selected_work: sel_w,
        work_speed_up: if sel_w > 0.0 { ex_w / sel_w } else { f64::INFINITY },
    };
    Ok(EvalReport {
        task,
        test_instances: selections.len(),
        model: score_of(&selections.iter().map(|s| (s.model == s.target, s.model_match)).collect::<Vec<_>>()),
        nb: score_of(&selections.iter().map(|s| (s.nb == s.target, s.nb_match)).collect::<Vec<_>>()),
        sb: score_of(&selections.iter().map(|s| (s.sb == s.target, s.sb_match)).collect::<Vec<_>>()),
        timing,
        confusion: confusion(&selections),
        splits: summaries,
        excluded: excluded.into_iter().collect(),
        selections,
    })
}

fn confusion(selections: &[Selection]) -> Confusion {
    let present: BTreeSet<(usize, AlgorithmName)> = selections
        .iter()
        .flat_map(|s| [s.target, s.model])
        .map(|a| (a.registry_index(), a))
        .collect();
    let labels: Vec<AlgorithmName> = present.into_iter().map(|p| p.1).collect();
    let pos = |a: AlgorithmName| labels.iter().position(|&l| l == a).expect("label present");
    let mut counts = vec![vec![0; labels.len()]; labels.len()];
    for s in selections {
        counts[pos(s.target)][pos(s.model)] += 1;
    }
    Confusion { labels, counts }
}

impl Confusion {
    pub fn diagonal(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let _ = write!(out, "{l}");
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_text(&self) -> String {
        let model = match self.task {
            Task::Bf => "BF",
            Task::Gf => "GF",
        };
        let mut out = String::new();
        let _ = writeln!(out, "task {}  test instances {}", self.task, self.test_instances);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8} {:>10} {:>12}", "method", "% correct", "% matching");
        for (name, s) in [(model, &self.model), ("NB", &self.nb), ("SB", &self.sb)] {
            let _ = writeln!(out, "{:<8} {:>10.1} {:>12.1}", name, s.pct_correct, 100.0 * s.mean_match);
        }
        let t = &self.timing;
        let _ = writeln!(out);
        let _ = writeln!(out, "mean exhaustive time {:.4} s, mean select+run time {:.4} s, speed-up {:.2}x", t.mean_exhaustive_s, t.mean_selected_s, t.speed_up);
        let _ = writeln!(out, "mean exhaustive work {:.0}, mean selected work {:.0}, work speed-up {:.2}x", t.mean_exhaustive_work, t.mean_selected_work, t.work_speed_up);
        if self.splits.len() > 1 {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<28} {:>6} {:>6} {:>10} {:>10} {:>10}", "split", "train", "test", model, "NB", "SB");
            for s in &self.splits {
                let _ = writeln!(
                    out,
                    "{:<28} {:>6} {:>6} {:>10.1} {:>10.1} {:>10.1}",
                    split_name(&s.kind),
                    s.train,
                    s.test,
                    100.0 * s.model.mean_match,
                    100.0 * s.nb.mean_match,
                    100.0 * s.sb.mean_match
                );
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "confusion (rows true, columns predicted)");
        let _ = write!(out, "{:<10}", "");
        for l in &self.confusion.labels {
            let _ = write!(out, "{:>9}", l.as_str());
        }
        out.push('\n');
        for (l, row) in self.confusion.labels.iter().zip(&self.confusion.counts) {
            let _ = write!(out, "{:<10}", l.as_str());
            for c in row {
                let _ = write!(out, "{c:>9}");
            }
            out.push('\n');
        }
        if !self.excluded.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "excluded (no completed record): {}", self.excluded.join(", "));
        }
        let _ = writeln!(out, "a selected algorithm that did not complete scores 0 matching variables");
        out
    }

    /// Writes `<stem>.txt`, `<stem>.json` and `<stem>.confusion.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, EvalError> {
        let files = [
            (format!("{stem}.txt"), self.to_text()),
            (format!("{stem}.json"), self.to_json()),
            (format!("{stem}.confusion.csv"), self.confusion.to_csv()),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            write_atomic(&path, body.as_bytes()).map_err(|source| EvalError::Io { path: path.clone(), source })?;
            out.push(path);
        }
        Ok(out)
    }
}

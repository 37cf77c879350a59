use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use infersel::features::{extract, to_csv, to_json_line, FeatureVector};
use infersel::harness::{build_dataset, evaluate, make_splits, run_all, Dataset, EvalParams, RecordStore, SplitMode};
use infersel::inference::{meta_run, parse_params, run, AlgorithmId, AlgorithmName, RunLimits, RunRecord};
use infersel::model_io::{build_corpus, load_model, standard_specs, ClassSpec, DatasetManifest, MANIFEST_FILE};
use infersel::selection::{train_selector, CostMeasure, ForestParams, LabelParams, SelectorModel, Task};
use infersel::util::write_atomic;

use crate::error::CliError;
use crate::{Cli, Command, DataArgs, ForestArgs, LimitArgs, Result};

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { path } => validate(path),
        Command::Solve { path, alg, params, meta, limits, seed, out } => {
            solve(path, alg, params.as_deref(), *meta, limits, *seed, out.as_deref())
        }
        Command::Features { paths, manifest, json, out } => {
            let manifest = (paths.is_empty()).then(|| cli.path_or(manifest, &format!("corpus/{MANIFEST_FILE}")));
            features(paths, manifest.as_deref(), *json, out.as_deref())
        }
        Command::Generate { specs, per_class, seed, out } => {
            generate(specs.as_deref(), *per_class, *seed, &cli.path_or(out, "corpus"))
        }
        Command::RunAll { manifest, records, alg, limits, jobs, seed } => {
            let manifest = cli.path_or(manifest, &format!("corpus/{MANIFEST_FILE}"));
            let records = cli.path_or(records, "records.jsonl");
            run_all_cmd(&manifest, &records, alg.as_deref(), limits, *jobs, *seed)
        }
        Command::Train { data, out, forest } => {
            let task = parse_task(&data.task)?;
            let out = cli.path_or(out, &format!("model-{task}.json"));
            train(cli, data, task, forest, &out)
        }
        Command::Select { path, model, task, run, limits, seed } => {
            let task = parse_task(task)?;
            let model = cli.path_or(model, &format!("model-{task}.json"));
            select(path, &model, *run, limits, *seed)
        }
        Command::Evaluate { data, split, out, forest } => {
            let mode: SplitMode = split.parse().map_err(CliError::Usage)?;
            evaluate_cmd(cli, data, mode, forest, &cli.path_or(out, "reports"))
        }
    }
}

fn parse_task(s: &str) -> Result<Task> {
    s.parse().map_err(CliError::Usage)
}

fn limits_of(l: &LimitArgs) -> Result<RunLimits> {
    if !(l.time_budget.is_finite() && l.time_budget > 0.0) {
        return Err(CliError::Usage(format!("--time-budget must be positive, got {}", l.time_budget)));
    }
    Ok(RunLimits { time_budget: l.time_budget, memory_budget: l.memory_budget })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(CliError::io(p)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::io("<stdout>"))
        }
    }
}

fn require(path: &Path, what: &'static str, stage: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingStage { what, stage, path: path.to_path_buf() })
    }
}

fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    require(path, "manifest", "generate")?;
    Ok(DatasetManifest::read(path)?)
}

fn open_records(path: &Path) -> Result<RecordStore> {
    let store = RecordStore::open(path).map_err(CliError::io(path))?;
    for c in store.corrupt_lines() {
        log::warn!("{}: skipping corrupt line {}: {}", path.display(), c.line, c.error);
    }
    Ok(store)
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn validate(path: &Path) -> Result<()> {
    let gm = load_model(path)?;
    println!(
        "{}: valid ({} variables, {} factors, max order {})",
        path.display(),
        gm.num_vars(),
        gm.num_factors(),
        gm.max_factor_order()
    );
    Ok(())
}

fn solve(path: &Path, alg: &str, params: Option<&str>, meta: bool, limits: &LimitArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let name: AlgorithmName = alg.parse().map_err(|e: infersel::inference::AlgorithmError| CliError::Usage(e.to_string()))?;
    let given = parse_params(params.unwrap_or("")).map_err(|e| CliError::Usage(e.to_string()))?;
    let id = AlgorithmId::new(name, given).map_err(|e| CliError::Usage(e.to_string()))?;
    let limits = limits_of(limits)?;
    let gm = load_model(path)?;
    let inst = instance_id(path);
    let rec: RunRecord = if meta { meta_run(name, &gm, &inst, &limits, seed) } else { run(&id, &gm, &inst, &limits, seed) };
    let mut line = serde_json::to_string(&rec).expect("records serialise");
    line.push('\n');
    emit(&line, out)
}

fn features(paths: &[PathBuf], manifest: Option<&Path>, json: bool, out: Option<&Path>) -> Result<()> {
    let rows: Vec<(String, FeatureVector)> = match manifest {
        Some(m) => {
            let manifest = read_manifest(m)?;
            let mut rows = Vec::with_capacity(manifest.len());
            for e in &manifest.entries {
                rows.push((e.id.clone(), extract(&manifest.load_model(e)?)));
            }
            rows
        }
        None => paths.iter().map(|p| Ok((instance_id(p), extract(&load_model(p)?)))).collect::<Result<_>>()?,
    };
    let text = if json {
        rows.iter().map(|(id, fv)| to_json_line(id, fv) + "\n").collect()
    } else {
        to_csv(rows.iter().map(|(id, fv)| (id.as_str(), fv)))
    };
    emit(&text, out)
}

fn generate(specs: Option<&Path>, per_class: usize, seed: u64, out: &Path) -> Result<()> {
    let specs: Vec<ClassSpec> = match specs {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(CliError::io(p))?;
            serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", p.display())))?
        }
        None => standard_specs(),
    };
    let m = build_corpus(&specs, per_class, seed, out)?;
    println!("wrote {} instances of {} classes to {}", m.len(), specs.len(), out.join(MANIFEST_FILE).display());
    Ok(())
}

fn parse_algs(list: Option<&str>) -> Result<Vec<AlgorithmName>> {
    match list {
        None => Ok(AlgorithmName::POOL.to_vec()),
        Some(s) => s
            .split(',')
            .map(|a| a.trim().parse().map_err(|e: infersel::inference::AlgorithmError| CliError::Usage(e.to_string())))
            .collect(),
    }
}

fn run_all_cmd(manifest: &Path, records: &Path, algs: Option<&str>, limits: &LimitArgs, jobs: usize, seed: u64) -> Result<()> {
    let algs = parse_algs(algs)?;
    let limits = limits_of(limits)?;
    let manifest = read_manifest(manifest)?;
    let mut store = open_records(records)?;
    let s = run_all(&manifest, &algs, &limits, seed, jobs, &mut store).map_err(CliError::io(records))?;
    println!("{} new records, {} already present, {} not completed; store {}", s.new, s.skipped, s.failed, records.display());
    Ok(())
}

fn label_params(data: &DataArgs) -> Result<LabelParams> {
    let cost = match data.cost.as_str() {
        "work" => CostMeasure::Work,
        "wall-time" | "time" => CostMeasure::WallTime,
        other => return Err(CliError::Usage(format!("unknown cost `{other}`, expected work or wall-time"))),
    };
    Ok(LabelParams { cost, ..LabelParams::default() })
}

fn forest_params(f: &ForestArgs) -> ForestParams {
    ForestParams { tree_count: f.trees, seed: f.seed, ..ForestParams::default() }
}

fn load_dataset(cli: &Cli, data: &DataArgs) -> Result<(DatasetManifest, RecordStore, Dataset)> {
    let manifest = read_manifest(&cli.path_or(&data.manifest, &format!("corpus/{MANIFEST_FILE}")))?;
    let records = cli.path_or(&data.records, "records.jsonl");
    require(&records, "records store", "run-all")?;
    let store = open_records(&records)?;
    let ds = build_dataset(&manifest, &store, &label_params(data)?)?;
    for id in &ds.excluded {
        log::warn!("excluding {id}: no completed record");
    }
    Ok((manifest, store, ds))
}

fn train(cli: &Cli, data: &DataArgs, task: Task, forest: &ForestArgs, out: &Path) -> Result<()> {
    let (manifest, _, ds) = load_dataset(cli, data)?;
    let ids: Vec<String> = manifest.entries.iter().map(|e| e.id.clone()).collect();
    let samples: Vec<_> = ds.samples(&ids, task).collect();
    let model = train_selector(&samples, task, &forest_params(forest))?;
    model.save(out)?;
    println!("trained {task} model on {} instances; wrote {}", samples.len(), out.display());
    Ok(())
}

fn select(path: &Path, model: &Path, run_it: bool, limits: &LimitArgs, seed: u64) -> Result<()> {
    require(model, "selection model", "train")?;
    let limits = limits_of(limits)?;
    let model = SelectorModel::load(model)?;
    let gm = load_model(path)?;
    let (alg, _) = model.select(&gm)?;
    println!("{alg}");
    if run_it {
        let rec = meta_run(alg, &gm, &instance_id(path), &limits, seed);
        println!("{}", serde_json::to_string(&rec).expect("records serialise"));
    }
    Ok(())
}

fn evaluate_cmd(cli: &Cli, data: &DataArgs, mode: SplitMode, forest: &ForestArgs, out: &Path) -> Result<()> {
    let task = parse_task(&data.task)?;
    let (manifest, store, ds) = load_dataset(cli, data)?;
    let splits = make_splits(&manifest, mode, forest.seed)?;
    let params = EvalParams { task, forest: forest_params(forest) };
    let report = evaluate(&ds, &splits, &store, &params)?;
    let split = match mode {
        SplitMode::Random => "random",
        SplitMode::Loco => "loco",
    };
    let files = report.write(out, &format!("eval-{task}-{split}"))?;
    print!("{}", report.to_text());
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

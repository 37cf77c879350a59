//! Corpus generation and the JSON-lines dataset manifest.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::FactorGraph;
use crate::model_io::fge::{parse_fge, write_fge, ParseError};
use crate::model_io::generate::{generate, ClassSpec, SpecError};
use crate::model_io::uai::import_uai;
use crate::util::{derive_seed, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("no class specs given")]
    NoSpecs,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Model path, relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    pub class: String,
    pub seed: u64,
}

/// Instances of a dataset, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    pub fn load_model(&self, entry: &ManifestEntry) -> Result<FactorGraph<f64>, CorpusError> {
        load_model(&self.resolve(entry))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, root: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ManifestEntry = serde_json::from_str(line)
                .map_err(|err| CorpusError::Manifest { line: i + 1, message: err.to_string() })?;
            if !ids.insert(e.id.clone()) {
                return Err(CorpusError::Manifest { line: i + 1, message: format!("duplicate id `{}`", e.id) });
            }
            entries.push(e);
        }
        Ok(DatasetManifest { entries, root: root.into() })
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_jsonl(&text, root)
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        write_atomic(path, self.to_jsonl().as_bytes()).map_err(io_err(path))
    }

    /// Distinct class tags in first-appearance order.
    pub fn classes(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries.iter().filter(|e| seen.insert(e.class.clone())).map(|e| e.class.clone()).collect()
    }
}

/// Reads an FGE file, or a UAI file when the extension is `.uai`.
pub fn load_model(path: &Path) -> Result<FactorGraph<f64>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("uai")) {
        import_uai(&text)
    } else {
        parse_fge(&text)
    };
    parsed.map_err(|source| CorpusError::Parse { path: path.to_path_buf(), source })
}

/// The built-in benchmark classes. Different algorithms are cheapest to
/// reach a near-best labelling on different classes.
pub fn standard_specs() -> Vec<ClassSpec> {
    use crate::model_io::generate::GeneratorKind as G;
    vec![
        ClassSpec::new(G::GridPotts).named("denoise-large").vars(400, 900).labels(3, 5).scales(1.0, 0.005, 0.0),
        ClassSpec::new(G::GridPotts).named("binary-seg").vars(100, 196).labels(2, 2).scales(1.0, 0.8, 0.0),
        ClassSpec::new(G::GridPotts).named("denoise-strong").vars(64, 100).labels(3, 5).scales(1.0, 1.5, 0.0),
        ClassSpec::new(G::ChainTree).named("chains").vars(20, 40).labels(3, 6),
        ClassSpec::new(G::PartitionPotts).named("clustering").vars(8, 12).labels(8, 12),
        ClassSpec::new(G::HigherOrderPattern).named("patterns").vars(36, 64).labels(2, 2).order(3, 4),
        ClassSpec::new(G::RandomIrregular).named("sparse-general").vars(20, 40).labels(3, 5),
        ClassSpec::new(G::PartitionPotts).named("clustering-dense").vars(12, 16).labels(12, 16).connectivity(0.5),
    ]
}

/// Generates `per_class` instances of every spec under `out_dir` and
/// writes `out_dir/manifest.jsonl`.
pub fn build_corpus(
    specs: &[ClassSpec],
    per_class: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<DatasetManifest, CorpusError> {
    if specs.is_empty() {
        return Err(CorpusError::NoSpecs);
    }
    for s in specs {
        s.validate()?;
    }
    let mut entries = Vec::with_capacity(specs.len() * per_class);
    for (ci, spec) in specs.iter().enumerate() {
        let class_seed = derive_seed(seed, ci as u64);
        for i in 0..per_class {
            let inst_seed = derive_seed(class_seed, i as u64);
            let gm = generate::<f64>(spec, inst_seed)?;
            let id = format!("{}-{:03}", spec.name, i);
            let rel = PathBuf::from(&spec.name).join(format!("{id}.fge"));
            let path = out_dir.join(&rel);
            write_atomic(&path, write_fge(&gm).as_bytes()).map_err(io_err(&path))?;
            entries.push(ManifestEntry { id, path: rel, class: spec.name.clone(), seed: inst_seed });
        }
    }
    let manifest = DatasetManifest { entries, root: out_dir.to_path_buf() };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

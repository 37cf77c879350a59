//! Append-only JSON-lines store of run records.
//!
//! Records are keyed by `(algorithm, instance)`. A later line with the same
//! key replaces an earlier one. Lines that fail to parse are reported and
//! skipped, so a torn final write never blocks a resumed run.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::inference::{AlgorithmName, RunRecord};
use crate::util::write_atomic;

pub type RecordKey = (AlgorithmName, String);

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptLine {
    pub line: usize,
    pub error: String,
}

#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    records: BTreeMap<RecordKey, RunRecord>,
    corrupt: Vec<CorruptLine>,
}

impl RecordStore {
    /// Opens `path`, treating a missing file as an empty store.
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut store = RecordStore { path: path.to_path_buf(), records: BTreeMap::new(), corrupt: Vec::new() };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e),
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RunRecord>(line) {
                Ok(r) => {
                    store.records.insert((r.alg, r.instance.clone()), r);
                }
                Err(e) => store.corrupt.push(CorruptLine { line: i + 1, error: e.to_string() }),
            }
        }
        Ok(store)
    }

    /// In-memory store for records that need no persistence.
    pub fn from_records(records: impl IntoIterator<Item = RunRecord>) -> Self {
        let records = records.into_iter().map(|r| ((r.alg, r.instance.clone()), r)).collect();
        RecordStore { path: PathBuf::new(), records, corrupt: Vec::new() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn corrupt_lines(&self) -> &[CorruptLine] {
        &self.corrupt
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, alg: AlgorithmName, instance: &str) -> bool {
        self.records.contains_key(&(alg, instance.to_string()))
    }

    pub fn get(&self, alg: AlgorithmName, instance: &str) -> Option<&RunRecord> {
        self.records.get(&(alg, instance.to_string()))
    }

    /// Records of one instance in registry order.
    pub fn for_instance(&self, instance: &str) -> Vec<&RunRecord> {
        let mut out: Vec<&RunRecord> = self.records.values().filter(|r| r.instance == instance).collect();
        out.sort_by_key(|r| r.alg.registry_index());
        out
    }

    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.values()
    }

    /// Appends one line to the file and records it in memory.
    pub fn append(&mut self, record: RunRecord) -> io::Result<()> {
        if !self.path.as_os_str().is_empty() {
            if let Some(dir) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut line = serde_json::to_string(&record).expect("records serialise");
            line.push('\n');
            let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        self.records.insert((record.alg, record.instance.clone()), record);
        Ok(())
    }

    /// Rewrites the file sorted by key, dropping duplicates and corrupt lines.
    pub fn compact(&mut self) -> io::Result<()> {
        let mut text = String::new();
        for r in self.records.values() {
            text.push_str(&serde_json::to_string(r).expect("records serialise"));
            text.push('\n');
        }
        write_atomic(&self.path, text.as_bytes())?;
        self.corrupt.clear();
        Ok(())
    }
}

use std::io;
use std::path::PathBuf;

use infersel::harness::{EvalError, SplitError};
use infersel::model_io::CorpusError;
use infersel::selection::SelectError;

/// Exit code 1 for domain and usage errors, 2 for I/O and missing stages.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("missing {what} at {path}; run `infersel {stage}` first")]
    MissingStage { what: &'static str, stage: &'static str, path: PathBuf },
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::MissingStage { .. } => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<SelectError> for CliError {
    fn from(e: SelectError) -> Self {
        match e {
            SelectError::Io { path, source } => CliError::Io { path: path.into(), source },
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Corpus(c) => c.into(),
            EvalError::Select(s) => s.into(),
            EvalError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<SplitError> for CliError {
    fn from(e: SplitError) -> Self {
        CliError::Domain(e.to_string())
    }
}

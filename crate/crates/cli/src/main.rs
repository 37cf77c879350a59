//! `infersel`: generate corpora, run solvers, train selectors and evaluate them.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "infersel", version, about = "MAP inference and learned algorithm selection for discrete factor graphs")]
pub struct Cli {
    /// Root directory for artifacts whose paths are not given explicitly.
    #[arg(long, global = true, env = "INFERSEL_DATA_DIR", default_value = "infersel-data")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a model file parses and is well formed.
    Validate { path: PathBuf },
    /// Run one algorithm on one model and print the run record.
    Solve {
        path: PathBuf,
        #[arg(long)]
        alg: String,
        /// Parameter overrides, `k=v,...`.
        #[arg(long)]
        params: Option<String>,
        /// Run every registered parameterisation and keep the best.
        #[arg(long, conflicts_with = "params")]
        meta: bool,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract feature vectors as CSV.
    Features {
        /// Model files; when empty, every instance of the manifest.
        paths: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Emit JSON lines instead of CSV.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus and its manifest.
    Generate {
        /// JSON array of class specs; the built-in classes when absent.
        #[arg(long)]
        specs: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to `<data-dir>/corpus`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every algorithm on every instance, resuming from existing records.
    RunAll {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
        /// Comma-separated algorithm names; the whole pool when absent.
        #[arg(long)]
        alg: Option<String>,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a selection model on every instance of the manifest.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        forest: ForestArgs,
    },
    /// Predict the algorithm for a model, optionally running it.
    Select {
        path: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "gf")]
        task: String,
        #[arg(long)]
        run: bool,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate selectors and baselines on held-out instances.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// `random` (half/half) or `loco` (leave one class out).
        #[arg(long, default_value = "random")]
        split: String,
        /// Report directory; defaults to `<data-dir>/reports`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        forest: ForestArgs,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct LimitArgs {
    /// Wall-clock seconds per run.
    #[arg(long, default_value_t = 30.0)]
    pub time_budget: f64,
    /// Advisory memory budget in bytes.
    #[arg(long, default_value_t = 1 << 30)]
    pub memory_budget: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long, default_value = "gf")]
    pub task: String,
    /// Label targets by `work` (deterministic) or `wall-time`.
    #[arg(long, default_value = "work")]
    pub cost: String,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("infersel: {e}");
            ExitCode::from(e.code())
        }
    }
}

impl Cli {
    fn path_or(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.data_dir.join(default))
    }
}

pub(crate) type Result<T> = std::result::Result<T, CliError>;

//! Dataset-wide runs, splits and evaluation reports.

pub mod eval;
pub mod run;
pub mod split;
pub mod store;

pub use eval::{build_dataset, evaluate, Confusion, Dataset, EvalError, EvalParams, EvalReport, InstanceRow, MethodScore, Selection, SplitSummary, Timing};
pub use run::{run_all, RunSummary};
pub use split::{loco, make_splits, random_half, Split, SplitError, SplitKind, SplitMode};
pub use store::{CorruptLine, RecordStore};

//! MAP inference on discrete factor graphs with automatic algorithm selection.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: models, labellings, energies and factor predicates
//! * [`model_io`]: FGE/UAI files, synthetic class generators and manifests
//! * [`inference`]: the solver pool behind a uniform, time-limited interface
//! * [`features`]: fixed-length instance descriptors
//! * [`selection`]: random forests, label derivation and baselines
//! * [`harness`]: dataset-wide runs, splits, evaluation and reports
//!
//! Numerical code is generic over [`Energy`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what files and the harness use.

// Index loops over parallel arrays read better than zipped iterators here.
#![allow(clippy::needless_range_loop)]

pub mod features;
pub mod graph;
pub mod harness;
pub mod inference;
pub mod model_io;
pub mod scalar;
pub mod selection;
pub mod util;

pub use graph::{classify_factor, match_fraction, Factor, FactorClass, FactorGraph, GraphError, Labelling};
pub use scalar::Energy;

pub type FactorGraphF64 = FactorGraph<f64>;
pub type FactorGraphF32 = FactorGraph<f32>;
pub type FactorF64 = Factor<f64>;
pub type FactorF32 = Factor<f32>;

//! Random forests, target derivation, selection models and baselines.

pub mod baselines;
pub mod forest;
pub mod labels;
pub mod selector;

pub use baselines::{baseline_nb, baseline_sb, superclass, Superclass, SuperclassBaseline};
pub use forest::{train_forest, Forest, ForestError, ForestParams, Node, Tree};
pub use labels::{derive_labels, CostMeasure, DerivedLabels, LabelError, LabelParams};
pub use selector::{train_selector, training_csv, LabelledSample, SelectError, SelectorModel, Task};

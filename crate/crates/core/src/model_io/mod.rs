//! Model files, synthetic generators and dataset manifests.

pub mod corpus;
pub mod fge;
pub mod generate;
pub mod uai;

pub use corpus::{build_corpus, load_model, standard_specs, CorpusError, DatasetManifest, ManifestEntry, MANIFEST_FILE};
pub use fge::{parse_fge, write_fge, ParseError};
pub use generate::{generate, ClassSpec, GeneratorKind, SpecError};
pub use uai::{import_uai, import_uai_with_floor, POTENTIAL_FLOOR};

//! Experiment runner for `sglr-core`: flat configuration files, CSV/JSON
//! artifacts, checkpoints and the pipelines behind the `sglr` binary.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};

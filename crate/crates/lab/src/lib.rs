//! Experiment runner for `saclab-core`: configuration, seeded runs and
//! sweeps, artifact files and the acceptance suite.

pub mod config;
pub mod error;
pub mod experiment;
pub mod format;
pub mod verify;

pub use config::{ExperimentConfig, LoadedConfig};
pub use error::{LabError, LabResult};

//! Config-driven experiment runner: data generation, both training steps,
//! baselines, metrics, and CSV exports.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use pipeline::{Run, Stage};

//! Experiment harness around `momgmm-core`: instance generation, learning
//! runs, spectral diagnostics and fixtures, with CSV and JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, MomentSpec};
pub use error::CliError;

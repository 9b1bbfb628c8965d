//! Experiment driver behind the `gstlab` binary.

pub mod commands;
pub mod config;

pub use config::ExperimentConfig;

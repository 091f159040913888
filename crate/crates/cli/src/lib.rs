//! Experiment runner for mirrorlab: configuration, problem registry, trace
//! artifacts, parameter sweeps, rate checks and audits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod rates;
pub mod registry;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{execute, run_experiment, Execution, RunOptions};

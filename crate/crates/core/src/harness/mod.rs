//! Configuration, experiment orchestration, report emission and the CLI.

pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;

pub use config::RunConfig;
pub use sweep::{fit_order, sweep_epsilon, SweepRecord};

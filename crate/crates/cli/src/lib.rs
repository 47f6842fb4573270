//! Config-driven runner for ddkit experiments.
//!
//! A run takes a JSON [`config::ExperimentConfig`], sweeps the total time `T`
//! through one engine, writes a CSV table with `#` provenance lines, and
//! optionally fits the power-law order of one column into a JSON report.

pub mod config;
pub mod family;
pub mod run;

use thiserror::Error;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "DDKIT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    /// 2 for usage and config errors, 1 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

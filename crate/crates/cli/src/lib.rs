//! Harness around [`gmatch_core`]: file formats, experiment
//! configuration, recovery metrics, a brute-force oracle, and the grid
//! driver that sweeps penalty/weight parameters over Monte Carlo
//! repetitions and emits CSV tables.

pub mod config;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod oracle;

use std::fmt;

/// Harness-level error, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data (exit code 1).
    Config(String),
    /// File system or serialization failure (exit code 2).
    Io(String),
    /// Exhaustive search refused: instance too large (exit code 3).
    TooLarge(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::TooLarge(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid input: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::TooLarge(msg) => write!(f, "instance too large: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gmatch_core::Error> for CliError {
    fn from(e: gmatch_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

//! Experiment driver: MNIST accuracy tables, sparsity sweeps, image
//! triptychs and the Monte-Carlo verification suite.

pub mod config;
pub mod experiments;
pub mod output;
pub mod suite;

pub use config::{EnsembleConfig, ExperimentConfig};

use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    /// A hard check of the verification suite failed.
    Acceptance(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Acceptance(m) => write!(f, "check failed: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sparse_defense::Error> for CliError {
    fn from(e: sparse_defense::Error) -> Self {
        use sparse_defense::Error as E;
        match e {
            E::Format(_) | E::Consistency(_) | E::Data(_) => CliError::Data(e.to_string()),
            E::InvalidArgument(_) | E::SparsityOutOfRange { .. } => CliError::Config(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

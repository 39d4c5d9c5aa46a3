//! Configuration loading, experiment dispatch and table output for the
//! `cxdisc` command-line tool.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Experiment, ExperimentConfig, Overrides, Resolved};
pub use output::Table;
pub use run::{compute, execute, RunReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),

    #[error("{name}: {source}", name = .source.name())]
    Numeric { source: cxdisc::Error },

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

impl From<cxdisc::Error> for CliError {
    fn from(e: cxdisc::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric { source: e }
        }
    }
}

impl CliError {
    /// Process exit status: 2 for configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

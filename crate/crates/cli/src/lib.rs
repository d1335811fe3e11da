//! Experiment files, execution and artifact writers behind the `pdo` binary.

use std::path::PathBuf;

use thiserror::Error;

pub mod execute;
pub mod spec;

pub use execute::{execute, Report};
pub use spec::{Experiment, ExperimentSpec, Format, Mode, TopologyKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid spec: `{key}`: {message}")]
    Spec { key: String, message: String },
    #[error("invalid spec: {0}")]
    Parse(String),
    #[error(transparent)]
    Sim(#[from] pdo_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    /// 2 for a bad experiment description, 1 for a failure while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec { .. } | CliError::Parse(_) => 2,
            _ => 1,
        }
    }
}

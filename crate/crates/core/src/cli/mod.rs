//! Configuration, orchestration and CSV output behind the `opm-thermo`
//! binary.

pub mod config;
pub mod figures;
pub mod output;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

use crate::cell_rates::CellError;
use crate::dynamics::DynamicsError;

pub use config::{parse_config, Axis, ConfigError, RunConfig, SweepSpec, SweepVariable};

/// Process exit codes.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PHYSICS: i32 = 3;
    pub const PARTIAL_SWEEP: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cell model: {0}")]
    Cell(#[from] CellError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{failed} of {total} sweep points failed")]
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Cell(_) => exit_code::CONFIG,
            CliError::Dynamics(DynamicsError::Integration { .. }) => exit_code::PHYSICS,
            CliError::Dynamics(_) => exit_code::CONFIG,
            CliError::Io { .. } | CliError::Csv { .. } => exit_code::IO,
            CliError::PartialSweep { .. } => exit_code::PARTIAL_SWEEP,
        }
    }
}

//! Command-line workflows over `lorenz-core`: dataset files, commands and
//! JSON reports.

pub mod args;
pub mod commands;
pub mod dataset;
pub mod report;

use std::path::PathBuf;

use lorenz_core::curves::CurveError;
use lorenz_core::estimation::EstimationError;
use lorenz_core::measures::MeasureError;
use lorenz_core::montecarlo::SimError;
use thiserror::Error;

pub use args::Cli;
pub use commands::{run, Outcome};
pub use dataset::{parse_dataset, DatasetError, DatasetFile};
pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("mean income is unknown: pass --mean or set `mean` in the dataset (income shares alone do not fix the income level)")]
    MissingMean,
    #[error("{0}")]
    Usage(String),
    #[error("no datasets found in {0}")]
    NoDatasets(PathBuf),
    #[error("all {count} {what} failed; first error: {first}")]
    AllFailed {
        what: &'static str,
        count: usize,
        first: String,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 when the failure is a curve that is not a genuine Lorenz curve, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Simulation(SimError::NotGenuine(_)) => 2,
            _ => 1,
        }
    }
}

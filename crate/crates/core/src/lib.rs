//! Joint sizing and model-predictive dispatch of chillers, ice storage and
//! batteries under time-of-use and demand tariffs.

pub mod config;
pub mod cuts;
pub mod dispatch;
pub mod models;
pub mod pipeline;
pub mod plant;
pub mod profiles;
pub mod report;
pub mod series;
pub mod sizing;
pub mod tariff;

use dispatch::DispatchError;
use sizing::SizingError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Profile(#[from] profiles::ProfileError),
    #[error(transparent)]
    Series(#[from] series::SeriesError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error(transparent)]
    Tariff(#[from] tariff::TariffError),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<config::ConfigError> for Error {
    fn from(e: config::ConfigError) -> Self {
        match e {
            config::ConfigError::Profile(p) => Error::Profile(p),
            other => Error::Config(other.to_string()),
        }
    }
}

/// Broad failure classes, used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Infeasible,
    SolverLimit,
    Other,
}

impl Error {
    pub fn kind(&self) -> FailureKind {
        match self {
            Error::Config(_) | Error::Profile(_) => FailureKind::Config,
            Error::Sizing(SizingError::Config(_)) => FailureKind::Config,
            Error::Dispatch(DispatchError::BadInput(_)) => FailureKind::Config,
            Error::Dispatch(DispatchError::Infeasible { .. }) => FailureKind::Infeasible,
            Error::Sizing(SizingError::Infeasible(_) | SizingError::NoFeasibleCombination(_)) => FailureKind::Infeasible,
            Error::Dispatch(DispatchError::SolverLimit(_)) | Error::Sizing(SizingError::SolverLimit(_)) => {
                FailureKind::SolverLimit
            }
            _ => FailureKind::Other,
        }
    }
}

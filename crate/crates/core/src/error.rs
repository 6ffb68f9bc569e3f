use thiserror::Error;

/// Errors produced by the calibration toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no consistent posterior: {0}")]
    NoConsistentPosterior(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unknown signal {signal} (experiment has {count} signals)")]
    UnknownSignal { signal: usize, count: usize },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("spectrum is not Hermitian: relative imaginary residue {residue:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { residue: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("padded grid of {requested} modes exceeds the ceiling of {ceiling}")]
    ResourceLimit { requested: usize, ceiling: usize },

    #[error("non-finite solution at t = {t}; last good state at t = {last_good_t}")]
    BlowUp { t: f64, last_good_t: f64 },

    #[error("invariant violated at t = {t}: {what}")]
    Invariant { t: f64, what: String },

    #[error("psi has nonzero mean {mean:.6e}")]
    NonzeroMean { mean: f64 },

    #[error("insufficient sampling: {0}")]
    Sampling(String),

    #[error("no observer registered for {0}")]
    MissingObserver(String),

    #[error("fit needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed data file {path}: {reason}")]
    DataFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for run records and exit diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ResourceLimit { .. } => "resource_limit",
            Error::BlowUp { .. } => "blow_up",
            Error::Invariant { .. } => "invariant",
            Error::NonzeroMean { .. } => "nonzero_mean",
            Error::Sampling(_) => "sampling",
            Error::MissingObserver(_) => "missing_observer",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::Config(_) => "config",
            Error::DataFile { .. } => "data_file",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

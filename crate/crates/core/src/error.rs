use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid beam splitter: {0}")]
    InvalidSplitter(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("post-selected output has zero trace; the input is annihilated by the conditional map")]
    ZeroSuccess,

    #[error("no coincidence events recorded")]
    NoEvents,

    #[error("zero calibration counts")]
    ZeroCalibration,

    #[error("operator has zero trace")]
    ZeroTrace,

    #[error("degenerate splitter: {0}")]
    DegenerateSplitter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("{what} = {value} out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("enumeration too large: m_b = {m_b} exceeds the limit of {limit} Bob settings")]
    EnumerationTooLarge { m_b: usize, limit: usize },

    #[error("vector {index} is not unit norm (|v| = {norm})")]
    NotUnit { index: usize, norm: f64 },

    #[error("nonsmooth point: row {row} has |Σ_j M_ij b_j| = {norm:e}")]
    Nonsmooth { row: usize, norm: f64 },

    #[error("no exact oracle for E(n={n}, d={d})")]
    NoOracle { n: usize, d: usize },

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),

    #[error("not an observable: {0}")]
    NotObservable(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("point outside window (row {row})")]
    PointOutsideWindow { row: usize },

    #[error("duplicate point (row {row})")]
    DuplicatePoint { row: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("empty frequency domain")]
    EmptyFrequencyDomain,

    #[error("invalid taper: {0}")]
    InvalidTaper(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("bandwidth below grid resolution")]
    BandwidthBelowResolution,

    #[error("window too small for subsampling: {blocks} blocks, need {required}")]
    WindowTooSmall { blocks: usize, required: usize },

    #[error("empty pattern")]
    EmptyPattern,

    #[error("singular matrix (condition number {0:.3e})")]
    Singular(f64),

    #[error("inconsistent variance estimate")]
    InconsistentVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

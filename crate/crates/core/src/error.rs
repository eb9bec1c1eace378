use thiserror::Error;

/// Errors raised by the checkers, generators and file front end.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("signal is the zero vector")]
    ZeroSignal,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis rows are linearly dependent (singular Gram matrix)")]
    SingularGram,

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("matrix entry is not finite")]
    NonFinite,

    #[error("family has {m} vectors, exhaustive subset search is capped at {cap}")]
    TooManySubsets { m: usize, cap: usize },

    #[error("complement violation does not hold for this family")]
    InvalidViolation,

    #[error("vandermonde nodes must be pairwise distinct")]
    DuplicateNodes,

    #[error("invalid dimension profile: {0}")]
    InvalidProfile(String),

    #[error("subspace {} has dim W^perp = {codim}; augmentation needs at least 2", .index + 1)]
    NoRoom { index: usize, codim: usize },

    #[error("augmentation of subspace {} failed after {attempts} attempts", .index + 1)]
    AugmentationFailed { index: usize, attempts: usize },

    #[error("input family fails phase retrieval; refusing to augment")]
    InputFails,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("certificate rejected: {0}")]
    BadCertificate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

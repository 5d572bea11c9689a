use thiserror::Error;

/// Unified error type for the whole library.
///
/// Variants are grouped by how callers are expected to react: argument and
/// data errors are recoverable (skip the record, fix the input), fetch errors
/// are retryable, and internal-consistency errors indicate a bug in this
/// library or silently corrupt inputs and should abort the run.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("lifting failure: {0}")]
    LiftingFailure(String),

    /// Valuation of zero; deliberately a distinct error value, never a number.
    #[error("valuation of zero is infinite")]
    InfiniteValuation,

    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("corrupt data: {0}")]
    CorruptData(String),

    #[error("invalid prime window: {0}")]
    InvalidWindow(String),

    #[error("dataset contains no valid records")]
    EmptyDataset,

    #[error("fetch failed for {resource}: {reason}")]
    Fetch { resource: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor used all over the argument-validation paths.
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::InternalConsistency(msg.into())
    }
}

use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or vector argument has the wrong shape.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// An argument is outside its legal range or otherwise malformed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operator has numerical rank zero, so no direction survives.
    #[error("rank-zero operator in {0}")]
    RankZero(&'static str),

    /// A floating-point computation left the representable range.
    #[error("numeric overflow in {0}")]
    Overflow(String),

    /// A file does not conform to the format it claims.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    /// A request that no feasible configuration can satisfy.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the jdot library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {what} at ({row}, {col})")]
    NonFinite { what: &'static str, row: usize, col: usize },

    #[error("alpha heuristic undefined: all feature distances are zero")]
    UndefinedAlpha,

    #[error("linear system is singular or too ill-conditioned (condition estimate {condition_estimate:.3e})")]
    IllConditioned { condition_estimate: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}: line {line}, column '{column}': {message}")]
    Csv {
        path: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Coarse classification used for process exit codes and FFI status codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::UndefinedAlpha => ErrorKind::Input,
            Error::IllConditioned { .. } | Error::Solver(_) => ErrorKind::Solver,
            Error::Csv { .. } | Error::Schema(_) | Error::Json(_) => ErrorKind::Data,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Data,
    Solver,
    Io,
}

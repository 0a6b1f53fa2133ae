use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of an operation (unknown leaf, root
    /// where a child is required, mismatched trees).
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor or configuration parameter out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed or non-finite input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// A parse failure tied to a specific line of an input file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Factorization or solver failure.
    #[error("numerical failure: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            message: msg.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

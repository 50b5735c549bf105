use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs violate a documented precondition (shape mismatch, non-finite values, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} out of range: {value} (allowed {allowed})")]
    Range {
        what: &'static str,
        value: usize,
        allowed: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// SVD failed to converge. `iteration` is the outer solver iteration, when known.
    #[error("numerical failure{}: {message}", .iteration.map(|k| format!(" at iteration {k}")).unwrap_or_default())]
    Numerical {
        iteration: Option<usize>,
        message: String,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("rank-1 oracle not applicable: {0}")]
    OracleInapplicable(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: msg.into(),
        }
    }

    /// Attach an outer iteration index to a numerical error.
    pub(crate) fn at_iteration(self, k: usize) -> Self {
        match self {
            Error::Numerical { message, .. } => Error::Numerical {
                iteration: Some(k),
                message,
            },
            other => other,
        }
    }
}

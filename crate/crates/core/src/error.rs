use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shape problems: non-square matrices, length mismatches, bad indices.
    #[error("structural error: {0}")]
    Structural(String),

    /// A documented invariant of a domain type does not hold for the input.
    #[error("{invariant} invariant violated: {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    /// Input outside an operation's domain (empty sets, bad parameters).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

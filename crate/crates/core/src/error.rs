use thiserror::Error;

/// Errors raised by the simulation building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation accepts.
    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A serialized codebook failed validation on import.
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

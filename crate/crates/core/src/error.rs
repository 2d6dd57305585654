use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested computation exceeds a configured size cap.
    #[error("resource limit exceeded: {what} needs {requested} entries, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    /// A linear digit map is not onto.
    #[error("linear map is not surjective: rank {rank} < {rows} rows")]
    NotSurjective { rank: usize, rows: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A CSQ learner issued a query outside [-1, 1].
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("vertex id {id} out of range 1..={n}")]
    InvalidVertex { id: u64, n: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("edge weight must be at least one quantum")]
    ZeroWeight,

    #[error("weights overflow the {0} accumulator")]
    Overflow(&'static str),

    #[error("correlation 0 gives an infinite distance")]
    InfiniteDistance,

    #[error("correlation {0} is outside [-1, 1]")]
    Domain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("refusing to enumerate 2^{p} subsets (limit p <= {limit})")]
    TooLarge { p: usize, limit: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid block set: {0}")]
    InvalidBlockSet(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("empty path")]
    EmptyPath,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

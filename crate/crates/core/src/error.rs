use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error at row {row}, column {column}: {message}")]
    Format {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Malformed(String),

    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    #[error("overlapping variable sets: {0}")]
    Overlap(String),

    #[error("problem too large for exhaustive search: {size} variables (limit {limit})")]
    TooLarge { size: usize, limit: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

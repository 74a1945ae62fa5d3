use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical integrity violated: {0}")]
    Numerical(String),

    #[error("unknown team `{0}`")]
    UnknownTeam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("abilities are not identifiable from the supplied fixtures: {0}")]
    Unidentifiable(String),

    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Row { row, msg: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

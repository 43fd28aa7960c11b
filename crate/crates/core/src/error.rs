use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("covariance factorization failed: {0}")]
    Factorization(String),
    #[error("unsupported kernel for {op}: {kernel}")]
    UnsupportedKernel { op: &'static str, kernel: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("geometry out of bounds: {0}")]
    OutOfBounds(String),
    #[error("event impossible: terminals never connect")]
    EventImpossible,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("field file: {0}")]
    FieldFile(String),
    #[error("invalid config: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

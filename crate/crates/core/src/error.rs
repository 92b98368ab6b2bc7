use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("circuit too large for the unitary oracle: {n} qubits (max {max})")]
    Capacity { n: usize, max: usize },
    #[error("unsupported gate for this operation: {0}")]
    UnsupportedGate(String),
    #[error("profile error: {0}")]
    Profile(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QgoError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("target configuration is not a ground state: {0}")]
    InvalidTarget(String),
    #[error("ambiguous input: {0}")]
    Ambiguity(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = QgoError> = std::result::Result<T, E>;

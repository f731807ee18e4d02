use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported capability: {0}")]
    Capability(&'static str),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

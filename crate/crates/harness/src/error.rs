use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Parse(String),
    #[error("capability mismatch: {0}")]
    Capability(String),
    #[error("solver error: {0}")]
    Solver(#[from] sreda_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) => 2,
            HarnessError::Solver(sreda_core::Error::Input(_) | sreda_core::Error::Parameter(_)) => 2,
            HarnessError::Capability(_) | HarnessError::Solver(sreda_core::Error::Capability(_)) => 3,
            _ => 1,
        }
    }
}

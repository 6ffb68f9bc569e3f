use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("range error at line {line}: {msg}")]
    Range { line: usize, msg: String },

    #[error(transparent)]
    Core(#[from] losscal_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Process exit status: 1 for usage and input errors, 3 for internal
    /// invariant violations. Partial row failures (2) are not errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Internal(_) => 3,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Self::Io(e.into())
        } else {
            Self::Internal(e.to_string())
        }
    }
}

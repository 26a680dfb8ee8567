use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// The variants map one-to-one onto the CLI exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Process exit code for the CLI: 2 parse/format, 3 domain, 4 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Format(_) | Error::Io(_) => 2,
            Error::Domain(_) | Error::Estimation(_) => 3,
            Error::Budget(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

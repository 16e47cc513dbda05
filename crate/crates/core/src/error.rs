use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of domain: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("ill-conditioned system in {context} (rcond = {rcond:.3e})")]
    Conditioning { context: String, rcond: f64 },

    #[error("{context}: achieved relative accuracy {achieved:.3e}, required {required:.3e}")]
    Accuracy {
        context: String,
        achieved: f64,
        required: f64,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("linear algebra backend failure in {context}: {detail}")]
    Backend {
        context: &'static str,
        detail: String,
    },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ConfigParse { .. } | Error::ConfigValue { .. } => ErrorClass::Config,
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Numeric,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Numeric => 3,
            ErrorClass::Io => 4,
        }
    }

    pub(crate) fn domain(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            name,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Crate-wide error type, grouped by the exit classes the CLI reports.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: bad band edges, degenerate synthesis settings,
    /// incompatible feature-set/model pairings, malformed flags.
    #[error("config error: {0}")]
    Config(String),

    /// Data contract violations while reading or interpreting inputs.
    #[error("data error: {message}{}", location_suffix(.path, .line))]
    Data {
        message: String,
        path: Option<PathBuf>,
        line: Option<usize>,
    },

    /// Numeric failures: unstable filter designs, degenerate statistics,
    /// non-finite values produced mid-pipeline.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data {
            message: msg.into(),
            path: None,
            line: None,
        }
    }

    pub fn data_at(msg: impl Into<String>, path: impl Into<PathBuf>, line: Option<usize>) -> Self {
        Error::Data {
            message: msg.into(),
            path: Some(path.into()),
            line,
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data { .. } | Error::Io { .. } => 3,
            Error::Numeric(_) => 4,
        }
    }
}

fn location_suffix(path: &Option<PathBuf>, line: &Option<usize>) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!(" ({}:{})", p.display(), l),
        (Some(p), None) => format!(" ({})", p.display()),
        _ => String::new(),
    }
}

//! Error types shared across the toolkit.

use thiserror::Error;

/// Toolkit-wide error type.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// usage problems, data problems (bad files, bad configs, invalid
/// domain objects) and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument combination or value supplied by the caller.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A domain invariant was violated while constructing or validating a value.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// Matrix or signal dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A file could not be parsed; carries location context.
    #[error("parse error in {path} ({context}): {detail}")]
    Parse {
        path: String,
        context: String,
        detail: String,
    },

    /// Binary format violation (bad magic, truncation, unsupported version...).
    #[error("format error in {path}: {detail}")]
    Format { path: String, detail: String },

    /// An iterative numerical routine failed to converge or produced
    /// an unstable design.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error taxonomy shared by the library and the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input document (bad JSON, unknown keys, wrong types).
    #[error("parse error: {0}")]
    Parse(String),

    /// A configuration invariant was violated. `field` is the JSON path of
    /// the offending value.
    #[error("invalid config: {field}: {message}")]
    Validation { field: String, message: String },

    /// The integration blew up or produced out-of-range state. Carries the
    /// simulation time at which the run was abandoned.
    #[error("stability fault at t = {time} hr: {message}")]
    Stability { time: f64, message: String },

    #[error("unknown preset '{0}' (expected one of: quench-off, quench-on, impulse, impulse-train, spacetime, pulse-train)")]
    UnknownPreset(String),

    #[error("empty series")]
    EmptySeries,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn stability(time: f64, message: impl Into<String>) -> Self {
        Error::Stability {
            time,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 0 success, 2 validation, 3 stability, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation { .. } | Error::UnknownPreset(_) | Error::EmptySeries => 2,
            Error::Stability { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

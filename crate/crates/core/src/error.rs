use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument to a library call.
    #[error("invalid input: {0}")]
    Input(String),

    /// The rotation axis is undefined (unity propagator) and no fallback axis was supplied.
    #[error("degenerate rotation axis at omega0 = {omega0}, omega1 = {omega1}: {detail}")]
    DegenerateAxis { omega0: f64, omega1: f64, detail: String },

    /// A field profile cannot be evaluated where the run needs it.
    #[error("field profile undefined on [{start}, {end}]: {detail}")]
    ProfileDomain { start: f64, end: f64, detail: String },

    /// Configuration rejected before any computation; `field` names the offending key.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

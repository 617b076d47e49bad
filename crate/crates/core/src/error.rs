use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shifted normal equations are singular at lambda = {lambda}")]
    Singular { lambda: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("estimation failed: {message} (final residual {residual:e})")]
    Estimation { message: String, residual: f64 },

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("selection failed: {0}")]
    Selection(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 1,
            Error::Parse { .. } | Error::Io { .. } | Error::Degenerate(_) => 2,
            Error::Singular { .. }
            | Error::Estimation { .. }
            | Error::Infeasible(_)
            | Error::Selection(_) => 3,
        }
    }
}

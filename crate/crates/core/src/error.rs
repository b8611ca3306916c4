use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("symmetry violation in {block} at indices {indices:?}: {a} vs {b}")]
    Symmetry {
        block: &'static str,
        indices: Vec<usize>,
        a: f64,
        b: f64,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("ill-conditioned matrix: minimum eigenvalue {min_eigenvalue:e} below threshold {threshold:e}")]
    Conditioning { min_eigenvalue: f64, threshold: f64 },

    #[error("routing failed: {0}")]
    Routing(String),

    #[error("empty symmetry sector: {0}")]
    Sector(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dataset alignment: {0}")]
    Alignment(String),

    #[error("missing data: {0}")]
    Data(String),

    #[error("stage `{stage}` failed: {reason}")]
    Stage { stage: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 3,
            Error::Stage { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dangling reference: {entity} refers to unknown {kind} `{id}`")]
    DanglingReference {
        entity: String,
        kind: &'static str,
        id: String,
    },

    #[error("invalid resource graph: {0}")]
    InvalidGraph(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at iteration {iteration} (loss {loss:e}); lower the learning rate")]
    Divergence { iteration: usize, loss: f64 },

    #[error("{} dimension(s) failed: {}", .0.len(), format_dimension_failures(.0))]
    DimensionFailures(Vec<(usize, Error)>),

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("invalid value for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Empty(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Usage(String),
}

fn format_dimension_failures(failures: &[(usize, Error)]) -> String {
    failures
        .iter()
        .map(|(d, e)| format!("dimension {d}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category, used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::DanglingReference { .. } | Error::InvalidGraph(_) => "resource",
            Error::Shape(_) | Error::OutOfRange { .. } => "shape",
            Error::NonFinite(_) => "non-finite",
            Error::Divergence { .. } | Error::DimensionFailures(_) => "training",
            Error::RankDeficient(_) => "rank-deficient",
            Error::Config { .. } => "config",
            Error::Empty(_) => "empty",
            Error::Undefined(_) => "undefined",
            Error::Checkpoint(_) => "checkpoint",
            Error::Usage(_) => "usage",
        }
    }
}

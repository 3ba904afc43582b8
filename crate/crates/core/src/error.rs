use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("non-finite {what} in phase `{phase}` at iteration {iteration}")]
    NonFinite {
        what: &'static str,
        phase: String,
        iteration: usize,
    },

    #[error("model format error at byte offset {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("cannot ingest {}: {reason}", path.display())]
    Ingest { path: PathBuf, reason: String },

    #[error("{} file(s) failed to load: {}", .0.len(), join_errors(.0))]
    IngestMany(Vec<Error>),

    #[error("split error: {0}")]
    Split(String),

    #[error("empty evaluation: no samples")]
    EmptyEvaluation,

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join_errors(errs: &[Error]) -> String {
    errs.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape { op, left, right }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

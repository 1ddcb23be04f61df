use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing bundle file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}:{line}: {msg}", file.display())]
    Malformed {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("bundle invariant violated: {0}")]
    Invariant(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    /// The p-unlabeled pool is empty while the query budget is not exhausted.
    #[error("no query candidates left: p-unlabeled pool is empty with {remaining} queries remaining")]
    NoCandidates { remaining: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
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

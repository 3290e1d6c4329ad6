use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("index {index} out of range for ground set of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("no projected point has a defined angle around the agent")]
    EmptyMap,

    #[error("every angular bin is covered; no exit direction exists")]
    NoGap,

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("planner did not reach the goal after {iterations} iterations")]
    PlanningFailed { iterations: usize },

    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: file contains no data")]
    EmptyFile { path: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

/// Errors surfaced by the crater localization pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("degenerate disparity map: {0}")]
    DegenerateDisparity(String),

    #[error("no front rim transition found along the cluster bearing")]
    NoFrontRim,

    #[error("hypothesis rejected: {0}")]
    HypothesisRejected(String),

    #[error("singular fusion: {0}")]
    SingularFusion(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

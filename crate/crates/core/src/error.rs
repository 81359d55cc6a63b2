use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },

    #[error("dangling reference in {entity}: {reference}")]
    DanglingReference { entity: String, reference: String },

    #[error("non-invertible transform on node {node}")]
    NonInvertibleTransform { node: u32 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown instance id {0} in item buffer")]
    UnknownInstance(u32),

    #[error("normal is not unit length: |n| = {0}")]
    NonUnitNormal(f64),

    #[error("bundle is missing channel {0:?}")]
    MissingChannel(String),

    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),

    #[error("unknown backend tag {0:?}")]
    UnknownBackend(String),

    #[error("histogram layout mismatch: {0:?} vs {1:?}")]
    LayoutMismatch(String, String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("category tables differ between bundles")]
    CategoryMismatch,

    #[error("image codec error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("missing upstream artifact for stage {stage}: {detail}")]
    MissingUpstream { stage: String, detail: String },

    #[error("config hash mismatch for {what}; rerun with --force to overwrite")]
    ConfigMismatch { what: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }

    pub fn image(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Image {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

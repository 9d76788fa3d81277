use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("nifti: {message} (byte offset {offset})")]
    Nifti { offset: usize, message: String },

    #[error("label value {value} at voxel {index} is not one of 0, 1, 2, 4")]
    InvalidLabel { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("missing feature column `{0}`")]
    MissingFeature(String),

    #[error("feature name collision: `{0}`")]
    NameCollision(String),

    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),

    #[error("tables share no subjects")]
    EmptyIntersection,

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("no features passed selection (p_min = {p_min}); try a larger p_min")]
    EmptySelection { p_min: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn nifti(offset: usize, message: impl Into<String>) -> Self {
        Error::Nifti {
            offset,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 1 for usage/config problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}

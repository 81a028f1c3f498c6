use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected {expected}-channel image, got {actual} channels")]
    ChannelMismatch { expected: u8, actual: u8 },

    #[error("image {width}x{height} is below the minimum size {min_width}x{min_height}")]
    ImageTooSmall {
        width: u32,
        height: u32,
        min_width: u32,
        min_height: u32,
    },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("rectangle {rect} is outside the {width}x{height} frame")]
    OutOfBounds {
        rect: String,
        width: u32,
        height: u32,
    },

    #[error("malformed dataset: {0}")]
    Malformed(String),

    #[error("annotation {annotation_id}: {message}")]
    Reference { annotation_id: u64, message: String },

    #[error("unknown category name {0:?}")]
    UnknownCategory(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

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
}

use thiserror::Error;

use crate::grid::Cell;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("parse error at record {record}: {message}")]
    Parse { record: usize, message: String },

    #[error("schema error at record {record}: {message}")]
    Schema { record: usize, message: String },

    #[error("start cell ({}, {}) is not navigable", .0.x, .0.y)]
    InvalidStart(Cell),

    #[error("no path from ({}, {}) to ({}, {})", .from.x, .from.y, .to.x, .to.y)]
    Unreachable { from: Cell, to: Cell },

    #[error("no instance of category '{0}' is reachable")]
    UnreachableCategory(String),

    #[error("pose ({x:.3}, {y:.3}) is not in free space")]
    InvalidPose { x: f64, y: f64 },

    #[error("world generation failed: {0}")]
    Generation(String),

    #[error("episode generation failed for world '{world}': {message}")]
    EpisodeGeneration { world: String, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

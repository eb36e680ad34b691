//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input tensor violated a shape or value precondition.
    #[error("shape error: {0}")]
    Shape(String),

    /// A model or training configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Dataset generation, tiling or manifest handling failed.
    #[error("data error: {0}")]
    Data(String),

    /// The training loop hit a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// Checkpoint serialization or deserialization failed.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("png error: {0}")]
    Png(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

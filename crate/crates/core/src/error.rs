//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {lhs} vs {rhs}")]
    ShapeMismatch {
        context: String,
        lhs: String,
        rhs: String,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("axis {axis} out of range for rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing forward cache in {0}: run a train-mode forward pass first")]
    MissingCache(&'static str),

    #[error("malformed one-hot label in row {row}")]
    MalformedOneHot { row: usize },

    #[error("in layer {name}: {source}")]
    InLayer {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("image decode error for {path}: {reason}")]
    ImageDecode { path: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: training aborted")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint format error: bad magic bytes")]
    BadMagic,

    #[error("checkpoint version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint truncated: unexpected end of file")]
    Truncated,

    #[error("checkpoint checksum mismatch")]
    ChecksumMismatch,

    #[error("checkpoint descriptor error: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape_mismatch(
        context: impl Into<String>,
        lhs: impl ToString,
        rhs: impl ToString,
    ) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }

    /// Wrap an error with the name of the layer it came from.
    pub(crate) fn in_layer(self, name: &str) -> Self {
        Error::InLayer {
            name: name.to_string(),
            source: Box::new(self),
        }
    }
}

use thiserror::Error;

use crate::nn::WeightSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("insufficient history: {have} deltas, need more than {need}")]
    InsufficientHistory { have: usize, need: usize },

    #[error("insufficient samples: {have}, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("training diverged at iteration {iteration}")]
    TrainingDiverged {
        iteration: usize,
        last_finite: Box<WeightSet>,
    },

    #[error("snapshot version {offered} is not newer than {current}")]
    StaleSnapshot { offered: u64, current: u64 },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

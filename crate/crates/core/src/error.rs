use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The two captures do not share a noise instantiation.
    #[error("no correlation peak: peak ratio {peak_ratio:.2} is below threshold {threshold:.2}")]
    NoCorrelation { peak_ratio: f64, threshold: f64 },

    #[error("equalizer diverged at block {block} (step size {step_size})")]
    Divergence { block: usize, step_size: f64 },

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

use thiserror::Error;

/// Crate-wide error type.
///
/// `Usage` covers parameter mistakes a caller can fix (bad dimension, ranges),
/// `Domain` covers values outside the model (points on or beyond the ideal
/// boundary). `Degenerate` marks null-probability configurations that callers
/// are expected to resample, and `Resolution` signals that a probe lattice is
/// too coarse for the queried cell and should be rebuilt with half the pitch.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("wall config: {0}")]
    Config(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("threshold not bracketed: {0}")]
    ThresholdNotBracketed(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

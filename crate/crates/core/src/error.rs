use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no centers")]
    NoCenters,
    #[error("non-finite coordinate in point {index}: ({row}, {col})")]
    NonFinitePoint { index: usize, row: f64, col: f64 },
    #[error("point {index} at ({row}, {col}) lies outside the {height}x{width} grid")]
    PointOutOfBounds {
        index: usize,
        row: f64,
        col: f64,
        height: usize,
        width: usize,
    },
    #[error("invalid dimensions {height}x{width}")]
    InvalidDims { height: usize, width: usize },
    #[error("shape mismatch: {expected:?} vs {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("degenerate background: every pixel is foreground")]
    DegenerateBackground,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("cannot place points: {placed} of {requested} placed")]
    CannotPlacePoints { placed: usize, requested: usize },
    #[error("no detections to sweep")]
    NoDetections,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("channel mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: u32, found: u32 },
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

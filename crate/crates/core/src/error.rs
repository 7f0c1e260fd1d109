use alloc::string::String;

/// Errors raised by the core algorithms.
///
/// Every variant is a contract violation of some kind: the inputs did not
/// have the shape or range an operation requires.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("pixel ({x}, {y}) is outside a {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no prediction for annotated frame {frame}")]
    MissingPrediction { frame: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

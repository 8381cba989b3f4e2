use thiserror::Error;

pub type Result<T, E = ExtractError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{what} length mismatch: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no extractable output: {0}")]
    NonPositiveYield(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown extractor {0:?}")]
    UnknownExtractor(String),

    #[error("malformed bit file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no usable {kind} samples (saturated: {saturated})")]
    NoUsableSamples { kind: &'static str, saturated: usize },

    #[error("too few samples for {what}: need {need}, have {have}")]
    TooFewSamples {
        what: &'static str,
        need: usize,
        have: usize,
    },

    #[error("detector saturated: fraction {fraction:.3e} exceeds threshold {threshold:.3e}")]
    Saturation { fraction: f64, threshold: f64 },

    #[error(
        "unphysical calibration: electronic {electronic:.6} + LO {lo:.6} >= measured total {total:.6} ({which})"
    )]
    UnphysicalCalibration {
        which: &'static str,
        electronic: f64,
        lo: f64,
        total: f64,
    },

    #[error("malformed sample block file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

//! End-to-end QRNG run: simulate, calibrate, certify, extract, test.
//!
//! Each stage is a plain function over [`RunConfig`] so the CLI can run them
//! one at a time; [`protocol::run_protocol`] chains them.

pub mod config;
pub mod figures;
pub mod protocol;
pub mod rate;

use thiserror::Error;

pub use config::RunConfig;
pub use protocol::{run_protocol, write_outputs, RunOutcome, RunReport};
pub use rate::{equivalent_rate, RateBreakdown};

/// Reasons a run stops without output.
#[derive(Debug, Error)]
pub enum Abort {
    #[error("digitizer saturation: {fraction:.3e} of samples clipped (limit {threshold:.1e})")]
    Saturation { fraction: f64, threshold: f64 },

    #[error("no certifiable entropy: {0}")]
    NoEntropy(String),

    #[error("unphysical calibration: {0}")]
    Calibration(String),

    #[error("LO monitor: leakage is {fraction:.3e} of vacuum noise (limit {limit:.1e})")]
    LoMonitor { fraction: f64, limit: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("{0}")]
    Other(String),
}

impl Abort {
    pub fn exit_code(&self) -> u8 {
        match self {
            Abort::Other(_) => 1,
            Abort::Config(_) => 2,
            Abort::Io(_) => 3,
            Abort::Saturation { .. } => 10,
            Abort::NoEntropy(_) => 11,
            Abort::Calibration(_) => 12,
            Abort::LoMonitor { .. } => 13,
        }
    }
}

impl From<cvqrng_core::Error> for Abort {
    fn from(e: cvqrng_core::Error) -> Self {
        use cvqrng_core::Error as E;
        match e {
            E::Saturation { fraction, threshold } => Abort::Saturation { fraction, threshold },
            E::UnphysicalCalibration { .. } => Abort::Calibration(e.to_string()),
            E::InvalidParameter(_) | E::TooFewSamples { .. } => Abort::Config(e.to_string()),
            E::Io(_) => Abort::Io(e.to_string()),
            _ => Abort::Other(e.to_string()),
        }
    }
}

impl From<cvqrng_extract::ExtractError> for Abort {
    fn from(e: cvqrng_extract::ExtractError) -> Self {
        use cvqrng_extract::ExtractError as E;
        match e {
            E::NonPositiveYield(_) => Abort::NoEntropy(e.to_string()),
            E::InvalidParameter(_) | E::UnknownExtractor(_) => Abort::Config(e.to_string()),
            E::Io(_) => Abort::Io(e.to_string()),
            _ => Abort::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Abort {
    fn from(e: std::io::Error) -> Self {
        Abort::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            Abort::Other(String::new()),
            Abort::Config(String::new()),
            Abort::Io(String::new()),
            Abort::Saturation { fraction: 0.0, threshold: 0.0 },
            Abort::NoEntropy(String::new()),
            Abort::Calibration(String::new()),
            Abort::LoMonitor { fraction: 0.0, limit: 0.0 },
        ];
        let mut codes: Vec<u8> = all.iter().map(Abort::exit_code).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes, [1, 2, 3, 10, 11, 12, 13]);
    }

    #[test]
    fn core_errors_map() {
        let e: Abort = cvqrng_core::Error::Saturation { fraction: 0.1, threshold: 0.0 }.into();
        assert_eq!(e.exit_code(), 10);
        let e: Abort = cvqrng_core::Error::UnphysicalCalibration {
            which: "vacuum",
            electronic: 1.0,
            lo: 0.0,
            total: 0.5,
        }
        .into();
        assert_eq!(e.exit_code(), 12);
    }
}

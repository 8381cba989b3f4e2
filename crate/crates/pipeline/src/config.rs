//! Run configuration, read from TOML with `section.key=value` overrides.
//!
//! Every key has a default, so an empty file is a valid honest run at the
//! reference operating point.

use std::path::Path;

use cvqrng_core::model::db_to_variance;
use cvqrng_core::{DiscretizationGrid, Homodyne, LoModel, ProtocolSchedule, StateModel};
use cvqrng_stattests::BatteryConfig;
use serde::{Deserialize, Serialize};

use crate::Abort;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Signal and detector noise.
    pub signal: u64,
    /// Quadrature and chopper switching.
    pub switch: u64,
    /// Toeplitz matrix.
    pub toeplitz: u64,
    /// Calibration records.
    pub calibration: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            signal: 1,
            switch: 2,
            toeplitz: 3,
            calibration: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub delta: f64,
    pub adc_bits: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            delta: 0.01536,
            adc_bits: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoConfig {
    pub splitter_r: f64,
    pub splitter_t: f64,
    pub excess_noise_db: f64,
    /// Whether LO fluctuations are monitored and fed into calibration.
    pub monitor: bool,
    /// Excess noise reported by the monitor; defaults to the true value.
    pub monitor_excess_db: Option<f64>,
    /// Abort when the monitored LO share of vacuum noise exceeds this.
    pub max_lo_fraction: f64,
}

impl Default for LoConfig {
    fn default() -> Self {
        Self {
            splitter_r: 0.5005,
            splitter_t: 0.4995,
            excess_noise_db: 1.0,
            monitor: true,
            monitor_excess_db: None,
            max_lo_fraction: 1e-6,
        }
    }
}

impl LoConfig {
    pub fn actual(&self) -> LoModel {
        LoModel {
            splitter_r: self.splitter_r,
            splitter_t: self.splitter_t,
            excess_noise_db: self.excess_noise_db,
        }
    }

    /// The LO model calibration believes in. Without monitoring the user
    /// assumes a clean LO.
    pub fn monitored(&self) -> LoModel {
        if self.monitor {
            LoModel {
                excess_noise_db: self.monitor_excess_db.unwrap_or(self.excess_noise_db),
                ..self.actual()
            }
        } else {
            LoModel::balanced()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Electronic noise relative to shot noise.
    pub electronic_noise_db: f64,
    pub sample_rate_hz: f64,
    /// False models blocked beams: electronic noise only.
    pub optical: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            electronic_noise_db: -13.0,
            sample_rate_hz: 200e6,
            optical: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityConfig {
    /// Total security parameter.
    pub epsilon: f64,
    /// Share of `epsilon` spent on smoothing; the rest goes to hashing.
    pub smooth_share: f64,
}

impl Default for SecurityConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            smooth_share: 0.5,
        }
    }
}

impl SecurityConfig {
    pub fn epsilon_smooth(&self) -> f64 {
        self.epsilon * self.smooth_share
    }

    pub fn epsilon_hash(&self) -> f64 {
        self.epsilon * (1.0 - self.smooth_share)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Registered extractor name.
    pub extractor: String,
    /// Bits of each bin index fed to the hash, most significant first.
    pub raw_bits_per_sample: u32,
    /// Effective digitizer depth; extractable entropy never exceeds it.
    pub effective_bits: u32,
    /// Certified entropy per sample at the effective depth.
    pub effective_entropy: Option<f64>,
    /// Subtracted from `effective_entropy` as a safety margin.
    pub entropy_margin: f64,
    /// Data samples per Toeplitz block.
    pub block_samples: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            extractor: "fast".into(),
            raw_bits_per_sample: 10,
            effective_bits: 6,
            effective_entropy: Some(3.32),
            entropy_margin: 0.04,
            block_samples: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeConfig {
    /// Samples in the protocol run, all slot kinds together.
    pub n_total: usize,
    /// Samples per calibration record.
    pub calibration_samples: usize,
}

impl Default for SizeConfig {
    fn default() -> Self {
        Self {
            n_total: 2_000_000,
            calibration_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    /// Chopper slot used for rate accounting. The simulated schedule uses
    /// shorter slots so that short runs still contain whole frames.
    pub enoise_slot_len: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        // 0.4 s chopper window at 200 MS/s split into 20 slots.
        Self {
            enoise_slot_len: 4_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySection {
    pub enabled: bool,
    #[serde(flatten)]
    pub config: BatteryConfig,
}

impl Default for BatterySection {
    fn default() -> Self {
        Self {
            enabled: true,
            config: BatteryConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Seeds,
    pub state: StateModel,
    pub grid: GridConfig,
    pub lo: LoConfig,
    pub detector: DetectorConfig,
    pub schedule: ProtocolSchedule,
    pub security: SecurityConfig,
    pub extraction: ExtractionConfig,
    pub size: SizeConfig,
    pub rate: RateConfig,
    pub battery: BatterySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: Seeds::default(),
            state: StateModel::pure_squeezed(3.8),
            grid: GridConfig::default(),
            lo: LoConfig::default(),
            detector: DetectorConfig::default(),
            schedule: ProtocolSchedule::default(),
            security: SecurityConfig::default(),
            extraction: ExtractionConfig::default(),
            size: SizeConfig::default(),
            rate: RateConfig::default(),
            battery: BatterySection::default(),
        }
    }
}

/// Minimum check samples for a meaningful max-entropy estimate.
pub const MIN_CHECK_SAMPLES: usize = 1000;

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `a.b.c = value` in `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), Abort> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Abort::Config(format!("override {assignment:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Abort::Config(format!("{key}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), parse_value(value.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, Abort> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Abort::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Abort::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, Abort> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Abort::Io(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<DiscretizationGrid, Abort> {
        Ok(DiscretizationGrid::new(self.grid.delta, self.grid.adc_bits)?)
    }

    pub fn homodyne(&self) -> Result<Homodyne, Abort> {
        let h = Homodyne {
            state: self.state,
            lo: self.lo.actual(),
            var_electronic: if self.detector.electronic_noise_db.is_finite() {
                db_to_variance(self.detector.electronic_noise_db)
            } else {
                0.0
            },
            grid: self.grid()?,
            sample_rate_hz: self.detector.sample_rate_hz,
            optical: self.detector.optical,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), Abort> {
        let e = self.security.epsilon;
        if !(e > 0.0 && e < 1.0) {
            return Err(Abort::Config(format!("security.epsilon must lie in (0,1), got {e}")));
        }
        let s = self.security.smooth_share;
        if !(s > 0.0 && s < 1.0) {
            return Err(Abort::Config(format!("security.smooth_share must lie in (0,1), got {s}")));
        }
        self.homodyne()?;
        self.schedule.validate()?;
        self.lo.monitored().validate()?;
        let x = &self.extraction;
        if !(1..=16).contains(&x.raw_bits_per_sample) {
            return Err(Abort::Config("extraction.raw_bits_per_sample must be in 1..=16".into()));
        }
        if x.effective_bits == 0 || x.effective_bits > self.grid.adc_bits {
            return Err(Abort::Config("extraction.effective_bits must be in 1..=grid.adc_bits".into()));
        }
        if x.block_samples == 0 {
            return Err(Abort::Config("extraction.block_samples must be > 0".into()));
        }
        if !(x.entropy_margin >= 0.0) {
            return Err(Abort::Config("extraction.entropy_margin must be >= 0".into()));
        }
        if self.size.calibration_samples < cvqrng_core::entropy::MIN_CALIBRATION_SAMPLES {
            return Err(Abort::Config(format!(
                "size.calibration_samples must be >= {}",
                cvqrng_core::entropy::MIN_CALIBRATION_SAMPLES
            )));
        }
        let expected_checks = self.schedule.check_ratio * self.size.n_total as f64;
        if expected_checks < MIN_CHECK_SAMPLES as f64 {
            return Err(Abort::Config(format!(
                "size.n_total gives about {expected_checks:.0} check samples, need {MIN_CHECK_SAMPLES}"
            )));
        }
        if self.rate.enoise_slot_len == 0 {
            return Err(Abort::Config("rate.enoise_slot_len must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml_str("", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml(), &[]).unwrap(), cfg);
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::from_toml_str(
            "[grid]\nadc_bits = 10\n",
            &[
                "grid.delta=0.02".into(),
                "lo.monitor=false".into(),
                "extraction.extractor=naive".into(),
                "state.kind=vacuum".into(),
            ],
        );
        // Leftover squeezing keys are unknown to the vacuum variant.
        assert!(cfg.is_ok() || matches!(cfg, Err(Abort::Config(_))));
        let cfg = RunConfig::from_toml_str(
            "[grid]\nadc_bits = 10\n",
            &["grid.delta=0.02".into(), "lo.monitor=false".into(), "extraction.extractor=naive".into()],
        )
        .unwrap();
        assert_eq!(cfg.grid.adc_bits, 10);
        assert_eq!(cfg.grid.delta, 0.02);
        assert!(!cfg.lo.monitor);
        assert_eq!(cfg.extraction.extractor, "naive");
    }

    #[test]
    fn rejects_bad_values() {
        for o in ["security.epsilon=0", "grid.delta=-1", "size.n_total=100", "extraction.effective_bits=12", "nonsense.key=1"] {
            assert!(
                matches!(RunConfig::from_toml_str("", &[o.to_string()]), Err(Abort::Config(_))),
                "{o}"
            );
        }
        assert!(matches!(RunConfig::from_toml_str("[grid", &[]), Err(Abort::Config(_))));
    }
}

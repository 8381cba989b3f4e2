//! Shared domain types: the signal-field model, the coarse-grained
//! measurement grid, digitized sample blocks and the noise budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum quadrature variance in phase-space units. All dB figures are
/// relative to this level.
pub const SNL_VARIANCE: f64 = 0.5;

/// Converts a level in dB relative to the shot-noise limit into a variance.
pub fn db_to_variance(db: f64) -> f64 {
    SNL_VARIANCE * 10f64.powf(db / 10.0)
}

/// Inverse of [`db_to_variance`].
pub fn variance_to_db(variance: f64) -> f64 {
    10.0 * (variance / SNL_VARIANCE).log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    /// Check quadrature (squeezed for a squeezed source).
    Q,
    /// Data quadrature (anti-squeezed for a squeezed source).
    P,
}

/// Gaussian signal field entering the homodyne detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateModel {
    Vacuum,
    /// Both quadratures carry `excess_noise_snl` shot-noise units of extra
    /// classical noise.
    Thermal { excess_noise_snl: f64 },
    /// `squeezing_db` below the SNL on Q, `antisqueezing_db` above it on P.
    Squeezed {
        squeezing_db: f64,
        antisqueezing_db: f64,
    },
}

impl StateModel {
    /// Minimum-uncertainty squeezed state with equal squeezing and
    /// anti-squeezing levels.
    pub fn pure_squeezed(db: f64) -> Self {
        StateModel::Squeezed {
            squeezing_db: db,
            antisqueezing_db: db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StateModel::Vacuum => Ok(()),
            StateModel::Thermal { excess_noise_snl } => {
                if excess_noise_snl.is_finite() && excess_noise_snl >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "thermal excess noise must be finite and >= 0, got {excess_noise_snl}"
                    )))
                }
            }
            StateModel::Squeezed {
                squeezing_db,
                antisqueezing_db,
            } => {
                if squeezing_db.is_finite()
                    && antisqueezing_db.is_finite()
                    && squeezing_db >= 0.0
                    && antisqueezing_db >= 0.0
                {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "squeezing levels must be finite and >= 0 dB, got {squeezing_db}/{antisqueezing_db}"
                    )))
                }
            }
        }
    }

    /// Quadrature variances `(var_q, var_p)` in phase-space units.
    pub fn variances(&self) -> (f64, f64) {
        match *self {
            StateModel::Vacuum => (SNL_VARIANCE, SNL_VARIANCE),
            StateModel::Thermal { excess_noise_snl } => {
                let v = SNL_VARIANCE * (1.0 + excess_noise_snl);
                (v, v)
            }
            StateModel::Squeezed {
                squeezing_db,
                antisqueezing_db,
            } => (db_to_variance(-squeezing_db), db_to_variance(antisqueezing_db)),
        }
    }

    pub fn variance(&self, which: Quadrature) -> f64 {
        let (q, p) = self.variances();
        match which {
            Quadrature::Q => q,
            Quadrature::P => p,
        }
    }

    /// True when the variance product sits at the Heisenberg minimum of 1/4.
    pub fn is_pure(&self) -> bool {
        let (q, p) = self.variances();
        ((q * p) - SNL_VARIANCE * SNL_VARIANCE).abs() <= 1e-12 * SNL_VARIANCE * SNL_VARIANCE
    }
}

/// Coarse-grained quadrature measurement: bins of width `delta` covering the
/// digitizer's symmetric full-scale range.
///
/// Bin `k` holds values `o` with `floor(o / delta) == k`. The full-scale range
/// is `±2^(adc_bits-1) * delta`, so `delta` and the bit depth fix the range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    delta: f64,
    adc_bits: u32,
}

pub const MAX_ADC_BITS: u32 = 16;

impl DiscretizationGrid {
    pub fn new(delta: f64, adc_bits: u32) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid(format!("bin width must be > 0, got {delta}")));
        }
        if !(1..=MAX_ADC_BITS).contains(&adc_bits) {
            return Err(Error::invalid(format!(
                "adc bits must be in 1..={MAX_ADC_BITS}, got {adc_bits}"
            )));
        }
        Ok(Self { delta, adc_bits })
    }

    /// Grid with a fixed full-scale range `[-range, range]`, so that
    /// `delta = 2 * range / 2^adc_bits`.
    pub fn from_range(range: f64, adc_bits: u32) -> Result<Self> {
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::invalid(format!("adc range must be > 0, got {range}")));
        }
        if !(1..=MAX_ADC_BITS).contains(&adc_bits) {
            return Err(Error::invalid(format!(
                "adc bits must be in 1..={MAX_ADC_BITS}, got {adc_bits}"
            )));
        }
        Self::new(2.0 * range / 2f64.powi(adc_bits as i32), adc_bits)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn adc_bits(&self) -> u32 {
        self.adc_bits
    }

    pub fn adc_range(&self) -> f64 {
        self.delta * (1u64 << (self.adc_bits - 1)) as f64
    }

    pub fn bin_count(&self) -> u64 {
        1u64 << self.adc_bits
    }

    pub fn min_index(&self) -> i32 {
        -(1i32 << (self.adc_bits - 1))
    }

    pub fn max_index(&self) -> i32 {
        (1i32 << (self.adc_bits - 1)) - 1
    }

    /// Bin index of `value`, clamped to the digitizer range. The flag is set
    /// iff clamping happened.
    pub fn bin_index(&self, value: f64) -> (i32, bool) {
        let raw = (value / self.delta).floor();
        let (lo, hi) = (self.min_index(), self.max_index());
        if raw < lo as f64 {
            (lo, true)
        } else if raw > hi as f64 {
            (hi, true)
        } else {
            (raw as i32, false)
        }
    }

    /// Centre of bin `index`, in phase-space units.
    pub fn bin_center(&self, index: i32) -> f64 {
        (index as f64 + 0.5) * self.delta
    }

    /// Same grid with every edge rescaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.delta * factor, self.adc_bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum SlotKind {
    Data = 0,
    Check = 1,
    ElectronicNoise = 2,
}

impl SlotKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(SlotKind::Data),
            1 => Some(SlotKind::Check),
            2 => Some(SlotKind::ElectronicNoise),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SlotKind::Data => "data",
            SlotKind::Check => "check",
            SlotKind::ElectronicNoise => "electronic-noise",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    pub index: i16,
    pub kind: SlotKind,
    pub saturated: bool,
}

/// Tagged stream of digitized quadrature outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBlock {
    pub grid: DiscretizationGrid,
    pub sample_rate_hz: f64,
    pub samples: Vec<Sample>,
}

impl SampleBlock {
    pub fn new(grid: DiscretizationGrid, sample_rate_hz: f64) -> Self {
        Self {
            grid,
            sample_rate_hz,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, kind: SlotKind) -> usize {
        self.samples.iter().filter(|s| s.kind == kind).count()
    }

    pub fn saturated_count(&self) -> usize {
        self.samples.iter().filter(|s| s.saturated).count()
    }

    pub fn saturation_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.saturated_count() as f64 / self.samples.len() as f64
        }
    }

    /// Unsaturated bin indices of one slot kind, in stream order.
    pub fn indices(&self, kind: SlotKind) -> impl Iterator<Item = i16> + '_ {
        self.samples
            .iter()
            .filter(move |s| s.kind == kind && !s.saturated)
            .map(|s| s.index)
    }

    /// Unsaturated samples of one kind mapped back to bin centres.
    pub fn values(&self, kind: SlotKind) -> Vec<f64> {
        self.indices(kind)
            .map(|k| self.grid.bin_center(k as i32))
            .collect()
    }
}

/// Measured variances and their decomposition into shot noise, LO leakage and
/// electronic noise, all in phase-space units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub var_total_vac: f64,
    pub var_total_squ: f64,
    pub var_total_ant: f64,
    pub var_electronic: f64,
    pub var_lo: f64,
}

impl NoiseBudget {
    fn untrusted(&self) -> f64 {
        self.var_electronic + self.var_lo
    }

    /// Pure vacuum noise σ²_SNL.
    pub fn var_snl(&self) -> f64 {
        self.var_total_vac - self.untrusted()
    }

    pub fn var_squ(&self) -> f64 {
        self.var_total_squ - self.untrusted()
    }

    pub fn var_ant(&self) -> f64 {
        self.var_total_ant - self.untrusted()
    }

    /// Electronic share of the measured vacuum noise.
    pub fn electronic_fraction(&self) -> f64 {
        self.var_electronic / self.var_total_vac
    }

    /// LO-leakage share of the measured vacuum noise.
    pub fn lo_fraction(&self) -> f64 {
        self.var_lo / self.var_total_vac
    }

    /// Factor mapping the nominal bin width onto true phase-space units: the
    /// grid is specified assuming the pure vacuum variance is `SNL_VARIANCE`.
    pub fn phase_space_scale(&self) -> f64 {
        (SNL_VARIANCE / self.var_snl()).sqrt()
    }
}

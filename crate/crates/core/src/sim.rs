//! Software stand-in for the optical table.
//!
//! Quadrature outcomes are drawn as zero-mean Gaussians, detection noise is
//! white and additive, and the digitizer is the [`DiscretizationGrid`]. The
//! protocol schedule interleaves data, check and electronic-noise slots
//! according to a seeded switching stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    variance_to_db, DiscretizationGrid, Quadrature, Sample, SampleBlock, SlotKind, StateModel,
    SNL_VARIANCE,
};

const SIGNAL_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Local oscillator and the detector's beam splitter.
///
/// Any splitter imbalance lets classical LO intensity noise through the
/// subtraction; `excess_noise_db` is that classical noise above the LO's
/// own shot noise (0 dB means a coherent LO).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoModel {
    pub splitter_r: f64,
    pub splitter_t: f64,
    pub excess_noise_db: f64,
}

impl Default for LoModel {
    fn default() -> Self {
        Self::balanced()
    }
}

impl LoModel {
    pub fn balanced() -> Self {
        Self {
            splitter_r: 0.5,
            splitter_t: 0.5,
            excess_noise_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, t) = (self.splitter_r, self.splitter_t);
        let open_unit = |x: f64| x.is_finite() && x > 0.0 && x < 1.0;
        if !open_unit(r) || !open_unit(t) {
            return Err(Error::invalid(format!(
                "splitter reflectivity and transmission must lie in (0, 1), got R={r}, T={t}"
            )));
        }
        // Published splitter figures are rounded (21.2% + 78.9%).
        if r + t > 1.001 + 1e-12 {
            return Err(Error::invalid(format!("R + T = {} exceeds 1", r + t)));
        }
        if !(self.excess_noise_db.is_finite() && self.excess_noise_db >= 0.0) {
            return Err(Error::invalid(format!(
                "LO excess noise must be >= 0 dB, got {}",
                self.excess_noise_db
            )));
        }
        Ok(())
    }

    /// Common-mode rejection coefficient of the imbalanced detector,
    /// expressed relative to σ²_SNL per unit of LO excess noise.
    pub fn leakage_coefficient(&self) -> f64 {
        let (r, t) = (self.splitter_r, self.splitter_t);
        (r - t).powi(2) / (2.0 * r * t)
    }

    /// σ²_LO, the untrusted noise leaking from LO fluctuations, in
    /// phase-space units.
    pub fn leakage_variance(&self) -> Result<f64> {
        self.validate()?;
        let excess = 10f64.powf(self.excess_noise_db / 10.0) - 1.0;
        Ok(self.leakage_coefficient() * excess * SNL_VARIANCE)
    }
}

/// σ²_LO for an LO model; see [`LoModel::leakage_variance`].
pub fn lo_leakage_variance(lo: &LoModel) -> Result<f64> {
    lo.leakage_variance()
}

/// `n` independent draws of one quadrature of `state`.
pub fn sample_quadrature(state: &StateModel, which: Quadrature, n: usize, seed: u64) -> Vec<f64> {
    let sd = state.variance(which).sqrt();
    let mut rng = rng(seed, SIGNAL_STREAM);
    (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Adds white Gaussian electronic and LO-leakage noise.
pub fn add_detection_noise(
    samples: &[f64],
    var_electronic: f64,
    lo: &LoModel,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(var_electronic.is_finite() && var_electronic >= 0.0) {
        return Err(Error::invalid(format!(
            "electronic noise variance must be >= 0, got {var_electronic}"
        )));
    }
    let var = var_electronic + lo.leakage_variance()?;
    if var == 0.0 {
        return Ok(samples.to_vec());
    }
    let sd = var.sqrt();
    let mut rng = rng(seed, NOISE_STREAM);
    Ok(samples
        .iter()
        .map(|x| x + sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Digitizes continuous outcomes onto `grid`.
pub fn quantize(samples: &[f64], grid: &DiscretizationGrid, kind: SlotKind) -> Vec<Sample> {
    samples
        .iter()
        .map(|&v| {
            let (index, saturated) = grid.bin_index(v);
            Sample {
                index: index as i16,
                kind,
                saturated,
            }
        })
        .collect()
}

/// Channel loss on the signal field: each variance relaxes towards the
/// vacuum level with transmission `10^(-loss·distance/10)`.
pub fn propagate_loss(
    state: &StateModel,
    distance_km: f64,
    loss_db_per_km: f64,
) -> Result<StateModel> {
    state.validate()?;
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(Error::invalid(format!("distance must be >= 0, got {distance_km}")));
    }
    if !(loss_db_per_km.is_finite() && loss_db_per_km >= 0.0) {
        return Err(Error::invalid(format!(
            "loss must be >= 0 dB/km, got {loss_db_per_km}"
        )));
    }
    let eta = 10f64.powf(-loss_db_per_km * distance_km / 10.0);
    let relax = |v: f64| eta * v + (1.0 - eta) * SNL_VARIANCE;
    Ok(match *state {
        StateModel::Vacuum => StateModel::Vacuum,
        StateModel::Thermal { excess_noise_snl } => StateModel::Thermal {
            excess_noise_snl: eta * excess_noise_snl,
        },
        StateModel::Squeezed { .. } => {
            let (q, p) = state.variances();
            StateModel::Squeezed {
                squeezing_db: (-variance_to_db(relax(q))).max(0.0),
                antisqueezing_db: variance_to_db(relax(p)).max(0.0),
            }
        }
    })
}

/// Switching pattern between data, check and electronic-noise slots.
///
/// The stream is cut into frames of `1/enoise_ratio` electronic-noise-sized
/// slots. One of them is blocked to record electronic noise; the rest are
/// divided into check-slot units, and one check unit is drawn from each of
/// `check_ratio · frame` equal groups. Both ratios are therefore fractions of
/// the total sample count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSchedule {
    pub check_ratio: f64,
    pub enoise_ratio: f64,
    pub check_slot_len: usize,
    pub enoise_slot_len: usize,
    /// Abort when more than this fraction of samples clip the digitizer.
    pub max_saturation_fraction: f64,
}

impl Default for ProtocolSchedule {
    fn default() -> Self {
        Self {
            check_ratio: 1.0 / 20.0,
            enoise_ratio: 1.0 / 20.0,
            check_slot_len: 200,
            enoise_slot_len: 2000,
            max_saturation_fraction: 1e-5,
        }
    }
}

/// Slot layout produced by [`ProtocolSchedule::plan`].
#[derive(Clone, Debug, PartialEq)]
pub struct SlotPlan {
    /// Consecutive runs of equal slot kind.
    pub runs: Vec<(SlotKind, usize)>,
    /// Private switching bits consumed, `Σ log2(choices)` over decisions.
    pub seed_bits: f64,
    pub decisions: usize,
}

impl SlotPlan {
    pub fn total(&self) -> usize {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn count(&self, kind: SlotKind) -> usize {
        self.runs.iter().filter(|r| r.0 == kind).map(|r| r.1).sum()
    }
}

impl ProtocolSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.check_ratio > 0.0 && self.check_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "check ratio must lie in (0, 1), got {}",
                self.check_ratio
            )));
        }
        if !(self.enoise_ratio >= 0.0 && self.enoise_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "electronic-noise ratio must lie in [0, 1), got {}",
                self.enoise_ratio
            )));
        }
        if self.check_slot_len == 0 {
            return Err(Error::invalid("check slot length must be > 0"));
        }
        if self.enoise_ratio > 0.0 {
            if self.enoise_slot_len == 0 || self.enoise_slot_len % self.check_slot_len != 0 {
                return Err(Error::invalid(format!(
                    "electronic-noise slot length {} must be a positive multiple of the check slot length {}",
                    self.enoise_slot_len, self.check_slot_len
                )));
            }
            let (_, units, checks, free) = self.frame_shape();
            if checks == 0 || checks > free {
                return Err(Error::invalid(format!(
                    "cannot place {checks} check units among {free} free units of a {units}-unit frame"
                )));
            }
        }
        if !(self.max_saturation_fraction >= 0.0) {
            return Err(Error::invalid("saturation threshold must be >= 0"));
        }
        Ok(())
    }

    /// `(enoise slots per frame, check units per frame, check units chosen,
    /// non-electronic units)`.
    fn frame_shape(&self) -> (usize, usize, usize, usize) {
        if self.enoise_ratio > 0.0 {
            let slots = (1.0 / self.enoise_ratio).round().max(2.0) as usize;
            let per_slot = self.enoise_slot_len / self.check_slot_len;
            let units = slots * per_slot;
            let checks = (self.check_ratio * units as f64).round() as usize;
            (slots, units, checks, units - per_slot)
        } else {
            let units = (1.0 / self.check_ratio).round().max(2.0) as usize;
            (0, units, 1, units)
        }
    }

    /// Samples in one switching frame.
    pub fn frame_len(&self) -> usize {
        self.frame_shape().1 * self.check_slot_len
    }

    /// Nominal private bits per switching decision, `log2(1/check_ratio)`.
    pub fn seed_bits_per_switch(&self) -> f64 {
        (1.0 / self.check_ratio).log2()
    }

    /// Private switching bits spent on one full frame: the blocked slot plus
    /// one draw per check group.
    pub fn seed_bits_per_frame(&self) -> f64 {
        let (enoise_slots, _, checks, free) = self.frame_shape();
        let blocked = if enoise_slots > 0 { (enoise_slots as f64).log2() } else { 0.0 };
        blocked
            + (0..checks)
                .map(|g| (((g + 1) * free / checks - g * free / checks) as f64).log2())
                .sum::<f64>()
    }

    /// Lays out `n_total` samples; the last frame is truncated.
    pub fn plan(&self, n_total: usize, switch_seed: u64) -> Result<SlotPlan> {
        self.validate()?;
        if n_total < self.frame_len() {
            return Err(Error::TooFewSamples {
                what: "one full switching frame",
                need: self.frame_len(),
                have: n_total,
            });
        }
        let (enoise_slots, units, checks, free) = self.frame_shape();
        let unit = self.check_slot_len;
        let mut rng = rng(switch_seed, SIGNAL_STREAM);
        let mut out = Emitter {
            plan: SlotPlan {
                runs: Vec::new(),
                seed_bits: 0.0,
                decisions: 0,
            },
            emitted: 0,
            n_total,
        };
        let per_slot = units / enoise_slots.max(1);
        let mut is_check = vec![false; free];
        while out.emitted < n_total {
            let blocked = if enoise_slots > 0 {
                out.plan.seed_bits += (enoise_slots as f64).log2();
                out.plan.decisions += 1;
                Some(rng.random_range(0..enoise_slots))
            } else {
                None
            };
            is_check.iter_mut().for_each(|c| *c = false);
            for g in 0..checks {
                let (lo, hi) = (g * free / checks, (g + 1) * free / checks);
                is_check[rng.random_range(lo..hi)] = true;
                out.plan.seed_bits += ((hi - lo) as f64).log2();
                out.plan.decisions += 1;
            }
            let mut free_unit = 0;
            let mut u = 0;
            while u < units && out.emitted < n_total {
                if blocked == Some(u / per_slot) {
                    out.push(SlotKind::ElectronicNoise, per_slot * unit);
                    u += per_slot;
                    continue;
                }
                let kind = if is_check[free_unit] {
                    SlotKind::Check
                } else {
                    SlotKind::Data
                };
                free_unit += 1;
                out.push(kind, unit);
                u += 1;
            }
        }
        Ok(out.plan)
    }
}

struct Emitter {
    plan: SlotPlan,
    emitted: usize,
    n_total: usize,
}

impl Emitter {
    fn push(&mut self, kind: SlotKind, len: usize) {
        let len = len.min(self.n_total - self.emitted);
        if len == 0 {
            return;
        }
        self.emitted += len;
        match self.plan.runs.last_mut() {
            Some((k, l)) if *k == kind => *l += len,
            _ => self.plan.runs.push((kind, len)),
        }
    }
}

/// Homodyne detector with its signal field, LO and digitizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homodyne {
    pub state: StateModel,
    pub lo: LoModel,
    pub var_electronic: f64,
    pub grid: DiscretizationGrid,
    pub sample_rate_hz: f64,
    /// When false both the signal and the LO are absent and every slot sees
    /// electronic noise only.
    pub optical: bool,
}

impl Homodyne {
    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        self.lo.validate()?;
        if !(self.var_electronic.is_finite() && self.var_electronic >= 0.0) {
            return Err(Error::invalid(format!(
                "electronic noise variance must be >= 0, got {}",
                self.var_electronic
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be > 0"));
        }
        Ok(())
    }

    fn detect(
        &self,
        state: &StateModel,
        kind: SlotKind,
        n: usize,
        signal: &mut ChaCha20Rng,
        noise: &mut ChaCha20Rng,
        lo_var: f64,
        out: &mut Vec<Sample>,
    ) {
        let optical = self.optical && kind != SlotKind::ElectronicNoise;
        let signal_sd = match (optical, kind) {
            (false, _) => 0.0,
            (true, SlotKind::Check) => state.variance(Quadrature::Q).sqrt(),
            (true, _) => state.variance(Quadrature::P).sqrt(),
        };
        let noise_var = self.var_electronic + if optical { lo_var } else { 0.0 };
        let noise_sd = noise_var.sqrt();
        out.reserve(n);
        for _ in 0..n {
            let mut x = 0.0;
            if signal_sd > 0.0 {
                x += signal_sd * signal.sample::<f64, _>(StandardNormal);
            }
            if noise_sd > 0.0 {
                x += noise_sd * noise.sample::<f64, _>(StandardNormal);
            }
            let (index, saturated) = self.grid.bin_index(x);
            out.push(Sample {
                index: index as i16,
                kind,
                saturated,
            });
        }
    }

    /// Records `n` samples of one slot kind with the signal replaced by
    /// `state` (e.g. a blocked signal port for shot-noise calibration).
    pub fn record(&self, state: &StateModel, kind: SlotKind, n: usize, seed: u64) -> Result<SampleBlock> {
        self.validate()?;
        let lo_var = self.lo.leakage_variance()?;
        let mut block = SampleBlock::new(self.grid, self.sample_rate_hz);
        let (mut s, mut z) = (rng(seed, SIGNAL_STREAM), rng(seed, NOISE_STREAM));
        self.detect(state, kind, n, &mut s, &mut z, lo_var, &mut block.samples);
        Ok(block)
    }

    /// Runs the switching protocol for `n_total` samples.
    pub fn run_schedule(
        &self,
        schedule: &ProtocolSchedule,
        n_total: usize,
        rng_seed: u64,
        switch_seed: u64,
    ) -> Result<(SampleBlock, SlotPlan)> {
        self.validate()?;
        let plan = schedule.plan(n_total, switch_seed)?;
        let lo_var = self.lo.leakage_variance()?;
        let mut block = SampleBlock::new(self.grid, self.sample_rate_hz);
        block.samples.reserve(n_total);
        let (mut s, mut z) = (rng(rng_seed, SIGNAL_STREAM), rng(rng_seed, NOISE_STREAM));
        for &(kind, len) in &plan.runs {
            self.detect(&self.state, kind, len, &mut s, &mut z, lo_var, &mut block.samples);
        }
        let fraction = block.saturation_fraction();
        if fraction > schedule.max_saturation_fraction {
            return Err(Error::Saturation {
                fraction,
                threshold: schedule.max_saturation_fraction,
            });
        }
        Ok((block, plan))
    }
}

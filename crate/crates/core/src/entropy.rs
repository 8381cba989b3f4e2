//! Distribution estimation, Rényi entropies and the certified min-entropy
//! bound, plus noise calibration and the LO-attack analysis.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{DiscretizationGrid, NoiseBudget, SampleBlock, SlotKind};
use crate::prolate::incompatibility;
use crate::sim::LoModel;

/// Probability mass over consecutive bins `offset, offset + 1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinDistribution {
    pub offset: i64,
    pub probs: Vec<f64>,
}

impl BinDistribution {
    /// Empirical frequencies of the given bin indices. `None` if empty.
    pub fn from_indices<I: IntoIterator<Item = i64>>(indices: I) -> Option<Self> {
        let idx: Vec<i64> = indices.into_iter().collect();
        let lo = *idx.iter().min()?;
        let hi = *idx.iter().max()?;
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for &k in &idx {
            counts[(k - lo) as usize] += 1;
        }
        let n = idx.len() as f64;
        Some(Self {
            offset: lo,
            probs: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }

    pub fn point_mass(bin: i64) -> Self {
        Self {
            offset: bin,
            probs: vec![1.0],
        }
    }

    pub fn uniform(offset: i64, bins: usize) -> Self {
        Self {
            offset,
            probs: vec![1.0 / bins as f64; bins],
        }
    }

    pub fn prob(&self, bin: i64) -> f64 {
        let i = bin - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Occupied `(bin, p)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (self.offset + i as i64, p))
    }

    /// Rényi-1/2 entropy `2·log2 Σ √p_k`.
    pub fn max_entropy(&self) -> f64 {
        let s: f64 = self.probs.iter().map(|p| p.sqrt()).sum();
        (2.0 * s.log2()).max(0.0)
    }

    /// `−log2 max_k p_k`.
    pub fn min_entropy(&self) -> f64 {
        let m = self.probs.iter().copied().fold(0.0, f64::max);
        (-m.log2()).max(0.0)
    }

    pub fn shannon_entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    }
}

/// Empirical distribution of the unsaturated samples of one slot kind.
pub fn histogram(block: &SampleBlock, kind: SlotKind) -> Result<BinDistribution> {
    BinDistribution::from_indices(block.indices(kind).map(i64::from)).ok_or_else(|| {
        Error::NoUsableSamples {
            kind: kind.label(),
            saturated: block
                .samples
                .iter()
                .filter(|s| s.kind == kind && s.saturated)
                .count(),
        }
    })
}

/// `P(X > x)` for `X ~ N(0, σ²)`, accurate deep in the tail.
fn upper_tail(x: f64, sigma: f64) -> f64 {
    0.5 * erfc(x / (sigma * std::f64::consts::SQRT_2))
}

/// Mass of `[a, b)` under `N(0, σ²)`, computed from whichever tail keeps
/// the subtraction well conditioned.
fn interval_mass(a: f64, b: f64, sigma: f64) -> f64 {
    if a >= 0.0 {
        upper_tail(a, sigma) - upper_tail(b, sigma)
    } else if b <= 0.0 {
        upper_tail(-b, sigma) - upper_tail(-a, sigma)
    } else {
        1.0 - upper_tail(-a, sigma) - upper_tail(b, sigma)
    }
}

/// Exact bin masses of `N(0, var)` on the unbounded grid `[kδ, (k+1)δ)`,
/// truncated where the tail mass drops below `Φ(−12)`.
pub fn gaussian_bin_masses(var: f64, delta: f64) -> BinDistribution {
    let sigma = var.sqrt();
    let k_max = (12.0 * sigma / delta).ceil() as i64;
    let probs = (-k_max..k_max)
        .map(|k| interval_mass(k as f64 * delta, (k + 1) as f64 * delta, sigma))
        .collect();
    BinDistribution {
        offset: -k_max,
        probs,
    }
}

/// Bin masses of `N(0, var)` as seen by a clamping digitizer: the two edge
/// bins absorb the out-of-range tails.
pub fn gaussian_bin_masses_on_grid(var: f64, grid: &DiscretizationGrid) -> BinDistribution {
    let sigma = var.sqrt();
    let (lo, hi) = (grid.min_index() as i64, grid.max_index() as i64);
    let d = grid.delta();
    let probs = (lo..=hi)
        .map(|k| {
            let a = if k == lo { f64::NEG_INFINITY } else { k as f64 * d };
            let b = if k == hi { f64::INFINITY } else { (k + 1) as f64 * d };
            interval_mass(a, b, sigma)
        })
        .collect();
    BinDistribution { offset: lo, probs }
}

/// Probability that a sample of `N(0, var)` lands outside the digitizer range.
pub fn gaussian_saturation_mass(var: f64, grid: &DiscretizationGrid) -> f64 {
    let sigma = var.sqrt();
    let lo = grid.min_index() as f64 * grid.delta();
    let hi = (grid.max_index() + 1) as f64 * grid.delta();
    upper_tail(-lo, sigma) + upper_tail(hi, sigma)
}

/// Non-smooth certified bound `−log2 c − H_max`. May be negative.
pub fn eup_bound(c: f64, h_max: f64) -> f64 {
    -c.log2() - h_max
}

/// Finite-size term `Δ = 4·√(log2(2/ε²))·log2(2^(1+H_max/2) + 1)`.
pub fn delta_correction(epsilon: f64, h_max: f64) -> f64 {
    4.0 * (2.0 / (epsilon * epsilon)).log2().sqrt() * ((1.0 + h_max / 2.0).exp2() + 1.0).log2()
}

/// Smooth conditional min-entropy lower bound per sample.
pub fn smooth_min_entropy_lower(c: f64, h_max: f64, n_p: usize, epsilon: f64) -> f64 {
    eup_bound(c, h_max) - delta_correction(epsilon, h_max) / (n_p as f64).sqrt()
}

/// Outcome of certifying one sample block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Rényi-1/2 entropy of the check-quadrature histogram.
    pub h_max: f64,
    /// Plain min-entropy of the data-quadrature histogram.
    pub h_min_plain: f64,
    pub c_incompat: f64,
    pub delta_term: f64,
    /// Certified bits per sample after the finite-size correction.
    pub h_low_smooth: f64,
    pub epsilon: f64,
    pub n_check: usize,
    pub n_data: usize,
    /// Data samples per extraction block, the `n_p` of the finite-size term.
    pub n_block: usize,
    /// Bin width in calibrated phase-space units.
    pub delta_phase: f64,
    /// Bits per data sample handed to the extractor; at most `h_low_smooth`.
    pub h_extractable: f64,
}

impl EntropyReport {
    /// Lowers the extractable entropy to `limit` if that is smaller.
    pub fn cap_extractable(&mut self, limit: f64) {
        self.h_extractable = self.h_extractable.min(limit);
    }
}

/// Certifies the data of `block` for extraction in blocks of `n_p` data
/// samples. The bin width is mapped into phase-space units with the
/// calibrated budget, if one is given.
pub fn certify(
    block: &SampleBlock,
    budget: Option<&NoiseBudget>,
    epsilon: f64,
    n_p: usize,
) -> Result<EntropyReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    if n_p == 0 {
        return Err(Error::invalid("extraction block must hold at least one sample"));
    }
    let check = histogram(block, SlotKind::Check)?;
    let data = histogram(block, SlotKind::Data)?;
    let n_check = block.indices(SlotKind::Check).count();
    let n_data = block.indices(SlotKind::Data).count();
    let scale = budget.map_or(1.0, NoiseBudget::phase_space_scale);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("noise budget leaves no shot noise"));
    }
    let delta_phase = block.grid.delta() * scale;
    let c = incompatibility(delta_phase, delta_phase);
    let h_max = check.max_entropy();
    let delta_term = delta_correction(epsilon, h_max);
    let h_low = smooth_min_entropy_lower(c, h_max, n_p, epsilon);
    Ok(EntropyReport {
        h_max,
        h_min_plain: data.min_entropy(),
        c_incompat: c,
        delta_term,
        h_low_smooth: h_low,
        epsilon,
        n_check,
        n_data,
        n_block: n_p,
        delta_phase,
        h_extractable: h_low,
    })
}

/// Minimum usable samples per calibration record.
pub const MIN_CALIBRATION_SAMPLES: usize = 1000;

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Decomposes measured variances into shot noise, electronic noise and LO
/// leakage. `lo` is the monitored LO model used to predict the leakage.
pub fn calibrate_noise_budget(
    vac: &[f64],
    squ: &[f64],
    ant: &[f64],
    enoise: &[f64],
    lo: &LoModel,
) -> Result<NoiseBudget> {
    for (what, xs) in [
        ("vacuum calibration", vac),
        ("squeezed calibration", squ),
        ("anti-squeezed calibration", ant),
        ("electronic noise", enoise),
    ] {
        if xs.len() < MIN_CALIBRATION_SAMPLES {
            return Err(Error::TooFewSamples {
                what,
                need: MIN_CALIBRATION_SAMPLES,
                have: xs.len(),
            });
        }
    }
    let budget = NoiseBudget {
        var_total_vac: variance(vac),
        var_total_squ: variance(squ),
        var_total_ant: variance(ant),
        var_electronic: variance(enoise),
        var_lo: lo.leakage_variance()?,
    };
    let untrusted = budget.var_electronic + budget.var_lo;
    for (which, total) in [
        ("vacuum", budget.var_total_vac),
        ("squeezed", budget.var_total_squ),
        ("anti-squeezed", budget.var_total_ant),
    ] {
        if untrusted >= total {
            return Err(Error::UnphysicalCalibration {
                which,
                electronic: budget.var_electronic,
                lo: budget.var_lo,
                total,
            });
        }
    }
    Ok(budget)
}

/// Share of the assumed extractable bits that an LO attacker knows.
///
/// A user unaware of the LO noise normalizes the grid to shot noise that in
/// fact contains `σ²_LO`, so the true bin width in phase space is wider by
/// `√(1 + σ²_LO/σ²_SNL)` and the certified bound drops by the change in
/// `−log2 c`. The result is that loss over `report.h_extractable`, capped at 1.
pub fn insecure_fraction(report: &EntropyReport, attacked: &NoiseBudget, grid: &DiscretizationGrid) -> f64 {
    if attacked.var_lo <= 0.0 || report.h_extractable <= 0.0 {
        return 0.0;
    }
    let assumed_snl = attacked.var_snl() + attacked.var_lo;
    let true_snl = attacked.var_snl();
    let delta_assumed = grid.delta() * (crate::model::SNL_VARIANCE / assumed_snl).sqrt();
    let delta_true = grid.delta() * (crate::model::SNL_VARIANCE / true_snl).sqrt();
    let loss = incompatibility(delta_true, delta_true).log2()
        - incompatibility(delta_assumed, delta_assumed).log2();
    (loss / report.h_extractable).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscretizationGrid, Sample, StateModel, SNL_VARIANCE};
    use proptest::prelude::*;

    const DELTA: f64 = 0.01536;

    fn block_of(kind: SlotKind, idx: &[i16]) -> SampleBlock {
        let mut b = SampleBlock::new(DiscretizationGrid::new(DELTA, 11).unwrap(), 1.0);
        b.samples = idx
            .iter()
            .map(|&index| Sample {
                index,
                kind,
                saturated: false,
            })
            .collect();
        b
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&block_of(SlotKind::Data, &[3]), SlotKind::Data).unwrap();
        assert_eq!(h.iter().collect::<Vec<_>>(), vec![(3, 1.0)]);
        let h = histogram(&block_of(SlotKind::Data, &[0, 1]), SlotKind::Data).unwrap();
        assert_eq!(h.iter().collect::<Vec<_>>(), vec![(0, 0.5), (1, 0.5)]);
        assert!(matches!(
            histogram(&block_of(SlotKind::Check, &[1]), SlotKind::Data),
            Err(Error::NoUsableSamples { .. })
        ));
    }

    #[test]
    fn saturated_samples_are_excluded() {
        let mut b = block_of(SlotKind::Data, &[2, 2]);
        b.samples[1].saturated = true;
        b.samples[1].index = 1023;
        let h = histogram(&b, SlotKind::Data).unwrap();
        assert_eq!(h.iter().collect::<Vec<_>>(), vec![(2, 1.0)]);
    }

    #[test]
    fn entropy_examples() {
        assert!((BinDistribution::uniform(0, 2).max_entropy() - 1.0).abs() < 1e-12);
        assert_eq!(BinDistribution::point_mass(5).max_entropy(), 0.0);
        assert_eq!(BinDistribution::point_mass(5).min_entropy(), 0.0);
        assert!((BinDistribution::uniform(-4, 1 << 6).min_entropy() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_max_entropy_matches_closed_form() {
        let var = SNL_VARIANCE * 10f64.powf(-0.38);
        let numeric = gaussian_bin_masses(var, DELTA).max_entropy();
        let analytic = ((8.0 * std::f64::consts::PI).sqrt() * var.sqrt() / DELTA).log2();
        assert!((numeric - analytic).abs() < 0.01, "{numeric} vs {analytic}");
        assert!((numeric - 7.22).abs() < 0.01);
    }

    #[test]
    fn gaussian_min_entropy_matches_central_bin() {
        let var = 0.5;
        let d = gaussian_bin_masses(var, DELTA);
        let sigma = var.sqrt();
        let central = 0.5 - upper_tail(DELTA, sigma);
        assert!((d.min_entropy() + central.log2()).abs() < 1e-9);
        let approx = ((2.0 * std::f64::consts::PI).sqrt() * sigma / DELTA).log2();
        assert!((d.min_entropy() - approx).abs() < 0.01);
    }

    #[test]
    fn grid_masses_sum_with_saturation() {
        for bits in [3, 6, 11] {
            let grid = DiscretizationGrid::new(0.4, bits).unwrap();
            let var = 0.9;
            let clamped = gaussian_bin_masses_on_grid(var, &grid).total();
            assert!((clamped - 1.0).abs() < 1e-12);
            // Interior bins alone miss exactly the saturation tails.
            let sigma = var.sqrt();
            let strict: f64 = (grid.min_index()..=grid.max_index())
                .map(|k| interval_mass(k as f64 * 0.4, (k + 1) as f64 * 0.4, sigma))
                .sum();
            let expect = 1.0 - gaussian_saturation_mass(var, &grid);
            assert!((strict - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn eup_and_delta_examples() {
        assert!((eup_bound(0.5, 0.0) - 1.0).abs() < 1e-12);
        let c = 3.755e-5;
        assert!(eup_bound(c, -c.log2()).abs() < 1e-12);
        assert!((eup_bound(c, 7.22) - 7.48).abs() < 0.01);

        let d = delta_correction(1e-6, 7.23);
        assert!((d - 119.0).abs() < 1.0, "{d}");
        assert!((d / 2e5f64.sqrt() - 0.27).abs() < 0.005);
        let closed = 4.0 * (2.0f64 / 1e-12).log2().sqrt() * 3f64.log2();
        assert!((delta_correction(1e-6, 0.0) - closed).abs() < 1e-9);
    }

    #[test]
    fn smooth_bound_tends_to_eup() {
        let c = 3.755e-5;
        let big = smooth_min_entropy_lower(c, 7.22, usize::MAX / 2, 1e-6);
        assert!((big - eup_bound(c, 7.22)).abs() < 1e-6);
        assert!(smooth_min_entropy_lower(c, 7.22, 10, 1e-6) < 0.0);
    }

    #[test]
    fn early_uncertainty_relation_holds() {
        let c = incompatibility(DELTA, DELTA);
        for db in [0.0, 3.8, 8.0, 12.0] {
            let (vq, vp) = StateModel::pure_squeezed(db).variances();
            let hq = gaussian_bin_masses(vq, DELTA).shannon_entropy();
            let hp = gaussian_bin_masses(vp, DELTA).shannon_entropy();
            assert!(hq + hp >= -c.log2(), "{db} dB");
        }
    }

    #[test]
    fn pure_state_duality() {
        let c = incompatibility(DELTA, DELTA);
        for tenth_db in 0..=100 {
            let (vq, vp) = StateModel::pure_squeezed(tenth_db as f64 / 10.0).variances();
            let bound = eup_bound(c, gaussian_bin_masses(vq, DELTA).max_entropy());
            let hmin = gaussian_bin_masses(vp, DELTA).min_entropy();
            assert!((bound - hmin).abs() < 0.05, "{tenth_db}: {bound} vs {hmin}");
        }
    }

    fn lo_budget(var_lo: f64) -> NoiseBudget {
        NoiseBudget {
            var_total_vac: 0.5 + var_lo,
            var_total_squ: 0.2 + var_lo,
            var_total_ant: 1.2 + var_lo,
            var_electronic: 0.0,
            var_lo,
        }
    }

    fn report_with(h: f64) -> EntropyReport {
        EntropyReport {
            h_max: 7.2,
            h_min_plain: 7.0,
            c_incompat: 3.755e-5,
            delta_term: 119.0,
            h_low_smooth: 7.2,
            epsilon: 1e-6,
            n_check: 100_000,
            n_data: 1_900_000,
            n_block: 200_000,
            delta_phase: DELTA,
            h_extractable: h,
        }
    }

    #[test]
    fn insecure_fraction_basics() {
        let grid = DiscretizationGrid::new(DELTA, 11).unwrap();
        assert_eq!(insecure_fraction(&report_with(3.28), &lo_budget(0.0), &grid), 0.0);
        let mut last = 0.0;
        for i in 1..=20 {
            let f = insecure_fraction(&report_with(3.28), &lo_budget(0.05 * i as f64), &grid);
            assert!(f > last);
            last = f;
        }
    }

    #[test]
    fn calibration_trivial_decomposition() {
        let xs: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 2000) as f64 / 1000.0 - 1.0).collect();
        let zeros = vec![0.0; 2000];
        let b = calibrate_noise_budget(&xs, &xs, &xs, &zeros, &LoModel::balanced()).unwrap();
        assert_eq!(b.var_snl(), variance(&xs));
        assert!(matches!(
            calibrate_noise_budget(&xs[..10], &xs, &xs, &zeros, &LoModel::balanced()),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            calibrate_noise_budget(&xs, &xs, &xs, &xs, &LoModel::balanced()),
            Err(Error::UnphysicalCalibration { .. })
        ));
    }

    proptest! {
        #[test]
        fn entropy_ordering(raw in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 1e-6);
            let d = BinDistribution { offset: 0, probs: raw.iter().map(|p| p / s).collect() };
            prop_assert!(d.max_entropy() + 1e-9 >= d.min_entropy());
            prop_assert!(d.min_entropy() >= 0.0);
        }

        #[test]
        fn smooth_bound_monotone(h in 0.0f64..12.0, dh in 0.0f64..2.0, n in 10usize..1_000_000, dn in 1usize..1000, e in 1e-12f64..0.5) {
            let c = 3.755e-5;
            let base = smooth_min_entropy_lower(c, h, n, e);
            prop_assert!(smooth_min_entropy_lower(c, h + dh, n, e) <= base + 1e-12);
            prop_assert!(smooth_min_entropy_lower(c, h, n + dn, e) >= base - 1e-12);
            prop_assert!(smooth_min_entropy_lower(c, h, n, e / 2.0) <= base + 1e-12);
            prop_assert!(base <= eup_bound(c, h));
        }

        #[test]
        fn excess_noise_never_raises_bound(var in 0.05f64..3.0, extra in 0.0f64..2.0) {
            let c = incompatibility(DELTA, DELTA);
            let a = eup_bound(c, gaussian_bin_masses(var, DELTA).max_entropy());
            let b = eup_bound(c, gaussian_bin_masses(var + extra, DELTA).max_entropy());
            prop_assert!(b <= a + 1e-9);
        }
    }
}

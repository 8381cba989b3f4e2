//! Equivalent generation rate of the switched protocol.

use cvqrng_core::ProtocolSchedule;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub sample_rate_hz: f64,
    /// Output bits per data sample after hashing.
    pub bits_per_sample: f64,
    pub check_ratio: f64,
    pub enoise_ratio: f64,
    /// `fs · bits_per_sample`, as if every sample were data.
    pub gross_bps: f64,
    /// Gross rate scaled by the data share `(1 − check)(1 − enoise)`.
    pub data_bps: f64,
    /// Private switching randomness consumed per second.
    pub seed_bps: f64,
    pub rate_bps: f64,
    pub band_low_bps: f64,
    pub band_high_bps: f64,
}

impl RateBreakdown {
    pub fn rate_mbps(&self) -> f64 {
        self.rate_bps / 1e6
    }

    pub fn contains(&self, bps: f64) -> bool {
        (self.band_low_bps..=self.band_high_bps).contains(&bps)
    }
}

/// Switching bits per second when every window draws its slots jointly.
fn seed_bps_per_window(schedule: &ProtocolSchedule, fs: f64) -> f64 {
    if schedule.check_ratio <= 0.0 {
        return 0.0;
    }
    schedule.seed_bits_per_frame() / schedule.frame_len() as f64 * fs
}

/// Switching bits per second when every check slot costs a fresh
/// `log2(1/check_ratio)` draw.
fn seed_bps_per_slot(schedule: &ProtocolSchedule, fs: f64) -> f64 {
    if schedule.check_ratio <= 0.0 {
        return 0.0;
    }
    fs / schedule.check_slot_len as f64 * schedule.seed_bits_per_switch()
}

/// Net rate for `bits_per_sample` extracted bits per data sample.
///
/// The point estimate charges the data share multiplicatively and the
/// switching seed per window. The band spans the bookkeeping choices: the low
/// end takes `bits_per_sample − margin`, an additive discount
/// `1 − check − enoise` and a per-slot seed charge; the high end takes
/// `bits_per_sample + margin` with the point estimate's charges.
pub fn equivalent_rate(
    bits_per_sample: f64,
    schedule: &ProtocolSchedule,
    sample_rate_hz: f64,
    margin: f64,
) -> RateBreakdown {
    let fs = sample_rate_hz;
    let (c, e) = (schedule.check_ratio.max(0.0), schedule.enoise_ratio.max(0.0));
    let keep = (1.0 - c) * (1.0 - e);
    let window = seed_bps_per_window(schedule, fs);
    let slot = seed_bps_per_slot(schedule, fs);
    let gross = fs * bits_per_sample;
    let data = gross * keep;
    let rate = data - window;
    let low = fs * (bits_per_sample - margin) * (1.0 - c - e) - slot;
    let high = fs * (bits_per_sample + margin) * keep - window;
    RateBreakdown {
        sample_rate_hz: fs,
        bits_per_sample,
        check_ratio: c,
        enoise_ratio: e,
        gross_bps: gross,
        data_bps: data,
        seed_bps: window,
        rate_bps: rate,
        band_low_bps: low.min(rate),
        band_high_bps: high.max(rate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_switching_is_plain_product() {
        let s = ProtocolSchedule {
            check_ratio: 0.0,
            enoise_ratio: 0.0,
            ..ProtocolSchedule::default()
        };
        let r = equivalent_rate(3.0, &s, 1e8, 0.0);
        assert_eq!(r.rate_bps, 3e8);
        assert_eq!(r.seed_bps, 0.0);
    }

    #[test]
    fn hardware_windows() {
        // 20 µs check window and 0.4 s chopper window at 200 MS/s.
        let s = ProtocolSchedule {
            check_slot_len: 200,
            enoise_slot_len: 4_000_000,
            ..ProtocolSchedule::default()
        };
        assert_eq!(s.frame_len(), 80_000_000);
        let r = equivalent_rate(655_958.0 / 200_000.0, &s, 200e6, 0.04);
        assert!((r.data_bps / 1e6 - 592.0).abs() < 0.1, "{}", r.data_bps);
        assert!((0.15e6..0.25e6).contains(&r.seed_bps), "{}", r.seed_bps);
        assert!((r.rate_mbps() - 591.8).abs() < 0.1);
        assert!(r.contains(580.7e6));
        assert!(r.band_low_bps < r.rate_bps && r.rate_bps < r.band_high_bps);
    }

    #[test]
    fn monotone_in_entropy() {
        let s = ProtocolSchedule::default();
        let a = equivalent_rate(2.0, &s, 1e8, 0.0);
        let b = equivalent_rate(2.5, &s, 1e8, 0.0);
        assert!(b.rate_bps > a.rate_bps);
    }
}

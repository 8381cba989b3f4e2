//! Entropy-versus-noise and entropy-versus-resolution tables.

use std::io::Write;

use crate::entropy::{eup_bound, gaussian_bin_masses, gaussian_bin_masses_on_grid};
use crate::error::{Error, Result};
use crate::model::{DiscretizationGrid, Quadrature, StateModel, SNL_VARIANCE};
use crate::prolate::incompatibility;

/// One point of the noise sweep. `noise_level` is excess noise in shot-noise
/// units; the squeezed state has that much excess on its anti-squeezed
/// quadrature and is pure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseRow {
    pub noise_level: f64,
    pub h_min_thermal: f64,
    pub h_low_thermal: f64,
    pub h_low_squeezed: f64,
}

/// Asymptotic certified entropy versus noise at bin width `delta`.
pub fn curve_entropy_vs_noise(delta: f64, levels: &[f64]) -> Result<Vec<NoiseRow>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("bin width must be > 0, got {delta}")));
    }
    let c = incompatibility(delta, delta);
    levels
        .iter()
        .map(|&v| {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {v}")));
            }
            let thermal = SNL_VARIANCE * (1.0 + v);
            let squeezed = 0.25 / thermal;
            let th = gaussian_bin_masses(thermal, delta);
            Ok(NoiseRow {
                noise_level: v,
                h_min_thermal: th.min_entropy(),
                h_low_thermal: eup_bound(c, th.max_entropy()),
                h_low_squeezed: eup_bound(c, gaussian_bin_masses(squeezed, delta).max_entropy()),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolutionRow {
    pub bits: u32,
    pub delta: f64,
    /// One value per requested state, in input order.
    pub h_low: Vec<f64>,
}

/// Asymptotic certified entropy versus digitizer resolution for a fixed
/// full-scale `range`; the bin width halves with every added bit. Each
/// state's check quadrature (Q) feeds the max-entropy.
pub fn curve_entropy_vs_resolution(
    states: &[StateModel],
    range: f64,
    bits: std::ops::RangeInclusive<u32>,
) -> Result<Vec<ResolutionRow>> {
    if bits.is_empty() {
        return Err(Error::InvalidParameter("empty resolution range".into()));
    }
    for s in states {
        s.validate()?;
    }
    bits.map(|n| {
        let grid = DiscretizationGrid::from_range(range, n)?;
        let c = incompatibility(grid.delta(), grid.delta());
        let h_low = states
            .iter()
            .map(|s| {
                let h_max = gaussian_bin_masses_on_grid(s.variance(Quadrature::Q), &grid).max_entropy();
                eup_bound(c, h_max)
            })
            .collect();
        Ok(ResolutionRow {
            bits: n,
            delta: grid.delta(),
            h_low,
        })
    })
    .collect()
}

pub fn write_noise_csv<W: Write>(rows: &[NoiseRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "noise_level,h_min_thermal,h_low_thermal,h_low_squeezed")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            r.noise_level, r.h_min_thermal, r.h_low_thermal, r.h_low_squeezed
        )?;
    }
    Ok(())
}

pub fn write_resolution_csv<W: Write>(rows: &[ResolutionRow], labels: &[&str], mut w: W) -> std::io::Result<()> {
    write!(w, "bits,delta")?;
    for l in labels {
        write!(w, ",h_low_{l}")?;
    }
    writeln!(w)?;
    for r in rows {
        write!(w, "{},{:.8}", r.bits, r.delta)?;
        for h in &r.h_low {
            write!(w, ",{h:.6}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

//! CSV tables behind the entropy and noise-spectrum plots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cvqrng_core::curves::{curve_entropy_vs_noise, curve_entropy_vs_resolution, write_noise_csv, write_resolution_csv};
use cvqrng_core::model::variance_to_db;
use cvqrng_core::{SlotKind, StateModel};

use crate::config::RunConfig;
use crate::Abort;

pub const NOISE_CURVE: &str = "entropy_vs_noise.csv";
pub const RESOLUTION_CURVE: &str = "entropy_vs_resolution.csv";
pub const SPECTRUM: &str = "noise_spectrum.csv";

/// Excess-noise levels in shot-noise units: zero, then four points per
/// decade from 1e-2 to 1e6.
pub fn noise_levels() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-8..=24).map(|k| 10f64.powf(k as f64 / 4.0)))
        .collect()
}

pub fn resolution_states() -> [(&'static str, StateModel); 3] {
    [
        ("vacuum", StateModel::Vacuum),
        ("squeezed_3p8db", StateModel::pure_squeezed(3.8)),
        ("squeezed_8db", StateModel::pure_squeezed(8.0)),
    ]
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Noise power relative to shot noise across the detection band. The
/// simulated detector is white, so each trace gives one level for every
/// frequency.
pub fn write_spectrum<W: Write>(cfg: &RunConfig, mut w: W) -> Result<(), Abort> {
    let h = cfg.homodyne()?;
    let n = cfg.size.calibration_samples;
    let seed = |k: u64| cfg.seeds.calibration ^ (k << 56);
    let trace = |state: &StateModel, kind, k| -> Result<f64, Abort> {
        let b = h.record(state, kind, n, seed(k))?;
        Ok(variance(&b.values(kind)))
    };
    let vac = trace(&StateModel::Vacuum, SlotKind::Data, 1)?;
    let squ = trace(&cfg.state, SlotKind::Check, 2)?;
    let ant = trace(&cfg.state, SlotKind::Data, 3)?;
    let ele = trace(&cfg.state, SlotKind::ElectronicNoise, 4)?;
    let db = |v: f64| variance_to_db(v * 0.5 / vac);
    writeln!(w, "frequency_mhz,electronic_db,shot_noise_db,squeezed_db,antisqueezed_db")?;
    let nyquist_mhz = (cfg.detector.sample_rate_hz / 2e6).floor() as u32;
    for f in (1..=nyquist_mhz).step_by(1) {
        writeln!(w, "{f},{:.4},{:.4},{:.4},{:.4}", db(ele), db(vac), db(squ), db(ant))?;
    }
    Ok(())
}

/// Writes the three tables into `dir` and returns their paths.
pub fn emit_figures(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, Abort> {
    std::fs::create_dir_all(dir)?;
    let grid = cfg.grid()?;
    let a = dir.join(NOISE_CURVE);
    let rows = curve_entropy_vs_noise(grid.delta(), &noise_levels())?;
    let mut w = BufWriter::new(File::create(&a)?);
    write_noise_csv(&rows, &mut w)?;
    w.flush()?;

    let b = dir.join(RESOLUTION_CURVE);
    let states = resolution_states();
    let models: Vec<StateModel> = states.iter().map(|s| s.1).collect();
    let labels: Vec<&str> = states.iter().map(|s| s.0).collect();
    let rows = curve_entropy_vs_resolution(&models, grid.adc_range(), 1..=16)?;
    let mut w = BufWriter::new(File::create(&b)?);
    write_resolution_csv(&rows, &labels, &mut w)?;
    w.flush()?;

    let c = dir.join(SPECTRUM);
    let mut w = BufWriter::new(File::create(&c)?);
    write_spectrum(cfg, &mut w)?;
    w.flush()?;
    Ok(vec![a, b, c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_span_eight_decades() {
        let l = noise_levels();
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 1e-2).abs() < 1e-15);
        assert!((l.last().unwrap() - 1e6).abs() < 1e-6);
    }

    #[test]
    fn spectrum_levels() {
        let mut cfg = RunConfig::default();
        cfg.size.calibration_samples = 200_000;
        let mut buf = Vec::new();
        write_spectrum(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(text.lines().count(), 101);
        // Levels relative to the vacuum trace, which carries the electronic
        // noise too: 0.0251/0.5251, 0.2335/0.5251, 1.2246/0.5251.
        assert!((row[1] - (-13.20)).abs() < 0.05, "{row:?}");
        assert!((row[2] - 0.0).abs() < 1e-9);
        assert!((row[3] - (-3.52)).abs() < 0.05, "{row:?}");
        assert!((row[4] - 3.68).abs() < 0.05, "{row:?}");
    }
}

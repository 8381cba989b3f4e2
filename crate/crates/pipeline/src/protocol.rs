//! Pipeline stages and the full run.

use std::path::Path;

use cvqrng_core::entropy::{calibrate_noise_budget, certify, insecure_fraction};
use cvqrng_core::sim::SlotPlan;
use cvqrng_core::{BitString, EntropyReport, LoModel, NoiseBudget, ProtocolSchedule, SampleBlock, SlotKind, StateModel};
use cvqrng_extract::bitfile::{digest_hex, sha256_hex, write_bits, BitFileMeta};
use cvqrng_extract::{output_length, pack_samples, ExtractorRegistry, ToeplitzSpec};
use cvqrng_stattests::{run_battery, TestReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::rate::{equivalent_rate, RateBreakdown};
use crate::Abort;

pub const BITS_FILE: &str = "bits.bin";
pub const REPORT_FILE: &str = "report.toml";
pub const BATTERY_FILE: &str = "battery.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const BLOCK_FILE: &str = "samples.qrsb";

/// Runs the switching protocol and digitizes the stream.
pub fn simulate(cfg: &RunConfig) -> Result<(SampleBlock, SlotPlan), Abort> {
    let h = cfg.homodyne()?;
    Ok(h.run_schedule(&cfg.schedule, cfg.size.n_total, cfg.seeds.signal, cfg.seeds.switch)?)
}

/// Records the four calibration traces and decomposes their variances.
pub fn calibrate(cfg: &RunConfig) -> Result<NoiseBudget, Abort> {
    let h = cfg.homodyne()?;
    let n = cfg.size.calibration_samples;
    let seed = |k: u64| cfg.seeds.calibration ^ (k << 56);
    let vac = h.record(&StateModel::Vacuum, SlotKind::Data, n, seed(1))?;
    let squ = h.record(&cfg.state, SlotKind::Check, n, seed(2))?;
    let ant = h.record(&cfg.state, SlotKind::Data, n, seed(3))?;
    let ele = h.record(&cfg.state, SlotKind::ElectronicNoise, n, seed(4))?;
    // With the beams blocked there is no LO to leak.
    let lo = if cfg.detector.optical { cfg.lo.monitored() } else { LoModel::balanced() };
    Ok(calibrate_noise_budget(
        &vac.values(SlotKind::Data),
        &squ.values(SlotKind::Check),
        &ant.values(SlotKind::Data),
        &ele.values(SlotKind::ElectronicNoise),
        &lo,
    )?)
}

/// Stops the run when the monitored LO leakage is not negligible.
pub fn check_lo_monitor(cfg: &RunConfig, budget: &NoiseBudget) -> Result<(), Abort> {
    let fraction = budget.lo_fraction();
    if cfg.lo.monitor && fraction > cfg.lo.max_lo_fraction {
        return Err(Abort::LoMonitor {
            fraction,
            limit: cfg.lo.max_lo_fraction,
        });
    }
    Ok(())
}

/// Ceiling on extractable bits per sample set by the effective digitizer
/// depth and the configured entropy target.
pub fn extractable_cap(cfg: &RunConfig) -> f64 {
    let x = &cfg.extraction;
    let bits = x.effective_bits as f64;
    match x.effective_entropy {
        Some(h) => (h - x.entropy_margin).min(bits),
        None => bits,
    }
}

pub fn certify_block(cfg: &RunConfig, block: &SampleBlock, budget: Option<&NoiseBudget>) -> Result<EntropyReport, Abort> {
    let mut report = certify(
        block,
        budget,
        cfg.security.epsilon_smooth(),
        cfg.extraction.block_samples,
    )?;
    if !(report.h_low_smooth > 0.0) {
        return Err(Abort::NoEntropy(format!(
            "certified bound {:.4} bits per sample (H_max {:.4}, -log2 c {:.4})",
            report.h_low_smooth,
            report.h_max,
            -report.c_incompat.log2()
        )));
    }
    report.cap_extractable(extractable_cap(cfg));
    if !(report.h_extractable > 0.0) {
        return Err(Abort::NoEntropy(format!(
            "extractable entropy {:.4} after the configured cap",
            report.h_extractable
        )));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub extractor: String,
    pub raw_bits_per_sample: u32,
    pub blocks: usize,
    pub n_in: usize,
    pub m_out: usize,
    pub output_bits: usize,
    pub sha256: String,
    pub seed_sha256: String,
    pub epsilon_smooth: f64,
    pub epsilon_hash: f64,
}

/// Hashes the data samples block by block with one Toeplitz matrix.
pub fn extract_block(
    cfg: &RunConfig,
    block: &SampleBlock,
    report: &EntropyReport,
) -> Result<(BitString, ExtractionSummary), Abort> {
    let x = &cfg.extraction;
    let data: Vec<i16> = block.indices(SlotKind::Data).collect();
    let blocks = data.len() / x.block_samples;
    if blocks == 0 {
        return Err(Abort::Config(format!(
            "{} data samples, one extraction block needs {}",
            data.len(),
            x.block_samples
        )));
    }
    let eps_hash = cfg.security.epsilon_hash();
    let m = output_length(x.block_samples, x.raw_bits_per_sample, report.h_extractable, eps_hash)?;
    let n_in = x.block_samples * x.raw_bits_per_sample as usize;
    let spec = ToeplitzSpec::random(n_in, m, cfg.seeds.toeplitz)?;
    let registry = ExtractorRegistry::default();
    let extractor = registry.get(&x.extractor)?;
    let mut out = BitString::with_capacity(blocks * m);
    for chunk in data.chunks_exact(x.block_samples) {
        let input = pack_samples(chunk.iter().copied(), x.raw_bits_per_sample);
        let y = extractor.extract(&input, &spec)?;
        for b in y.iter() {
            out.push(b);
        }
    }
    let summary = ExtractionSummary {
        extractor: x.extractor.clone(),
        raw_bits_per_sample: x.raw_bits_per_sample,
        blocks,
        n_in,
        m_out: m,
        output_bits: out.len(),
        sha256: digest_hex(&out),
        seed_sha256: digest_hex(spec.seed()),
        epsilon_smooth: cfg.security.epsilon_smooth(),
        epsilon_hash: eps_hash,
    };
    Ok((out, summary))
}

/// Schedule used for rate accounting: the simulated slot layout with the
/// hardware chopper slot.
pub fn rate_schedule(cfg: &RunConfig) -> Result<ProtocolSchedule, Abort> {
    let s = ProtocolSchedule {
        enoise_slot_len: cfg.rate.enoise_slot_len,
        ..cfg.schedule
    };
    s.validate()?;
    Ok(s)
}

pub fn rate_for(cfg: &RunConfig, summary: &ExtractionSummary) -> Result<RateBreakdown, Abort> {
    Ok(equivalent_rate(
        summary.m_out as f64 / cfg.extraction.block_samples as f64,
        &rate_schedule(cfg)?,
        cfg.detector.sample_rate_hz,
        cfg.extraction.entropy_margin,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n_total: usize,
    pub n_data: usize,
    pub n_check: usize,
    pub n_enoise: usize,
    pub saturated: usize,
    pub saturation_fraction: f64,
    pub switching_decisions: usize,
    pub switching_seed_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_sha256: String,
    pub electronic_fraction: f64,
    pub lo_fraction: f64,
    /// Share of the extracted bits known to an LO attacker; set only when the
    /// LO is unmonitored and leaks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insecure_fraction: Option<f64>,
    pub samples: SampleSummary,
    pub budget: NoiseBudget,
    pub entropy: EntropyReport,
    pub extraction: ExtractionSummary,
    pub rate: RateBreakdown,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<TestReport>,
}

impl RunReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "samples {} (data {}, check {}, electronic {}), saturated {}\n\
             electronic noise {:.3}% of vacuum, LO {:.3e}%\n\
             H_max {:.4}  -log2 c {:.4}  H_low {:.4}  extractable {:.4} bits/sample\n\
             {} block(s) of {} -> {} bits, {} bits out\n\
             rate {:.1} Mbps (band {:.1}-{:.1})\n",
            self.samples.n_total,
            self.samples.n_data,
            self.samples.n_check,
            self.samples.n_enoise,
            self.samples.saturated,
            100.0 * self.electronic_fraction,
            100.0 * self.lo_fraction,
            self.entropy.h_max,
            -self.entropy.c_incompat.log2(),
            self.entropy.h_low_smooth,
            self.entropy.h_extractable,
            self.extraction.blocks,
            self.extraction.n_in,
            self.extraction.m_out,
            self.extraction.output_bits,
            self.rate.rate_bps / 1e6,
            self.rate.band_low_bps / 1e6,
            self.rate.band_high_bps / 1e6,
        );
        if let Some(f) = self.insecure_fraction {
            s.push_str(&format!("WARNING: unmonitored LO, {:.2}% of output insecure\n", 100.0 * f));
        }
        if let Some(b) = &self.battery {
            s.push_str(&b.summary());
        }
        s
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub bits: BitString,
    pub block: SampleBlock,
}

pub fn run_protocol(cfg: &RunConfig) -> Result<RunOutcome, Abort> {
    cfg.validate()?;
    let (block, plan) = simulate(cfg)?;
    let budget = calibrate(cfg)?;
    check_lo_monitor(cfg, &budget)?;
    let entropy = certify_block(cfg, &block, Some(&budget))?;
    let (bits, extraction) = extract_block(cfg, &block, &entropy)?;
    let battery = if cfg.battery.enabled {
        run_battery(&bits, &cfg.battery.config).ok()
    } else {
        None
    };
    let rate = rate_for(cfg, &extraction)?;
    let leak = cfg.lo.actual().leakage_variance()?;
    let insecure = if !cfg.lo.monitor && leak > 0.0 {
        let attacked = NoiseBudget { var_lo: leak, ..budget };
        Some(insecure_fraction(&entropy, &attacked, &cfg.grid()?))
    } else {
        None
    };
    let samples = SampleSummary {
        n_total: block.len(),
        n_data: entropy.n_data,
        n_check: entropy.n_check,
        n_enoise: block.count(SlotKind::ElectronicNoise),
        saturated: block.saturated_count(),
        saturation_fraction: block.saturation_fraction(),
        switching_decisions: plan.decisions,
        switching_seed_bits: plan.seed_bits,
    };
    let report = RunReport {
        config_sha256: sha256_hex(cfg.to_toml().as_bytes()),
        electronic_fraction: budget.electronic_fraction(),
        lo_fraction: budget.lo_fraction(),
        insecure_fraction: insecure,
        samples,
        budget,
        entropy,
        extraction,
        rate,
        battery,
    };
    Ok(RunOutcome { report, bits, block })
}

/// Writes the bits, their sidecar, the report, the battery table and the
/// effective config into `dir`; the sample block only if asked.
pub fn write_outputs(cfg: &RunConfig, outcome: &RunOutcome, dir: &Path, save_block: bool) -> Result<(), Abort> {
    std::fs::create_dir_all(dir)?;
    let x = &outcome.report.extraction;
    write_bits(
        &dir.join(BITS_FILE),
        &outcome.bits,
        BitFileMeta {
            extractor: Some(x.extractor.clone()),
            n_in: Some(x.n_in),
            m_out: Some(x.m_out),
            seed_sha256: Some(x.seed_sha256.clone()),
            epsilon_smooth: Some(x.epsilon_smooth),
            epsilon_hash: Some(x.epsilon_hash),
            ..BitFileMeta::default()
        },
    )?;
    std::fs::write(dir.join(REPORT_FILE), outcome.report.to_toml())?;
    std::fs::write(dir.join(CONFIG_FILE), cfg.to_toml())?;
    if let Some(b) = &outcome.report.battery {
        std::fs::write(dir.join(BATTERY_FILE), b.to_csv())?;
    }
    if save_block {
        cvqrng_core::blockfile::save(&outcome.block, &dir.join(BLOCK_FILE))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.size.n_total = 300_000;
        cfg.size.calibration_samples = 20_000;
        cfg.extraction.block_samples = 50_000;
        cfg.battery.enabled = false;
        cfg
    }

    #[test]
    fn honest_run_yields_capped_entropy() {
        let cfg = small();
        let out = run_protocol(&cfg).unwrap();
        let r = &out.report;
        assert!((r.entropy.h_extractable - 3.28).abs() < 1e-12);
        assert!(r.entropy.h_low_smooth > 3.28);
        assert_eq!(r.extraction.blocks, r.samples.n_data / 50_000);
        assert_eq!(out.bits.len(), r.extraction.blocks * r.extraction.m_out);
        assert!(r.insecure_fraction.is_none());
        assert!(r.lo_fraction < 1e-6);
    }

    #[test]
    fn cap_without_target_is_bit_depth() {
        let mut cfg = small();
        cfg.extraction.effective_entropy = None;
        assert_eq!(extractable_cap(&cfg), 6.0);
        cfg.extraction.effective_bits = 3;
        assert_eq!(extractable_cap(&cfg), 3.0);
    }

    #[test]
    fn monitor_rejects_leaky_lo() {
        let mut cfg = small();
        cfg.lo.splitter_r = 0.212;
        cfg.lo.splitter_t = 0.789;
        cfg.lo.excess_noise_db = 3.0;
        let b = calibrate(&cfg).unwrap();
        assert!(matches!(check_lo_monitor(&cfg, &b), Err(Abort::LoMonitor { .. })));
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqrng::protocol::{self, RunReport};
use cvqrng::{figures, Abort, RunConfig};
use cvqrng_core::{EntropyReport, NoiseBudget, SlotKind};
use cvqrng_extract::bitfile::{read_bits, write_bits, BitFileMeta};

#[derive(Parser)]
#[command(name = "cvqrng", version, about = "Continuous-variable quantum random number generator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set lo.monitor=false`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Abort> {
        RunConfig::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Full chain: simulate, calibrate, certify, extract, test.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        /// Also write the digitized sample block.
        #[arg(long)]
        save_block: bool,
    },
    /// Simulate the switched measurement and write a sample block.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Record calibration traces and write the noise budget.
    Calibrate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Certify a sample block and write the entropy report.
    Certify {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        block: PathBuf,
        /// Noise budget from `calibrate`; without it the grid is taken as
        /// already normalized to shot noise.
        #[arg(long)]
        budget: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Hash the data samples of a block into output bits.
    Extract {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        block: PathBuf,
        #[arg(long)]
        entropy: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run the statistical battery on a bit file.
    Test {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        bits: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print a run report.
    Report {
        report: PathBuf,
    },
    /// Write the entropy-curve and noise-spectrum tables.
    Curves {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, default_value = "figures")]
        out: PathBuf,
    },
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Abort> {
    let text = std::fs::read_to_string(path).map_err(|e| Abort::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Abort::Config(format!("{}: {e}", path.display())))
}

fn write_toml<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Abort> {
    let text = toml::to_string(value).map_err(|e| Abort::Other(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Abort::Io(format!("{}: {e}", path.display())))
}

fn load_block(path: &Path) -> Result<cvqrng_core::SampleBlock, Abort> {
    cvqrng_core::blockfile::load(path).map_err(|e| match e {
        cvqrng_core::Error::Format(_) => Abort::Config(format!("{}: {e}", path.display())),
        e => Abort::from(e),
    })
}

fn run(cmd: Cmd) -> Result<(), Abort> {
    match cmd {
        Cmd::Run { cfg, out, save_block } => {
            let cfg = cfg.load()?;
            let outcome = protocol::run_protocol(&cfg)?;
            protocol::write_outputs(&cfg, &outcome, &out, save_block)?;
            print!("{}", outcome.report.summary());
            println!("wrote {}", out.display());
        }
        Cmd::Simulate { cfg, out } => {
            let cfg = cfg.load()?;
            let (block, plan) = protocol::simulate(&cfg)?;
            cvqrng_core::blockfile::save(&block, &out)?;
            println!(
                "{} samples: data {}, check {}, electronic {}; {} saturated; {:.1} switching bits",
                block.len(),
                block.count(SlotKind::Data),
                block.count(SlotKind::Check),
                block.count(SlotKind::ElectronicNoise),
                block.saturated_count(),
                plan.seed_bits
            );
        }
        Cmd::Calibrate { cfg, out } => {
            let cfg = cfg.load()?;
            let budget = protocol::calibrate(&cfg)?;
            write_toml(&out, &budget)?;
            println!(
                "shot noise {:.5}, electronic {:.3}%, LO {:.3e}%",
                budget.var_snl(),
                100.0 * budget.electronic_fraction(),
                100.0 * budget.lo_fraction()
            );
        }
        Cmd::Certify { cfg, block, budget, out } => {
            let cfg = cfg.load()?;
            let block = load_block(&block)?;
            let budget: Option<NoiseBudget> = budget.as_deref().map(read_toml).transpose()?;
            if let Some(b) = &budget {
                protocol::check_lo_monitor(&cfg, b)?;
            }
            let report = protocol::certify_block(&cfg, &block, budget.as_ref())?;
            write_toml(&out, &report)?;
            println!(
                "H_max {:.4}, H_low {:.4}, extractable {:.4} bits/sample",
                report.h_max, report.h_low_smooth, report.h_extractable
            );
        }
        Cmd::Extract { cfg, block, entropy, out } => {
            let cfg = cfg.load()?;
            let block = load_block(&block)?;
            let report: EntropyReport = read_toml(&entropy)?;
            let (bits, x) = protocol::extract_block(&cfg, &block, &report)?;
            write_bits(
                &out,
                &bits,
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
            println!("{} block(s), {} bits, sha256 {}", x.blocks, x.output_bits, x.sha256);
        }
        Cmd::Test { cfg, bits, csv } => {
            let cfg = cfg.load()?;
            let (bits, _) = read_bits(&bits)?;
            let report = cvqrng_stattests::run_battery(&bits, &cfg.battery.config)
                .map_err(|e| Abort::Config(e.to_string()))?;
            if let Some(p) = csv {
                std::fs::write(&p, report.to_csv())?;
            }
            print!("{}", report.summary());
            if !report.all_passed() {
                return Err(Abort::Other("battery failed".into()));
            }
        }
        Cmd::Report { report } => {
            let r: RunReport = read_toml(&report)?;
            print!("{}", r.summary());
        }
        Cmd::Curves { cfg, out } => {
            let cfg = cfg.load()?;
            for p in figures::emit_figures(&cfg, &out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvqrng: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

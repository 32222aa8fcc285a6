use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fsd_bench::audit::{self, run_llr_audit};
use fsd_bench::config::{Detector, QrdMode, SimConfig};
use fsd_bench::report::run_schedule_report;
use fsd_bench::sweep::{check_ber_monotonicity, run_sweep};

/// Monte Carlo bench for the soft-output fixed-complexity sphere decoder.
///
/// SNR is E_s/N_0 per receive antenna in dB with the unnormalized 16-QAM
/// symbol energy (10 per complex symbol); BER figures are uncoded. The
/// fsd-fx detector pre-scales (R, y_zf) by 0.5 before quantizing to the
/// 12-bit Q5.7 datapath format.
#[derive(Parser)]
#[command(name = "fsd-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a BER/list-statistics sweep over SNR points and emit CSV.
    Sweep(SweepArgs),
    /// Print the cycle-by-cycle task schedule and throughput figures.
    Schedule(ScheduleArgs),
    /// Compare list LLRs against the exhaustive max-log reference.
    LlrAudit(AuditArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Declarative TOML config; explicit flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR points in dB, comma separated.
    #[arg(long, value_delimiter = ',')]
    snr: Vec<f64>,
    /// Frames (transmit vectors) per SNR point.
    #[arg(long)]
    frames: Option<u64>,
    /// Master seed; every output is a pure function of (config, seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Detectors to run, comma separated: fsd, see-sd, exhaustive, fsd-fx.
    #[arg(long, value_delimiter = ',')]
    detector: Vec<Detector>,
    /// QR preprocessing: plain or sorted.
    #[arg(long)]
    qrd: Option<QrdMode>,
    /// Node distribution, level 0 first, comma separated.
    #[arg(long, value_delimiter = ',')]
    dist: Vec<usize>,
    /// Nodes per cycle of the architecture model (4 or 8).
    #[arg(long)]
    parallelism: Option<u8>,
    /// Binary-point position of the 12-bit datapath words.
    #[arg(long)]
    frac_bits: Option<u8>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn into_config(self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_toml_file(path)?,
            None => SimConfig::default(),
        };
        if !self.snr.is_empty() {
            cfg.snr_db = self.snr;
        }
        if let Some(frames) = self.frames {
            cfg.frames = frames;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if !self.detector.is_empty() {
            cfg.detectors = self.detector;
        }
        if let Some(qrd) = self.qrd {
            cfg.qrd = qrd;
        }
        if !self.dist.is_empty() {
            cfg.dist = self.dist;
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p;
        }
        if let Some(f) = self.frac_bits {
            cfg.frac_bits = f;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Nodes per cycle (4 or 8).
    #[arg(long, default_value_t = 4)]
    parallelism: u8,
    /// Node distribution, level 0 first.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 1, 1, 1, 1, 1, 4, 4])]
    dist: Vec<usize>,
    /// Clock frequency in MHz.
    #[arg(long, default_value_t = 400.0)]
    clock_mhz: f64,
    /// Write the cycle trace (`cycle,d,b,de` lines) to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Audit the full lattice as the list (deviations must be zero).
    #[arg(long)]
    full_list: bool,
    /// LLR clamp magnitude.
    #[arg(long, default_value_t = audit::default_l_max())]
    l_max: f64,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Sweep(args) => {
            let cfg = args.common.into_config()?;
            let out = run_sweep(&cfg)?;
            print!("{}", out.csv);
            if let Some(path) = &cfg.out {
                eprintln!("wrote {}", path.display());
            }
            check_ber_monotonicity(&out.rows)?;
        }
        Cmd::Schedule(args) => {
            let dist = fsd_sim::fsd::NodeDistribution::new(args.dist, 4)
                .map_err(anyhow::Error::from)?;
            let rep = run_schedule_report(&dist, args.parallelism, args.clock_mhz * 1e6)?;
            print!("{}", rep.text);
            if let Some(path) = &args.out {
                std::fs::write(&path, &rep.trace)
                    .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Cmd::LlrAudit(args) => {
            let cfg = args.common.into_config()?;
            let out = run_llr_audit(&cfg, args.full_list, args.l_max)?;
            if cfg.out.is_none() {
                print!("{}", out.csv);
            } else {
                eprintln!("wrote {}", cfg.out.as_ref().unwrap().display());
            }
            eprint!("{}", audit::summary_lines(&out, args.l_max));
        }
    }
    Ok(())
}

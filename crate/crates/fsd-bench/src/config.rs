//! Run configuration: CLI-mirrored fields, TOML loading, validation and the
//! config hash stamped into every output file.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use fsd_sim::fsd::NodeDistribution;
use fsd_sim::mimo::Constellation;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    /// Fixed-complexity search, floating point.
    Fsd,
    /// Depth-first sphere decoder (exact ML, variable complexity).
    SeeSd,
    /// Full-lattice ML enumeration.
    Exhaustive,
    /// Fixed-complexity search on the cycle-accurate fixed-point datapath.
    FsdFx,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detector::Fsd => write!(f, "fsd"),
            Detector::SeeSd => write!(f, "see-sd"),
            Detector::Exhaustive => write!(f, "exhaustive"),
            Detector::FsdFx => write!(f, "fsd-fx"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum QrdMode {
    Plain,
    Sorted,
}

impl fmt::Display for QrdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QrdMode::Plain => write!(f, "plain"),
            QrdMode::Sorted => write!(f, "sorted"),
        }
    }
}

/// Everything one Monte Carlo run depends on. SNR is E_s/N_0 per receive
/// antenna in dB, with the unnormalized 16-QAM symbol energy (10 per complex
/// symbol).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_antennas")]
    pub n_t: usize,
    #[serde(default = "default_antennas")]
    pub n_r: usize,
    /// Bits per complex symbol (M); only 16-QAM (M = 4) is wired up.
    #[serde(default = "default_modulation")]
    pub modulation_order: usize,
    /// Node distribution, level 0 first.
    #[serde(default = "default_dist")]
    pub dist: Vec<usize>,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<Detector>,
    #[serde(default = "default_qrd")]
    pub qrd: QrdMode,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_frames")]
    pub frames: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_frac_bits")]
    pub frac_bits: u8,
    /// Nodes per cycle of the architecture model (4 or 8).
    #[serde(default = "default_parallelism")]
    pub parallelism: u8,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_antennas() -> usize {
    4
}
fn default_modulation() -> usize {
    4
}
fn default_dist() -> Vec<usize> {
    vec![1, 1, 1, 1, 1, 1, 4, 4]
}
fn default_detectors() -> Vec<Detector> {
    vec![Detector::Fsd]
}
fn default_qrd() -> QrdMode {
    QrdMode::Sorted
}
fn default_snr() -> Vec<f64> {
    vec![6.0, 10.0, 14.0, 18.0]
}
fn default_frames() -> u64 {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_frac_bits() -> u8 {
    fsd_sim::arch::DEFAULT_FRAC_BITS
}
fn default_parallelism() -> u8 {
    4
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_t: default_antennas(),
            n_r: default_antennas(),
            modulation_order: default_modulation(),
            dist: default_dist(),
            detectors: default_detectors(),
            qrd: default_qrd(),
            snr_db: default_snr(),
            frames: default_frames(),
            seed: default_seed(),
            frac_bits: default_frac_bits(),
            parallelism: default_parallelism(),
            out: None,
        }
    }
}

impl SimConfig {
    pub fn from_toml_file(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: SimConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::qam16()
    }

    pub fn node_distribution(&self) -> Result<NodeDistribution> {
        let c = self.constellation();
        Ok(NodeDistribution::new(self.dist.clone(), c.branches())?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modulation_order != 4 {
            bail!("only 16-QAM (modulation_order = 4) is supported");
        }
        if self.n_t < 1 || self.n_r < self.n_t {
            bail!("need n_r >= n_t >= 1, got n_t={} n_r={}", self.n_t, self.n_r);
        }
        if self.frames < 1 {
            bail!("frames must be >= 1");
        }
        if self.snr_db.is_empty() {
            bail!("SNR list must not be empty");
        }
        if self.detectors.is_empty() {
            bail!("at least one detector must be selected");
        }
        if self.dist.len() != 2 * self.n_t {
            bail!(
                "node distribution must cover {} levels, got {}",
                2 * self.n_t,
                self.dist.len()
            );
        }
        self.node_distribution()?;
        if self.detectors.contains(&Detector::FsdFx) {
            // the architecture model only exists for the reference setup
            fsd_sim::arch::build_schedule(&self.node_distribution()?, self.parallelism)?;
        }
        let points = (self.constellation().branches() as u64)
            .checked_pow(2 * self.n_t as u32)
            .unwrap_or(u64::MAX);
        if self.needs_exhaustive() && points > fsd_sim::oracle::EXHAUSTIVE_LIMIT {
            bail!(
                "{} lattice points exceed the exhaustive-search limit of {}",
                points,
                fsd_sim::oracle::EXHAUSTIVE_LIMIT
            );
        }
        Ok(())
    }

    fn needs_exhaustive(&self) -> bool {
        self.detectors.contains(&Detector::Exhaustive)
    }

    /// Noise variance per real dimension for an SNR (E_s/N_0 per receive
    /// antenna) in dB.
    pub fn sigma2_for(&self, snr_db: f64) -> f64 {
        let c = self.constellation();
        let mean_sq: f64 =
            c.alphabet().iter().map(|a| a * a).sum::<f64>() / c.alphabet().len() as f64;
        let es_per_rx = self.n_t as f64 * 2.0 * mean_sq; // unit-variance channel entries
        let n0 = es_per_rx / 10f64.powf(snr_db / 10.0);
        n0 / 2.0
    }

    /// Bits carried by one transmit vector.
    pub fn bits_per_frame(&self) -> u64 {
        (self.modulation_order * self.n_t) as u64
    }

    /// FNV-1a over the canonical field rendering; stamped into output files.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "n_t={};n_r={};m={};dist={:?};detectors={};qrd={};snr={:?};frames={};seed={};frac_bits={};parallelism={}",
            self.n_t,
            self.n_r,
            self.modulation_order,
            self.dist,
            self.detectors
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("+"),
            self.qrd,
            self.snr_db,
            self.frames,
            self.seed,
            self.frac_bits,
            self.parallelism,
        );
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

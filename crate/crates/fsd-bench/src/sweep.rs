//! Monte Carlo SNR sweep: paired-noise frame simulation across detectors,
//! BER/list statistics and deterministic CSV emission.

use anyhow::{bail, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fsd_sim::arch;
use fsd_sim::fsd::{self, NodeDistribution};
use fsd_sim::mimo::{self, Constellation};
use fsd_sim::oracle;
use fsd_sim::qrd::{self, unpermute, zf_transform};

use crate::config::{Detector, QrdMode, SimConfig};

/// Load scale applied to (R, y_zf) before quantizing for the fixed-point
/// datapath; keeps the Q5.7 range headroom at unit channel variance.
pub const FX_PRESCALE: f64 = 0.5;

/// Accumulated results for one (SNR, detector) cell.
#[derive(Debug, Clone)]
pub struct BerStats {
    pub snr_db: f64,
    pub detector: Detector,
    pub qrd: QrdMode,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    /// Fraction of frames whose FSD list contained the ML path (needs an
    /// ML-capable detector in the same run).
    pub ml_in_list_rate: Option<f64>,
    pub mean_visited_nodes: f64,
    /// Fixed-point vs floating-point hard-decision agreement (fsd-fx only).
    pub fx_agree_rate: Option<f64>,
    /// Mean |list LLR - exhaustive LLR|; filled by the LLR audit, not the
    /// sweep.
    pub llr_mad: Option<f64>,
}

impl BerStats {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }
}

pub struct SweepOutput {
    pub rows: Vec<BerStats>,
    pub csv: String,
}

/// Deterministic per-frame RNG stream derived from the master seed.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut state = seed ^ frame.wrapping_mul(0xA24B_AED4_963E_E407);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameCell {
    bit_errors: u32,
    visited: u64,
    ml_in_list: Option<bool>,
    fx_agree: Option<bool>,
}

/// One frame across all SNR points. The noise RNG is cloned per SNR point so
/// every point sees the same underlying normal draws, scaled to its own
/// variance; detectors see identical realizations by construction.
fn run_frame(cfg: &SimConfig, dist: &NodeDistribution, frame_idx: u64) -> Vec<Vec<FrameCell>> {
    let c = cfg.constellation();
    let mut rng = frame_rng(cfg.seed, frame_idx);
    let bits: Vec<u8> = (0..cfg.bits_per_frame())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let ch = mimo::generate_channel_with(&mut rng, cfg.n_t, cfg.n_r);
    let frame = mimo::map_bits(&bits, &c, cfg.n_t).expect("frame mapping");
    let noise_rng = rng;

    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let sigma2 = cfg.sigma2_for(snr);
        let y = mimo::apply_channel(&ch, &frame, sigma2, &mut noise_rng.clone())
            .expect("channel application");
        let rs = mimo::realify(&ch, &y, sigma2);
        let q = match cfg.qrd {
            QrdMode::Plain => qrd::qr_decompose(&rs.h),
            QrdMode::Sorted => qrd::sorted_qr_decompose(&rs.h),
        }
        .expect("full-rank channel");
        let y_zf = zf_transform(&q, &rs.y).expect("zf transform");
        out.push(run_detectors(cfg, dist, &c, &q, &y_zf, &bits));
    }
    out
}

fn run_detectors(
    cfg: &SimConfig,
    dist: &NodeDistribution,
    c: &Constellation,
    q: &qrd::QrdResult,
    y_zf: &DVector<f64>,
    tx_bits: &[u8],
) -> Vec<FrameCell> {
    let needs_float_fsd = cfg
        .detectors
        .iter()
        .any(|d| matches!(d, Detector::Fsd | Detector::FsdFx));
    let float_list = needs_float_fsd.then(|| {
        fsd::fsd_search(&q.r, y_zf, dist, c).expect("fsd search")
    });
    let float_fsd_bits = float_list
        .as_ref()
        .map(|l| fsd::hard_decision(l, &q.perm, c).expect("nonempty list"));

    // the ML path serves both the ML rows and the FSD list-quality metric
    let mut ml_path: Option<Vec<f64>> = None;
    let mut see_sd_visited = 0u64;
    if cfg.detectors.contains(&Detector::SeeSd) {
        let sd = oracle::see_sd(&q.r, y_zf, c).expect("see-sd");
        see_sd_visited = sd.visited_nodes;
        ml_path = Some(sd.solution.path);
    }
    let mut exhaustive_path: Option<Vec<f64>> = None;
    if cfg.detectors.contains(&Detector::Exhaustive) {
        let (ml, _) = oracle::exhaustive_ml(&q.r, y_zf, c).expect("exhaustive ml");
        if ml_path.is_none() {
            ml_path = Some(ml.path.clone());
        }
        exhaustive_path = Some(ml.path);
    }

    cfg.detectors
        .iter()
        .map(|det| {
            let mut cell = FrameCell::default();
            let detected: Vec<u8> = match det {
                Detector::Fsd => {
                    let list = float_list.as_ref().unwrap();
                    cell.visited = dist.visited_nodes() as u64;
                    if let Some(ml) = &ml_path {
                        cell.ml_in_list =
                            Some(list.candidates.iter().any(|cand| &cand.path == ml));
                    }
                    float_fsd_bits.clone().unwrap()
                }
                Detector::SeeSd => {
                    cell.visited = see_sd_visited;
                    let path = ml_path.as_ref().unwrap();
                    mimo::demap_real(&unpermute(path, &q.perm), c)
                }
                Detector::Exhaustive => {
                    cell.visited = (c.branches() as u64).pow(2 * cfg.n_t as u32);
                    let path = exhaustive_path.as_ref().unwrap();
                    mimo::demap_real(&unpermute(path, &q.perm), c)
                }
                Detector::FsdFx => {
                    let r_fx: DMatrix<f64> = &q.r * FX_PRESCALE;
                    let y_fx: DVector<f64> = y_zf * FX_PRESCALE;
                    let sim =
                        arch::simulate(&r_fx, &y_fx, dist, cfg.parallelism, cfg.frac_bits)
                            .expect("architecture simulation");
                    cell.visited = sim.stats.visited_nodes as u64;
                    let bits =
                        mimo::demap_real(&unpermute(&sim.best().path_values(), &q.perm), c);
                    cell.fx_agree = Some(&bits == float_fsd_bits.as_ref().unwrap());
                    bits
                }
            };
            cell.bit_errors = detected
                .iter()
                .zip(tx_bits)
                .filter(|(a, b)| a != b)
                .count() as u32;
            cell
        })
        .collect()
}

/// Run the whole sweep. Frames are independent work items simulated in
/// parallel and reduced in frame order, so the output is a pure function of
/// the configuration.
pub fn run_sweep(cfg: &SimConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let dist = cfg.node_distribution()?;

    let per_frame: Vec<Vec<Vec<FrameCell>>> = (0..cfg.frames)
        .into_par_iter()
        .map(|f| run_frame(cfg, &dist, f))
        .collect();

    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        for (di, &det) in cfg.detectors.iter().enumerate() {
            let mut bit_errors = 0u64;
            let mut visited = 0u64;
            let mut ml_hits = 0u64;
            let mut ml_frames = 0u64;
            let mut fx_hits = 0u64;
            let mut fx_frames = 0u64;
            for frame in &per_frame {
                let cell = &frame[si][di];
                bit_errors += u64::from(cell.bit_errors);
                visited += cell.visited;
                if let Some(hit) = cell.ml_in_list {
                    ml_frames += 1;
                    ml_hits += u64::from(hit);
                }
                if let Some(agree) = cell.fx_agree {
                    fx_frames += 1;
                    fx_hits += u64::from(agree);
                }
            }
            let bits = cfg.frames * cfg.bits_per_frame();
            rows.push(BerStats {
                snr_db: snr,
                detector: det,
                qrd: cfg.qrd,
                frames: cfg.frames,
                bits,
                bit_errors,
                ml_in_list_rate: (ml_frames > 0).then(|| ml_hits as f64 / ml_frames as f64),
                mean_visited_nodes: visited as f64 / cfg.frames as f64,
                fx_agree_rate: (fx_frames > 0).then(|| fx_hits as f64 / fx_frames as f64),
                llr_mad: None,
            });
        }
    }

    let csv = render_csv(cfg, &rows);
    if let Some(path) = &cfg.out {
        std::fs::write(path, &csv)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    }
    Ok(SweepOutput { rows, csv })
}

fn fmt_opt_rate(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "nan".to_string(),
    }
}

fn render_csv(cfg: &SimConfig, rows: &[BerStats]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# config_hash={}\n", cfg.hash()));
    out.push_str(
        "snr_db,detector,qrd,frames,bits,bit_errors,ber,ml_in_list_rate,mean_visited_nodes,fx_agree_rate,seed\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.8e},{},{:.3},{},{}\n",
            r.snr_db,
            r.detector,
            r.qrd,
            r.frames,
            r.bits,
            r.bit_errors,
            r.ber(),
            fmt_opt_rate(r.ml_in_list_rate),
            r.mean_visited_nodes,
            fmt_opt_rate(r.fx_agree_rate),
            cfg.seed,
        ));
    }
    out
}

/// BER must be non-increasing in SNR for every detector, beyond twice the
/// binomial standard error. Only enforced at or above 10^5 bits per point;
/// below that the estimate is too noisy to police.
pub fn check_ber_monotonicity(rows: &[BerStats]) -> Result<()> {
    let mut by_detector: Vec<(Detector, Vec<&BerStats>)> = Vec::new();
    for row in rows {
        match by_detector.iter_mut().find(|(d, _)| *d == row.detector) {
            Some((_, v)) => v.push(row),
            None => by_detector.push((row.detector, vec![row])),
        }
    }
    for (det, mut points) in by_detector {
        points.sort_by(|a, b| a.snr_db.partial_cmp(&b.snr_db).unwrap());
        for pair in points.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if lo.bits < 100_000 || hi.bits < 100_000 {
                continue;
            }
            let (p0, p1) = (lo.ber(), hi.ber());
            let sigma = (p0 * (1.0 - p0) / lo.bits as f64
                + p1 * (1.0 - p1) / hi.bits as f64)
                .sqrt();
            if p1 > p0 + 2.0 * sigma {
                bail!(
                    "BER of {det} rose from {p0:.3e} at {} dB to {p1:.3e} at {} dB \
                     (beyond 2 sigma = {:.3e})",
                    lo.snr_db,
                    hi.snr_db,
                    2.0 * sigma
                );
            }
        }
    }
    Ok(())
}

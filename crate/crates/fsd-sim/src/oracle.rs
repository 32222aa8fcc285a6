//! Ground-truth detectors: exhaustive ML search, depth-first sphere decoding
//! with Schnorr-Euchner enumeration and radius pruning, exact top-K list
//! search, and the full-lattice max-log LLR reference.
//!
//! Everything here trades speed for being an oracle. Exhaustive operations
//! refuse lattices above [`EXHAUSTIVE_LIMIT`] points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};

use crate::fsd::{accumulate_ped, compute_b, Candidate, CandidateList};
use crate::llr::LlrVector;
use crate::mimo::{demap_real, Constellation};
use crate::qrd::unpermute;
use crate::{Error, Result};

/// Hard cap on exhaustively enumerated lattice points (2^20).
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// Global minimizer of ||y_zf - R s||^2 over the full lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MlSolution {
    pub path: Vec<f64>,
    pub ped: f64,
}

/// SEE-SD outcome: the ML solution plus the number of nodes whose PED was
/// evaluated (variable, SNR-dependent).
#[derive(Debug, Clone, PartialEq)]
pub struct SeeSdResult {
    pub solution: MlSolution,
    pub visited_nodes: u64,
}

fn lattice_points(c: &Constellation, levels: usize) -> Result<u64> {
    let points = (c.branches() as u64)
        .checked_pow(levels as u32)
        .unwrap_or(u64::MAX);
    if points > EXHAUSTIVE_LIMIT {
        return Err(Error::LatticeTooLarge {
            points,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    Ok(points)
}

fn check_system(r: &DMatrix<f64>, y_zf: &DVector<f64>) -> Result<usize> {
    let n = r.ncols();
    if r.nrows() != n || y_zf.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "R is {}x{}, y_zf has {} entries",
            r.nrows(),
            r.ncols(),
            y_zf.len()
        )));
    }
    Ok(n)
}

/// Exhaustive ML search with a leaf counter. Enumeration descends from the
/// top level with the alphabet in ascending order and keeps the first strict
/// minimum, so ties resolve to the lexicographically smallest path read from
/// the top level down.
pub fn exhaustive_ml(
    r: &DMatrix<f64>,
    y_zf: &DVector<f64>,
    c: &Constellation,
) -> Result<(MlSolution, u64)> {
    let n = check_system(r, y_zf)?;
    lattice_points(c, n)?;

    struct Search<'a> {
        r: &'a DMatrix<f64>,
        y_zf: &'a DVector<f64>,
        alphabet: &'a [f64],
        path: Vec<f64>,
        best_path: Vec<f64>,
        best_ped: f64,
        leaves: u64,
    }

    impl Search<'_> {
        fn descend(&mut self, level: usize, d_prev: f64) {
            let b = compute_b(self.r, self.y_zf, &self.path, level);
            let r_ii = self.r[(level, level)];
            for i in 0..self.alphabet.len() {
                let s = self.alphabet[i];
                let d = accumulate_ped(d_prev, b, r_ii, s);
                self.path[level] = s;
                if level == 0 {
                    self.leaves += 1;
                    if d < self.best_ped {
                        self.best_ped = d;
                        self.best_path.copy_from_slice(&self.path);
                    }
                } else {
                    self.descend(level - 1, d);
                }
            }
        }
    }

    let mut search = Search {
        r,
        y_zf,
        alphabet: c.alphabet(),
        path: vec![0.0; n],
        best_path: vec![0.0; n],
        best_ped: f64::INFINITY,
        leaves: 0,
    };
    search.descend(n - 1, 0.0);
    Ok((
        MlSolution {
            path: search.best_path,
            ped: search.best_ped,
        },
        search.leaves,
    ))
}

/// Depth-first sphere decoder with Schnorr-Euchner child ordering and radius
/// updates at each improving leaf. Exact ML; the node count is whatever the
/// pruning leaves over.
pub fn see_sd(r: &DMatrix<f64>, y_zf: &DVector<f64>, c: &Constellation) -> Result<SeeSdResult> {
    let n = check_system(r, y_zf)?;

    struct Search<'a> {
        r: &'a DMatrix<f64>,
        y_zf: &'a DVector<f64>,
        alphabet: &'a [f64],
        path: Vec<f64>,
        best_path: Vec<f64>,
        radius: f64,
        visited: u64,
    }

    impl Search<'_> {
        fn descend(&mut self, level: usize, d_prev: f64) {
            let b = compute_b(self.r, self.y_zf, &self.path, level);
            let r_ii = self.r[(level, level)];
            // children ordered by |e| ascending, ties toward the smaller value
            let mut order: Vec<(f64, f64)> = self
                .alphabet
                .iter()
                .map(|&s| ((b - r_ii * s).abs(), s))
                .collect();
            order.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (_, s) in order {
                let d = accumulate_ped(d_prev, b, r_ii, s);
                self.visited += 1;
                if d >= self.radius {
                    // later siblings only get farther in the SEE order
                    break;
                }
                self.path[level] = s;
                if level == 0 {
                    self.radius = d;
                    self.best_path.copy_from_slice(&self.path);
                } else {
                    self.descend(level - 1, d);
                }
            }
        }
    }

    let mut search = Search {
        r,
        y_zf,
        alphabet: c.alphabet(),
        path: vec![0.0; n],
        best_path: vec![0.0; n],
        radius: f64::INFINITY,
        visited: 0,
    };
    search.descend(n - 1, 0.0);
    Ok(SeeSdResult {
        solution: MlSolution {
            path: search.best_path,
            ped: search.radius,
        },
        visited_nodes: search.visited,
    })
}

struct HeapEntry {
    ped: f64,
    path: Vec<f64>,
    level_peds: Vec<f64>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // peds are finite by construction
        self.ped
            .partial_cmp(&other.ped)
            .unwrap()
            .then_with(|| cmp_path(&self.path, &other.path))
    }
}

fn cmp_path(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y).unwrap() {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Exact top-K list: the K smallest-PED lattice points, found depth-first
/// with the radius held at the current K-th best once the list is full.
/// Candidates are returned sorted by (ped, path).
pub fn see_lsd(
    r: &DMatrix<f64>,
    y_zf: &DVector<f64>,
    k: usize,
    c: &Constellation,
) -> Result<CandidateList> {
    let n = check_system(r, y_zf)?;
    let points = lattice_points(c, n)?;
    if k == 0 || k as u64 > points {
        return Err(Error::InvalidParameter(format!(
            "list size {k} out of range for a lattice of {points} points"
        )));
    }

    struct Search<'a> {
        r: &'a DMatrix<f64>,
        y_zf: &'a DVector<f64>,
        alphabet: &'a [f64],
        k: usize,
        path: Vec<f64>,
        level_peds: Vec<f64>,
        heap: BinaryHeap<HeapEntry>,
    }

    impl Search<'_> {
        fn radius(&self) -> f64 {
            if self.heap.len() < self.k {
                f64::INFINITY
            } else {
                self.heap.peek().unwrap().ped
            }
        }

        fn descend(&mut self, level: usize, d_prev: f64) {
            let b = compute_b(self.r, self.y_zf, &self.path, level);
            let r_ii = self.r[(level, level)];
            let mut order: Vec<(f64, f64)> = self
                .alphabet
                .iter()
                .map(|&s| ((b - r_ii * s).abs(), s))
                .collect();
            order.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (_, s) in order {
                let d = accumulate_ped(d_prev, b, r_ii, s);
                if d >= self.radius() {
                    break;
                }
                self.path[level] = s;
                self.level_peds[level] = d;
                if level == 0 {
                    if self.heap.len() == self.k {
                        self.heap.pop();
                    }
                    self.heap.push(HeapEntry {
                        ped: d,
                        path: self.path.clone(),
                        level_peds: self.level_peds.clone(),
                    });
                } else {
                    self.descend(level - 1, d);
                }
            }
        }
    }

    let mut search = Search {
        r,
        y_zf,
        alphabet: c.alphabet(),
        k,
        path: vec![0.0; n],
        level_peds: vec![0.0; n],
        heap: BinaryHeap::new(),
    };
    search.descend(n - 1, 0.0);

    let mut entries = search.heap.into_vec();
    entries.sort();
    Ok(CandidateList {
        candidates: entries
            .into_iter()
            .map(|e| Candidate {
                path: e.path,
                ped: e.ped,
                level_peds: e.level_peds,
            })
            .collect(),
    })
}

/// Max-log LLRs evaluated over the entire lattice: for every bit, the
/// difference of the two hypothesis-set maxima of
/// `-||y_zf - R s||^2 / sigma2 + x_[k]' L_A,[k]`, halved. The bit-to-sign map
/// is 0 -> -1, 1 -> +1; positive LLR favors bit 1. Magnitudes clamp at
/// `l_max` like the list-based generator so the two stay comparable.
pub fn exhaustive_maxlog_llr(
    r: &DMatrix<f64>,
    y_zf: &DVector<f64>,
    perm: &[usize],
    sigma2: f64,
    l_a: &[f64],
    c: &Constellation,
    l_max: f64,
) -> Result<LlrVector> {
    let n = check_system(r, y_zf)?;
    lattice_points(c, n)?;
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateNoise);
    }
    let n_bits = n * c.bits_per_dim();
    if l_a.len() != n_bits {
        return Err(Error::InputShape(format!(
            "prior vector has {} entries, expected {}",
            l_a.len(),
            n_bits
        )));
    }

    struct Search<'a> {
        r: &'a DMatrix<f64>,
        y_zf: &'a DVector<f64>,
        c: &'a Constellation,
        perm: &'a [usize],
        sigma2: f64,
        l_a: &'a [f64],
        path: Vec<f64>,
        max_pos: Vec<f64>,
        max_neg: Vec<f64>,
    }

    impl Search<'_> {
        fn descend(&mut self, level: usize, d_prev: f64) {
            let b = compute_b(self.r, self.y_zf, &self.path, level);
            let r_ii = self.r[(level, level)];
            for i in 0..self.c.branches() {
                let s = self.c.alphabet()[i];
                let d = accumulate_ped(d_prev, b, r_ii, s);
                self.path[level] = s;
                if level == 0 {
                    self.leaf(d);
                } else {
                    self.descend(level - 1, d);
                }
            }
        }

        fn leaf(&mut self, ped: f64) {
            let bits = demap_real(&unpermute(&self.path, self.perm), self.c);
            let signs: Vec<f64> = bits.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect();
            let prior_dot: f64 = signs.iter().zip(self.l_a).map(|(x, l)| x * l).sum();
            let base = -ped / self.sigma2 + prior_dot;
            for (k, &x) in signs.iter().enumerate() {
                // exclude the bit's own prior term
                let metric = base - x * self.l_a[k];
                let slot = if x > 0.0 {
                    &mut self.max_pos[k]
                } else {
                    &mut self.max_neg[k]
                };
                if metric > *slot {
                    *slot = metric;
                }
            }
        }
    }

    let mut search = Search {
        r,
        y_zf,
        c,
        perm,
        sigma2,
        l_a,
        path: vec![0.0; n],
        max_pos: vec![f64::NEG_INFINITY; n_bits],
        max_neg: vec![f64::NEG_INFINITY; n_bits],
    };
    search.descend(n - 1, 0.0);

    Ok(LlrVector::from_maxima(
        &search.max_pos,
        &search.max_neg,
        l_max,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{self, map_bits};
    use crate::qrd::{self, zf_transform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(
        rng: &mut ChaCha8Rng,
        sigma2: f64,
    ) -> (qrd::QrdResult, DVector<f64>, Vec<u8>, Vec<f64>) {
        let c = Constellation::qam16();
        let ch = mimo::generate_channel_with(rng, 4, 4);
        let bits: Vec<u8> = (0..16).map(|_| rng.random_range(0..2u8)).collect();
        let frame = map_bits(&bits, &c, 4).unwrap();
        let y = mimo::apply_channel(&ch, &frame, sigma2, rng).unwrap();
        let rs = mimo::realify(&ch, &y, sigma2);
        let q = qrd::sorted_qr_decompose(&rs.h).unwrap();
        let y_zf = zf_transform(&q, &rs.y).unwrap();
        let true_perm: Vec<f64> = q.perm.iter().map(|&p| frame.real_symbols[p]).collect();
        (q, y_zf, bits, true_perm)
    }

    #[test]
    fn exhaustive_counts_every_path() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (q, y_zf, _, _) = setup(&mut rng, 1.0);
        let (_, leaves) = exhaustive_ml(&q.r, &y_zf, &c).unwrap();
        assert_eq!(leaves, 65536); // 4^8
    }

    #[test]
    fn exhaustive_noise_free_finds_true_path() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (q, y_zf, _, true_perm) = setup(&mut rng, 0.0);
            let (ml, _) = exhaustive_ml(&q.r, &y_zf, &c).unwrap();
            assert_eq!(ml.path, true_perm);
            assert!(ml.ped < 1e-15);
        }
    }

    #[test]
    fn exhaustive_matches_hand_enumeration_on_2x2_real_system() {
        // 2 real dimensions, 16 paths: check against a literal double loop
        let c = Constellation::qam16();
        let r = DMatrix::from_row_slice(2, 2, &[1.2, -0.4, 0.0, 0.8]);
        let y_zf = DVector::from_vec(vec![0.9, -2.6]);
        let (ml, leaves) = exhaustive_ml(&r, &y_zf, &c).unwrap();
        assert_eq!(leaves, 16);
        let mut best = f64::INFINITY;
        let mut best_path = vec![];
        for &s1 in c.alphabet() {
            for &s0 in c.alphabet() {
                let e1 = y_zf[1] - r[(1, 1)] * s1;
                let e0 = y_zf[0] - r[(0, 0)] * s0 - r[(0, 1)] * s1;
                let ped = e1 * e1 + e0 * e0;
                if ped < best {
                    best = ped;
                    best_path = vec![s0, s1];
                }
            }
        }
        assert_eq!(ml.path, best_path);
        assert!((ml.ped - best).abs() < 1e-12);
    }

    #[test]
    fn see_sd_equals_exhaustive_across_snr() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sigma2 in [4.0, 0.4, 0.04] {
            for _ in 0..50 {
                let (q, y_zf, _, _) = setup(&mut rng, sigma2);
                let (ml, _) = exhaustive_ml(&q.r, &y_zf, &c).unwrap();
                let sd = see_sd(&q.r, &y_zf, &c).unwrap();
                assert_eq!(sd.solution.path, ml.path);
                assert!((sd.solution.ped - ml.ped).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn see_sd_noise_free_prunes_hard() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (q, y_zf, _, true_perm) = setup(&mut rng, 0.0);
        let sd = see_sd(&q.r, &y_zf, &c).unwrap();
        assert_eq!(sd.solution.path, true_perm);
        assert!(sd.solution.ped < 1e-15);
        // the first dive plus one pruned sibling probe per backtrack level
        assert!(
            sd.visited_nodes <= 2 * 8,
            "expected near-minimal visits, got {}",
            sd.visited_nodes
        );
    }

    #[test]
    fn see_sd_visits_more_at_low_snr() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut low = 0u64;
        let mut high = 0u64;
        for _ in 0..200 {
            let (q, y_zf, _, _) = setup(&mut rng, 4.0);
            low += see_sd(&q.r, &y_zf, &c).unwrap().visited_nodes;
            let (q, y_zf, _, _) = setup(&mut rng, 0.04);
            high += see_sd(&q.r, &y_zf, &c).unwrap().visited_nodes;
        }
        assert!(
            low > high,
            "low-SNR visits {low} should exceed high-SNR visits {high}"
        );
    }

    #[test]
    fn see_lsd_degenerate_sizes() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (q, y_zf, _, _) = setup(&mut rng, 0.5);
        // K = 1 is the ML solution
        let top1 = see_lsd(&q.r, &y_zf, 1, &c).unwrap();
        let (ml, _) = exhaustive_ml(&q.r, &y_zf, &c).unwrap();
        assert_eq!(top1.candidates[0].path, ml.path);
        // K = lattice size is the whole lattice, sorted
        let full = see_lsd(&q.r, &y_zf, 65536, &c).unwrap();
        assert_eq!(full.len(), 65536);
        for w in full.candidates.windows(2) {
            assert!(w[0].ped <= w[1].ped);
        }
        assert!(see_lsd(&q.r, &y_zf, 0, &c).is_err());
        assert!(see_lsd(&q.r, &y_zf, 65537, &c).is_err());
    }

    #[test]
    fn see_lsd_top16_matches_exhaustive_sort() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (q, y_zf, _, _) = setup(&mut rng, 1.0);
            let list = see_lsd(&q.r, &y_zf, 16, &c).unwrap();
            let full = see_lsd(&q.r, &y_zf, 65536, &c).unwrap();
            assert_eq!(list.len(), 16);
            for (a, b) in list.candidates.iter().zip(full.candidates.iter()) {
                assert_eq!(a.path, b.path);
                assert!((a.ped - b.ped).abs() < 1e-12);
            }
            // subset-minimum: max listed ped <= every excluded ped
            let max_listed = list.candidates.last().unwrap().ped;
            for excl in &full.candidates[16..] {
                assert!(max_listed <= excl.ped + 1e-12);
            }
        }
    }

    #[test]
    fn llr_rejects_degenerate_noise() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (q, y_zf, _, _) = setup(&mut rng, 0.5);
        let perm = q.perm.clone();
        let err = exhaustive_maxlog_llr(&q.r, &y_zf, &perm, 0.0, &[0.0; 16], &c, 8.0);
        assert!(matches!(err, Err(Error::DegenerateNoise)));
    }

    #[test]
    fn llr_symmetric_zero_observation() {
        // y_zf = 0, R = I: per dimension the Gray labels give LLR 0 on the
        // sign bit and (9 - 1)/(2 sigma2) on the inner bit
        let c = Constellation::qam16();
        let r = DMatrix::identity(8, 8);
        let y_zf = DVector::zeros(8);
        let perm: Vec<usize> = (0..8).collect();
        let llr =
            exhaustive_maxlog_llr(&r, &y_zf, &perm, 1.0, &[0.0; 16], &c, 1e9).unwrap();
        for t in 0..4 {
            for dim in 0..2 {
                let k = 4 * t + 2 * dim;
                assert!(llr.values[k].abs() < 1e-12, "sign bit {k}");
                assert!((llr.values[k + 1] - 4.0).abs() < 1e-12, "inner bit {k}");
            }
        }
    }

    #[test]
    fn llr_scales_inversely_with_sigma2() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (q, y_zf, _, _) = setup(&mut rng, 0.5);
        let a = exhaustive_maxlog_llr(&q.r, &y_zf, &q.perm, 0.5, &[0.0; 16], &c, 1e12).unwrap();
        let b = exhaustive_maxlog_llr(&q.r, &y_zf, &q.perm, 0.25, &[0.0; 16], &c, 1e12).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((2.0 * x - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn llr_matches_two_loop_brute_force() {
        // independent oracle: iterate all 2^16 bit vectors, map them to
        // symbols, and evaluate the metric with dense algebra
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (q, y_zf, _, _) = setup(&mut rng, 0.8);
        let sigma2 = 0.8;
        let mut l_a = vec![0.0; 16];
        for v in l_a.iter_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
        let llr =
            exhaustive_maxlog_llr(&q.r, &y_zf, &q.perm, sigma2, &l_a, &c, 1e12).unwrap();

        let mut max_pos = vec![f64::NEG_INFINITY; 16];
        let mut max_neg = vec![f64::NEG_INFINITY; 16];
        for word in 0u32..65536 {
            let bits: Vec<u8> = (0..16).map(|i| ((word >> i) & 1) as u8).collect();
            let frame = map_bits(&bits, &c, 4).unwrap();
            let path: Vec<f64> = q.perm.iter().map(|&p| frame.real_symbols[p]).collect();
            let resid = &y_zf - &q.r * DVector::from_column_slice(&path);
            let ped = resid.norm_squared();
            for k in 0..16 {
                let prior: f64 = (0..16)
                    .filter(|&j| j != k)
                    .map(|j| if bits[j] == 1 { l_a[j] } else { -l_a[j] })
                    .sum();
                let metric = -ped / sigma2 + prior;
                let slot = if bits[k] == 1 {
                    &mut max_pos[k]
                } else {
                    &mut max_neg[k]
                };
                if metric > *slot {
                    *slot = metric;
                }
            }
        }
        for k in 0..16 {
            let expected = 0.5 * (max_pos[k] - max_neg[k]);
            assert!(
                (llr.values[k] - expected).abs() < 1e-9,
                "bit {k}: {} vs {expected}",
                llr.values[k]
            );
        }
    }

    #[test]
    fn llr_sign_agrees_with_ml_hard_decision() {
        let c = Constellation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (q, y_zf, _, _) = setup(&mut rng, 0.5);
            let (ml, _) = exhaustive_ml(&q.r, &y_zf, &c).unwrap();
            let ml_bits = demap_real(&unpermute(&ml.path, &q.perm), &c);
            let llr =
                exhaustive_maxlog_llr(&q.r, &y_zf, &q.perm, 0.5, &[0.0; 16], &c, 1e12)
                    .unwrap();
            for (k, &v) in llr.values.iter().enumerate() {
                if v != 0.0 {
                    assert_eq!(ml_bits[k] == 1, v > 0.0, "bit {k}");
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_lattice() {
        let c = Constellation::qam16();
        let r = DMatrix::identity(12, 12); // 4^12 > 2^20
        let y = DVector::zeros(12);
        assert!(matches!(
            exhaustive_ml(&r, &y, &c),
            Err(Error::LatticeTooLarge { .. })
        ));
    }
}

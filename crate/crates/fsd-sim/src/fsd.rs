//! Floating-point reference of the fixed-complexity sphere decoder: fixed
//! per-level expansion counts, breadth-first PED recursion, direct
//! enumeration and the 16-candidate list.
//!
//! Levels are matrix indices: detection starts at level `2*N_t - 1` (the last
//! row of R, one unknown) and ends at level 0. A path stores its symbols
//! level-indexed, so `path[i]` is the symbol detected at level `i` of the
//! permuted system.

use nalgebra::{DMatrix, DVector};

use crate::mimo::{demap_real, Constellation};
use crate::qrd::unpermute;
use crate::{Error, Result};

/// Per-level visit counts, level 0 first. Every entry is 1 or N_b; the paper
/// configuration for a 4x4 16-QAM system is {1,1,1,1,1,1,4,4}: full expansion
/// on the two levels detected first, single-child descent below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDistribution {
    counts: Vec<usize>,
}

impl NodeDistribution {
    pub fn new(counts: Vec<usize>, n_b: usize) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("empty node distribution".into()));
        }
        for &c in &counts {
            if c != 1 && c != n_b {
                return Err(Error::InvalidParameter(format!(
                    "node distribution entries must be 1 or {n_b}, got {c}"
                )));
            }
        }
        Ok(NodeDistribution { counts })
    }

    /// The {1,1,1,1,1,1,4,4} distribution used throughout for 4x4 16-QAM.
    pub fn default_4x4_16qam() -> Self {
        NodeDistribution {
            counts: vec![1, 1, 1, 1, 1, 1, 4, 4],
        }
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    /// Children kept per surviving path at `level`.
    pub fn count_at(&self, level: usize) -> usize {
        self.counts[level]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Final list size: the product of all per-level counts.
    pub fn list_size(&self) -> usize {
        self.counts.iter().product()
    }

    /// Nodes whose PED is evaluated over one full traversal: at each level the
    /// number of surviving paths entering it times the children kept.
    pub fn visited_nodes(&self) -> usize {
        let mut paths = 1;
        let mut visited = 0;
        for level in (0..self.counts.len()).rev() {
            visited += paths * self.counts[level];
            paths *= self.counts[level];
        }
        visited
    }
}

/// A full path through the detection tree with its accumulated PED and the
/// per-level partial distances `level_peds[i] = d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub path: Vec<f64>,
    pub ped: f64,
    pub level_peds: Vec<f64>,
}

/// Ordered candidate set produced by one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub candidates: Vec<Candidate>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Minimum-PED candidate; earlier position wins ties.
    pub fn best(&self) -> Option<&Candidate> {
        let mut best: Option<&Candidate> = None;
        for c in &self.candidates {
            if best.map_or(true, |b| c.ped < b.ped) {
                best = Some(c);
            }
        }
        best
    }
}

/// Interference-cancelled observation b_i = y_zf[i] - sum_{j>i} R[i,j] s_j.
/// `path` only needs valid entries above `level`.
pub fn compute_b(r: &DMatrix<f64>, y_zf: &DVector<f64>, path: &[f64], level: usize) -> f64 {
    let n = r.ncols();
    let mut b = y_zf[level];
    for j in level + 1..n {
        b -= r[(level, j)] * path[j];
    }
    b
}

/// Child with minimum |b - R_ii * s| over the real alphabet; ties break
/// toward the smaller alphabet value.
pub fn direct_enumerate(b: f64, r_ii: f64, c: &Constellation) -> f64 {
    let mut best = c.alphabet()[0];
    let mut best_e = (b - r_ii * best).abs();
    for &s in &c.alphabet()[1..] {
        let e = (b - r_ii * s).abs();
        if e < best_e {
            best = s;
            best_e = e;
        }
    }
    best
}

/// d_i = d_{i+1} + (b_i - R_ii * s_i)^2.
pub fn accumulate_ped(d_prev: f64, b: f64, r_ii: f64, s: f64) -> f64 {
    let e = b - r_ii * s;
    d_prev + e * e
}

/// Breadth-first FSD traversal. At full-expansion levels every surviving path
/// keeps all children in alphabet order; at single-expansion levels only the
/// direct-enumeration child survives. Candidate order is the column-major
/// generation order (top-level symbol index major, second-level index minor),
/// which the architecture model reproduces slot for slot.
pub fn fsd_search(
    r: &DMatrix<f64>,
    y_zf: &DVector<f64>,
    dist: &NodeDistribution,
    c: &Constellation,
) -> Result<CandidateList> {
    let n = r.ncols();
    if dist.levels() != n {
        return Err(Error::DimensionMismatch(format!(
            "distribution covers {} levels, system has {}",
            dist.levels(),
            n
        )));
    }
    if y_zf.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y_zf has {} entries, system has {}",
            y_zf.len(),
            n
        )));
    }

    struct Partial {
        path: Vec<f64>,
        ped: f64,
        level_peds: Vec<f64>,
    }

    let mut survivors = vec![Partial {
        path: vec![0.0; n],
        ped: 0.0,
        level_peds: vec![0.0; n],
    }];

    for level in (0..n).rev() {
        let keep = dist.count_at(level);
        let mut next = Vec::with_capacity(survivors.len() * keep);
        for p in &survivors {
            let b = compute_b(r, y_zf, &p.path, level);
            let r_ii = r[(level, level)];
            if keep == 1 {
                let s = direct_enumerate(b, r_ii, c);
                next.push(extend(p, level, s, b, r_ii));
            } else {
                for &s in c.alphabet() {
                    next.push(extend(p, level, s, b, r_ii));
                }
            }
        }
        survivors = next;
    }

    fn extend(p: &Partial, level: usize, s: f64, b: f64, r_ii: f64) -> Partial {
        let mut path = p.path.clone();
        path[level] = s;
        let ped = accumulate_ped(p.ped, b, r_ii, s);
        let mut level_peds = p.level_peds.clone();
        level_peds[level] = ped;
        Partial {
            path,
            ped,
            level_peds,
        }
    }

    Ok(CandidateList {
        candidates: survivors
            .into_iter()
            .map(|p| Candidate {
                path: p.path,
                ped: p.ped,
                level_peds: p.level_peds,
            })
            .collect(),
    })
}

/// Pick the minimum-PED candidate, undo the column permutation and demap to
/// bits.
pub fn hard_decision(
    list: &CandidateList,
    perm: &[usize],
    c: &Constellation,
) -> Result<Vec<u8>> {
    let best = list.best().ok_or(Error::EmptyList)?;
    Ok(demap_real(&unpermute(&best.path, perm), c))
}

//! List-based max-log LLR generation: the bit metrics of the exhaustive rule
//! restricted to a candidate list, with clamping for the empty-hypothesis
//! gap every list-based detector has.

use crate::fsd::CandidateList;
use crate::mimo::{demap_real, Constellation};
use crate::qrd::unpermute;
use crate::{Error, Result};

/// Default clamp magnitude for extrinsic LLRs.
pub const DEFAULT_L_MAX: f64 = 8.0;

/// Per-bit extrinsic LLRs. `clamped[k]` marks entries pinned to +-l_max,
/// either because the magnitude exceeded it or because one hypothesis set
/// was empty in the list.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector {
    pub values: Vec<f64>,
    pub clamped: Vec<bool>,
    pub l_max: f64,
}

impl LlrVector {
    /// Assemble LLRs from per-bit hypothesis maxima; `NEG_INFINITY` marks an
    /// empty side.
    pub fn from_maxima(max_pos: &[f64], max_neg: &[f64], l_max: f64) -> Self {
        let mut values = Vec::with_capacity(max_pos.len());
        let mut clamped = Vec::with_capacity(max_pos.len());
        for (&p, &n) in max_pos.iter().zip(max_neg.iter()) {
            let (v, cl) = if p == f64::NEG_INFINITY && n == f64::NEG_INFINITY {
                (0.0, false)
            } else if n == f64::NEG_INFINITY {
                (l_max, true)
            } else if p == f64::NEG_INFINITY {
                (-l_max, true)
            } else {
                let raw = 0.5 * (p - n);
                if raw > l_max {
                    (l_max, true)
                } else if raw < -l_max {
                    (-l_max, true)
                } else {
                    (raw, false)
                }
            };
            values.push(v);
            clamped.push(cl);
        }
        LlrVector {
            values,
            clamped,
            l_max,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Max-log LLRs from a candidate list. Each candidate is unpermuted and
/// demapped to bits; per bit k the metric maxima over the members with
/// `x_k = +1` and `x_k = -1` are differenced and halved. The metric is
/// `-ped / sigma2 + x_[k]' L_A,[k]` (the candidate's own bit-k prior term is
/// excluded).
pub fn list_llr(
    list: &CandidateList,
    perm: &[usize],
    sigma2: f64,
    l_a: &[f64],
    c: &Constellation,
    l_max: f64,
) -> Result<LlrVector> {
    if list.is_empty() {
        return Err(Error::EmptyList);
    }
    if sigma2 <= 0.0 {
        return Err(Error::InvalidParameter(
            "sigma2 must be positive for LLR generation".into(),
        ));
    }
    let n_bits = list.candidates[0].path.len() * c.bits_per_dim();
    if l_a.len() != n_bits {
        return Err(Error::InputShape(format!(
            "prior vector has {} entries, expected {}",
            l_a.len(),
            n_bits
        )));
    }

    let mut max_pos = vec![f64::NEG_INFINITY; n_bits];
    let mut max_neg = vec![f64::NEG_INFINITY; n_bits];
    for cand in &list.candidates {
        let bits = demap_real(&unpermute(&cand.path, perm), c);
        let signs: Vec<f64> = bits.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect();
        let prior_dot: f64 = signs.iter().zip(l_a).map(|(x, l)| x * l).sum();
        let base = -cand.ped / sigma2 + prior_dot;
        for (k, &x) in signs.iter().enumerate() {
            let metric = base - x * l_a[k];
            let slot = if x > 0.0 {
                &mut max_pos[k]
            } else {
                &mut max_neg[k]
            };
            if metric > *slot {
                *slot = metric;
            }
        }
    }
    Ok(LlrVector::from_maxima(&max_pos, &max_neg, l_max))
}

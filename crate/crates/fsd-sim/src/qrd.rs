//! Plain and sorted QR decomposition (modified Gram-Schmidt) plus the
//! zero-forcing transform of the received vector.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Residual column norm below this is treated as a rank deficiency.
pub const RANK_TOL: f64 = 1e-12;

/// QR factors of the (possibly column-permuted) real channel matrix.
///
/// `q * r` reconstructs the permuted matrix; `perm[k]` is the original column
/// index placed at position `k`. The diagonal of `r` is forced positive.
#[derive(Debug, Clone)]
pub struct QrdResult {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub perm: Vec<usize>,
}

/// Plain QR via modified Gram-Schmidt; `perm` is the identity.
pub fn qr_decompose(h: &DMatrix<f64>) -> Result<QrdResult> {
    mgs(h, false)
}

/// Sorted QR (SQRD): at every orthogonalization step the remaining column of
/// minimum residual norm is processed next (ties to the lowest index), which
/// pushes the strong columns toward the late detection levels.
pub fn sorted_qr_decompose(h: &DMatrix<f64>) -> Result<QrdResult> {
    mgs(h, true)
}

/// y_zf = Q^T y, rotating the received vector into the triangular domain.
pub fn zf_transform(qrd: &QrdResult, y: &DVector<f64>) -> Result<DVector<f64>> {
    if qrd.q.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "Q has {} rows, y has {}",
            qrd.q.nrows(),
            y.len()
        )));
    }
    Ok(qrd.q.transpose() * y)
}

/// Undo the column permutation of a detected path: position `k` of the
/// permuted path is original dimension `perm[k]`.
pub fn unpermute(path: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; path.len()];
    for (k, &p) in perm.iter().enumerate() {
        out[p] = path[k];
    }
    out
}

fn mgs(h: &DMatrix<f64>, sort: bool) -> Result<QrdResult> {
    let (m, n) = h.shape();
    let mut v = h.clone(); // residual columns
    let mut q = DMatrix::zeros(m, n);
    let mut r = DMatrix::zeros(n, n);
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        if sort {
            let mut best = k;
            let mut best_norm = v.column(k).norm_squared();
            for j in k + 1..n {
                let nj = v.column(j).norm_squared();
                if nj > best_norm {
                    best = j;
                    best_norm = nj;
                }
            }
            if best != k {
                v.swap_columns(k, best);
                // rows 0..k of R already hold projections for these columns
                r.swap_columns(k, best);
                perm.swap(k, best);
            }
        }
        let norm = v.column(k).norm();
        if norm < RANK_TOL {
            return Err(Error::SingularChannel {
                norm,
                tol: RANK_TOL,
            });
        }
        r[(k, k)] = norm; // positive by construction
        let qk = v.column(k) / norm;
        q.set_column(k, &qk);
        for j in k + 1..n {
            let proj = qk.dot(&v.column(j));
            r[(k, j)] = proj;
            let upd = &v.column(j) - &qk * proj;
            v.set_column(j, &upd);
        }
    }
    Ok(QrdResult { q, r, perm })
}

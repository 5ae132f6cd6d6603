//! Small dense linear-algebra helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;

fn rank_threshold(singular_values: &DVector<f64>) -> f64 {
    RANK_TOL * singular_values.iter().fold(0.0_f64, |m, s| m.max(*s))
}

/// Moore–Penrose pseudo-inverse (`cols × rows`), truncating singular values
/// below [`RANK_TOL`] relative to the largest.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = a.clone().svd(true, true);
    let eps = rank_threshold(&svd.singular_values);
    if eps == 0.0 {
        return DMatrix::zeros(cols, rows);
    }
    svd.pseudo_inverse(eps)
        .expect("u and v were requested from the SVD")
}

/// Numerical rank with the relative [`RANK_TOL`] cut-off.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let eps = rank_threshold(&sv);
    if eps == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > eps).count()
}

pub fn has_full_column_rank(a: &DMatrix<f64>) -> bool {
    a.ncols() == 0 || rank(a) == a.ncols()
}

/// Solves `G β = y` for a full-column-rank `G` through its pseudo-inverse.
///
/// Returns `Ok(β)` when the system is consistent within `tol`, otherwise
/// `Err(residual)` with the least-squares residual norm.
pub fn unique_preimage(
    pinv: &DMatrix<f64>,
    g: &DMatrix<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>, f64> {
    let beta = pinv * y;
    let residual = (g * &beta - y).norm();
    if residual <= tol {
        Ok(beta)
    } else {
        Err(residual)
    }
}

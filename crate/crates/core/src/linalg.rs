//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Ratio of extreme singular values; `f64::INFINITY` for a rank-deficient matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`: right singular
/// vectors whose singular value is below `threshold`.
pub fn numerical_kernel(m: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let ncols = m.ncols();
    // Pad to a square matrix so that the SVD exposes a full set of right vectors.
    let padded = if m.nrows() < ncols {
        let mut p = DMatrix::zeros(ncols, ncols);
        p.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < threshold)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(ncols, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Minimum-norm least-squares solution of `m x = b`, discarding singular values
/// below `rel_cutoff · σ_max`. Returns `None` if the matrix has no usable rank.
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>, rel_cutoff: f64) -> Option<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if !(smax > 0.0) || !smax.is_finite() {
        return None;
    }
    svd.solve(b, rel_cutoff * smax).ok()
}

/// Spectral norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

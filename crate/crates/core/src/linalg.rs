//! Small dense helpers on top of faer: norms, condition estimates, guarded
//! inverses and block assembly.

use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::*;
use faer::{Mat, MatRef, Side};

/// Spectral norm ‖A‖₂. Zero for empty matrices.
pub fn spectral_norm(a: MatRef<'_, f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    match a.singular_values() {
        Ok(s) => s[0],
        Err(_) => f64::NAN,
    }
}

/// Spectral norm of a symmetric matrix, via its eigenvalues.
pub fn sym_spectral_norm(a: MatRef<'_, f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    match a.self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => ev.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        Err(_) => spectral_norm(a),
    }
}

/// ‖A Bᵀ‖₂ for tall factors, without forming the product.
pub fn low_rank_spectral_norm(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    if a.nrows() < a.ncols() {
        return spectral_norm((a * b.transpose()).as_ref());
    }
    let ra = a.qr().thin_R().to_owned();
    let rb = b.qr().thin_R().to_owned();
    spectral_norm((&ra * rb.transpose()).as_ref())
}

/// Reciprocal 2-norm condition number σ_min/σ_max. Empty matrices are
/// perfectly conditioned; a zero matrix has rcond 0.
pub fn rcond(a: MatRef<'_, f64>) -> f64 {
    let n = a.nrows().min(a.ncols());
    if n == 0 {
        return 1.0;
    }
    if !is_finite(a) {
        return 0.0;
    }
    match a.singular_values() {
        Ok(s) if s[0] > 0.0 => s[n - 1] / s[0],
        _ => 0.0,
    }
}

/// Numerical rank with singular values below `rel_tol · σ_max` discarded.
pub fn numerical_rank(a: MatRef<'_, f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    match a.singular_values() {
        Ok(s) => {
            let cut = rel_tol * s[0];
            s.iter().filter(|&&v| v > cut && v > 0.0).count()
        }
        Err(_) => 0,
    }
}

/// Inverse of a square matrix, refused (with the measured rcond) when the
/// matrix is worse conditioned than `min_rcond`.
pub fn guarded_inverse(a: MatRef<'_, f64>, min_rcond: f64) -> Result<Mat<f64>, f64> {
    let rc = rcond(a);
    if !(rc >= min_rcond) {
        return Err(rc);
    }
    Ok(a.partial_piv_lu().inverse())
}

/// Solves `A X = B` under the same conditioning guard as [`guarded_inverse`].
pub fn guarded_solve(
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    min_rcond: f64,
) -> Result<Mat<f64>, f64> {
    let rc = rcond(a);
    if !(rc >= min_rcond) {
        return Err(rc);
    }
    Ok(a.partial_piv_lu().solve(b))
}

/// (A + Aᵀ)/2.
pub fn symmetrize(a: MatRef<'_, f64>) -> Mat<f64> {
    assert_eq!(a.nrows(), a.ncols());
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// max|A − Aᵀ| / max|A|, zero for the zero matrix.
pub fn relative_asymmetry(a: MatRef<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut scale = 0.0_f64;
    let mut diff = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(a[(i, j)].abs());
            diff = diff.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Symmetrizes a computed matrix, logging when it was noticeably asymmetric.
pub(crate) fn symmetrize_logged(a: MatRef<'_, f64>, what: &str) -> Mat<f64> {
    let asym = relative_asymmetry(a);
    if asym > 1e-8 {
        log::warn!("{what}: relative asymmetry {asym:.3e} before symmetrization (ill conditioned)");
    }
    symmetrize(a)
}

pub fn is_finite(a: MatRef<'_, f64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].is_finite()))
}

/// diag(A, B).
pub fn block_diag(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let (m1, n1) = (a.nrows(), a.ncols());
    let (m2, n2) = (b.nrows(), b.ncols());
    let mut out = Mat::zeros(m1 + m2, n1 + n2);
    out.as_mut().submatrix_mut(0, 0, m1, n1).copy_from(a);
    out.as_mut().submatrix_mut(m1, n1, m2, n2).copy_from(b);
    out
}

/// [A B] for matrices with equal row counts.
pub fn hstack(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.as_mut().submatrix_mut(0, 0, a.nrows(), a.ncols()).copy_from(a);
    out.as_mut()
        .submatrix_mut(0, a.ncols(), b.nrows(), b.ncols())
        .copy_from(b);
    out
}

/// [A; B] for matrices with equal column counts.
pub fn vstack(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.as_mut().submatrix_mut(0, 0, a.nrows(), a.ncols()).copy_from(a);
    out.as_mut()
        .submatrix_mut(a.nrows(), 0, b.nrows(), b.ncols())
        .copy_from(b);
    out
}

/// ‖A − B‖₂ / ‖B‖₂ (absolute when B = 0).
pub fn relative_distance(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let d = spectral_norm((a - b).as_ref());
    let s = spectral_norm(b);
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::mat;

    #[test]
    fn norms_of_diagonal() {
        let a = mat![[3.0, 0.0], [0.0, -4.0]];
        assert!((spectral_norm(a.as_ref()) - 4.0).abs() < 1e-14);
        assert!((sym_spectral_norm(a.as_ref()) - 4.0).abs() < 1e-14);
        assert!((rcond(a.as_ref()) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn low_rank_norm_matches_dense() {
        let a = Mat::from_fn(7, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let b = Mat::from_fn(7, 2, |i, j| ((i + 2 * j) % 5) as f64 * 0.5 - 1.0);
        let dense = spectral_norm((&a * b.transpose()).as_ref());
        let lr = low_rank_spectral_norm(a.as_ref(), b.as_ref());
        assert!((dense - lr).abs() <= 1e-12 * dense);
    }

    #[test]
    fn guarded_inverse_refuses_singular() {
        let a = mat![[1.0, 2.0], [2.0, 4.0]];
        assert!(guarded_inverse(a.as_ref(), 1e-13).is_err());
        let b = mat![[2.0, 1.0], [1.0, 2.0]];
        let inv = guarded_inverse(b.as_ref(), 1e-13).unwrap();
        let id = &b * &inv;
        assert!(relative_distance(id.as_ref(), Mat::<f64>::identity(2, 2).as_ref()) < 1e-14);
    }

    #[test]
    fn empty_matrices() {
        let e = Mat::<f64>::zeros(0, 0);
        assert_eq!(rcond(e.as_ref()), 1.0);
        assert_eq!(spectral_norm(e.as_ref()), 0.0);
        assert_eq!(numerical_rank(Mat::<f64>::zeros(3, 0).as_ref(), 1e-12), 0);
    }
}

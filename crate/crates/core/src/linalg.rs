//! Small dense linear-algebra helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

/// Orthonormal basis of the hyperplane `v^⊥`, returned as the columns of a
/// `d × (d-1)` matrix. Built from the Householder reflection sending `v/|v|`
/// to `±e_0`, so the result is a deterministic function of `v`.
pub fn orthonormal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let d = v.len();
    let vn = v / v.norm();
    let sign = if vn[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = vn.clone();
    u[0] += sign;
    let uu = u.dot(&u);
    let mut h = DMatrix::<f64>::identity(d, d);
    if uu > 0.0 {
        h -= (&u * u.transpose()) * (2.0 / uu);
    }
    h.columns(1, d - 1).into_owned()
}

/// Dimension of the affine hull of `points`, with singular values below
/// `tol` (relative to the point spread) treated as zero.
pub fn affine_rank(points: &[&DVector<f64>], tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let d = points[0].len();
    let m = points.len() - 1;
    let mut diffs = DMatrix::<f64>::zeros(d, m);
    let mut scale: f64 = 0.0;
    for (j, p) in points[1..].iter().enumerate() {
        let col = *p - points[0];
        scale = scale.max(col.norm());
        diffs.set_column(j, &col);
    }
    if scale == 0.0 {
        return 0;
    }
    let sv = diffs.singular_values();
    sv.iter().filter(|s| **s > tol * scale).count()
}

/// `log det` of a symmetric positive-definite matrix, or `None` when the
/// Cholesky factorization fails.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Symmetric eigenvalue range `(min, max)`.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Largest absolute eigenvalue of a symmetric matrix (operator 2-norm).
pub fn sym_operator_norm(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = eigen_range(m);
    lo.abs().max(hi.abs())
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// `ln Γ(k/2)` for a positive integer `k`, from the factorial closed forms
/// `Γ(m) = (m-1)!` and `Γ(m + 1/2) = (2m)! √π / (4^m m!)`.
pub fn ln_gamma_half(k: usize) -> f64 {
    assert!(k > 0, "ln_gamma_half requires k >= 1");
    if k.is_multiple_of(2) {
        ln_factorial(k / 2 - 1)
    } else {
        let m = (k - 1) / 2;
        ln_factorial(2 * m) - ln_factorial(m) - (m as f64) * 4f64.ln()
            + 0.5 * std::f64::consts::PI.ln()
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let v = DVector::from_vec(vec![-0.3, 1.2, 0.7, -2.0]);
        let q = orthonormal_complement(&v);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((q.transpose() * &v).norm() < 1e-12);
    }

    #[test]
    fn affine_rank_of_collinear_points() {
        let a = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let c = DVector::from_vec(vec![2.0, 2.0, 2.0]);
        let e = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(affine_rank(&[&a, &b, &c], 1e-9), 1);
        assert_eq!(affine_rank(&[&a, &b, &c, &e], 1e-9), 2);
    }

    #[test]
    fn gamma_half_integers() {
        assert_eq!(ln_gamma_half(2), 0.0);
        assert!((ln_gamma_half(1) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-15);
        assert!((ln_gamma_half(7) - (15.0 / 8.0 * std::f64::consts::PI.sqrt()).ln()).abs() < 1e-13);
        assert!((ln_gamma_half(10) - 24f64.ln()).abs() < 1e-13);
    }
}

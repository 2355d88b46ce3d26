//! Closed-form Laplace transforms of the orthant, the Lorentz cone and the
//! cone of positive semi-definite matrices, plus the trace-one PSD slice as
//! a membership-oracle body.
//!
//! Symmetric matrices are identified with `R^{ℓ(ℓ+1)/2}` through the
//! orthonormal basis `E_ii`, `(E_ij + E_ji)/√2` of the trace inner product,
//! so Lebesgue measure in these coordinates is the volume form induced by
//! `tr[AB]`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::body::{ConvexOracle, VPolytope};
use crate::cone_transform::LaplaceEval;
use crate::error::{Error, Result};
use crate::linalg::{factorial, ln_factorial, ln_gamma_half, orthonormal_complement};
use crate::moments::mc::mc_moments;
use crate::moments::{body_moments, isotropic_constant, MomentData};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AnalyticCone {
    /// `R_+^d`.
    Orthant(usize),
    /// `{ x_0 >= |(x_1..x_n)| }` in `R^{n+1}`.
    Lorentz(usize),
    /// Positive semi-definite `ℓ × ℓ` matrices.
    Psd(usize),
}

impl AnalyticCone {
    pub fn ambient(&self) -> usize {
        match *self {
            AnalyticCone::Orthant(d) => d,
            AnalyticCone::Lorentz(n) => n + 1,
            AnalyticCone::Psd(l) => l * (l + 1) / 2,
        }
    }

    /// Whether `x` lies in the interior of the cone.
    pub fn contains_interior(&self, x: &DVector<f64>) -> bool {
        match *self {
            AnalyticCone::Orthant(_) => x.iter().all(|&t| t > 0.0),
            AnalyticCone::Lorentz(_) => x[0] > 0.0 && lorentz_q(x) > 0.0,
            AnalyticCone::Psd(l) => smat(x, l).cholesky().is_some(),
        }
    }

    /// `Φ_V(y)` with value, gradient and Hessian, for `y ∈ -int(V)`.
    pub fn eval(&self, y: &DVector<f64>) -> Result<LaplaceEval> {
        if y.len() != self.ambient() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient(),
                got: y.len(),
            });
        }
        if !self.contains_interior(&-y) {
            return Err(Error::OutsideCone);
        }
        Ok(match *self {
            AnalyticCone::Orthant(_) => LaplaceEval {
                value: -y.iter().map(|t| (-t).ln()).sum::<f64>(),
                gradient: y.map(|t| -1.0 / t),
                hessian: DMatrix::from_diagonal(&y.map(|t| 1.0 / (t * t))),
            },
            AnalyticCone::Lorentz(n) => {
                let c = (n + 1) as f64 / 2.0;
                let q = lorentz_q(y);
                let jy = lorentz_j(y);
                // ∇Q = 2 J y, ∇²Q = 2 J.
                let gradient = &jy * (-2.0 * c / q);
                let mut hessian =
                    DMatrix::from_diagonal(&lorentz_j(&DVector::from_element(n + 1, 1.0)))
                        * (-2.0 * c / q);
                hessian.ger(4.0 * c / (q * q), &jy, &jy, 1.0);
                LaplaceEval {
                    value: -c * q.ln() + lorentz_cn(n),
                    gradient,
                    hessian,
                }
            }
            AnalyticCone::Psd(l) => {
                let c = (l + 1) as f64 / 2.0;
                let a = -smat(y, l);
                let ch = a.clone().cholesky().ok_or(Error::OutsideCone)?;
                let logdet = 2.0 * ch.l().diagonal().iter().map(|t| t.ln()).sum::<f64>();
                let inv = ch.inverse();
                // d/dY log det(-Y) = Y^{-1} = -A^{-1}; the Hessian is the
                // operator H -> c A^{-1} H A^{-1}.
                let gradient = svec(&(&inv * c));
                let m = self.ambient();
                let mut hessian = DMatrix::zeros(m, m);
                for j in 0..m {
                    let mut e = DVector::zeros(m);
                    e[j] = 1.0;
                    let h = smat(&e, l);
                    hessian.set_column(j, &svec(&(&inv * h * &inv * c)));
                }
                LaplaceEval {
                    value: -c * logdet + psd_cn(l),
                    gradient,
                    hessian,
                }
            }
        })
    }

    /// Closed-form `Φ_V*(x)` for `x ∈ int(V)`.
    pub fn legendre_value(&self, x: &DVector<f64>) -> Result<f64> {
        if !self.contains_interior(x) {
            return Err(Error::NotInteriorPrimal {
                max_product: f64::NAN,
            });
        }
        Ok(match *self {
            AnalyticCone::Orthant(d) => -(d as f64) - x.iter().map(|t| t.ln()).sum::<f64>(),
            AnalyticCone::Lorentz(n) => {
                let m = (n + 1) as f64;
                -m / 2.0 * lorentz_q(x).ln() + m * (m / std::f64::consts::E).ln() - lorentz_cn(n)
            }
            AnalyticCone::Psd(l) => {
                // Maximizer Y = -(ℓ+1)/2 X^{-1}.
                let c = (l + 1) as f64 / 2.0;
                let big_n = self.ambient() as f64;
                let logdet = smat(x, l).determinant().ln();
                -big_n + c * (l as f64 * c.ln() - logdet) - psd_cn(l)
            }
        })
    }

    /// The constant value of `J = Φ_{V*} - Φ_V*` on the cone.
    pub fn j_constant(&self) -> f64 {
        match *self {
            AnalyticCone::Orthant(d) => d as f64,
            AnalyticCone::Lorentz(n) => {
                let m = (n + 1) as f64;
                2.0 * lorentz_cn(n) - m * (m / std::f64::consts::E).ln()
            }
            AnalyticCone::Psd(l) => {
                let big_n = self.ambient() as f64;
                2.0 * psd_cn(l) - big_n * (((l + 1) as f64) / (2.0 * std::f64::consts::E)).ln()
            }
        }
    }

    /// `J(x)` from the closed-form evaluators, using `V* = -V` and a
    /// numerical Legendre transform.
    pub fn j_numeric(&self, x: &DVector<f64>, tol: f64) -> Result<f64> {
        let phi_dual = self.eval(&-x)?.value;
        Ok(phi_dual - analytic_legendre(self, x, tol)?.0)
    }
}

/// `Q(x) = x_0^2 - Σ x_i^2`.
pub fn lorentz_q(x: &DVector<f64>) -> f64 {
    x[0] * x[0] - x.rows(1, x.len() - 1).norm_squared()
}

fn lorentz_j(x: &DVector<f64>) -> DVector<f64> {
    let mut j = -x;
    j[0] = x[0];
    j
}

/// `C_n = log(π^{n/2} Γ(n+1) / Γ(1 + n/2))`: `e^{C_n} = n! Vol(B_2^n)`.
pub fn lorentz_cn(n: usize) -> f64 {
    let nf = n as f64;
    nf / 2.0 * std::f64::consts::PI.ln() + ln_factorial(n) - ln_gamma_half(n + 2)
}

/// `Φ_V(y)` of the Lorentz cone.
pub fn lorentz_phi(n: usize, y: &DVector<f64>) -> Result<f64> {
    Ok(AnalyticCone::Lorentz(n).eval(y)?.value)
}

/// `C_ℓ = log ∫_{PSD} e^{-tr A} dA`, closed form.
pub fn psd_cn(l: usize) -> f64 {
    let lf = l as f64;
    lf * (lf - 1.0) / 4.0 * LN_2PI + (1..=l).map(|k| ln_gamma_half(k + 1)).sum::<f64>()
}

/// The same constant by the recursion
/// `C_ℓ = C_{ℓ-1} + (ℓ-1)/2 log(2π) + log Γ((ℓ+1)/2)` from `C_1 = 0`.
pub fn psd_cn_recursive(l: usize) -> f64 {
    let mut c = 0.0;
    for k in 2..=l {
        c += (k - 1) as f64 / 2.0 * LN_2PI + ln_gamma_half(k + 1);
    }
    c
}

/// `J / dim` for the PSD cone; tends to `log(2π) - 1/2`.
pub fn psd_j_per_dim(l: usize) -> f64 {
    let v = AnalyticCone::Psd(l);
    v.j_constant() / v.ambient() as f64
}

/// Coordinates of a symmetric matrix in the orthonormal basis.
pub fn svec(a: &DMatrix<f64>) -> DVector<f64> {
    let l = a.nrows();
    let mut v = Vec::with_capacity(l * (l + 1) / 2);
    for i in 0..l {
        v.push(a[(i, i)]);
    }
    for i in 0..l {
        for j in i + 1..l {
            v.push(std::f64::consts::SQRT_2 * a[(i, j)]);
        }
    }
    DVector::from_vec(v)
}

/// Inverse of [`svec`].
pub fn smat(v: &DVector<f64>, l: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(l, l);
    for i in 0..l {
        a[(i, i)] = v[i];
    }
    let mut k = l;
    for i in 0..l {
        for j in i + 1..l {
            let t = v[k] / std::f64::consts::SQRT_2;
            a[(i, j)] = t;
            a[(j, i)] = t;
            k += 1;
        }
    }
    a
}

/// Newton's method for `∇Φ_V(y) = x` on a closed-form cone. Returns
/// `(Φ_V*(x), y*)`.
pub fn analytic_legendre(
    v: &AnalyticCone,
    x: &DVector<f64>,
    tol: f64,
) -> Result<(f64, DVector<f64>)> {
    if !v.contains_interior(x) {
        return Err(Error::NotInteriorPrimal {
            max_product: f64::NAN,
        });
    }
    let d = v.ambient() as f64;
    // ⟨∇Φ(y), y⟩ = -d gives a starting point on the right level.
    let mut y = -x * (d / x.norm_squared());
    for _ in 0..200 {
        let ev = v.eval(&y)?;
        let r = x - &ev.gradient;
        if r.norm() <= tol * x.norm() {
            return Ok((x.dot(&y) - ev.value, y));
        }
        let step = ev
            .hessian
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("Hessian not positive definite".into()))?
            .solve(&r);
        let f0 = x.dot(&y) - ev.value;
        let mut alpha = 1.0;
        loop {
            let trial = &y + &step * alpha;
            if let Ok(e) = v.eval(&trial) {
                if x.dot(&trial) - e.value >= f0 + 1e-4 * alpha * r.dot(&step) {
                    y = trial;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                return Err(Error::Degenerate("line search failed".into()));
            }
        }
    }
    Err(Error::Degenerate("Newton did not converge".into()))
}

/// Orthonormal basis (trace inner product) of traceless symmetric `ℓ × ℓ`
/// matrices: off-diagonal `(E_ij + E_ji)/√2` and `diag(h)` for an
/// orthonormal basis `h` of `1^⊥`.
pub fn traceless_basis(l: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    let q = orthonormal_complement(&DVector::from_element(l, 1.0));
    for k in 0..l - 1 {
        out.push(DMatrix::from_diagonal(&q.column(k).into_owned()));
    }
    for i in 0..l {
        for j in i + 1..l {
            let mut e = DMatrix::zeros(l, l);
            e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
            e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
            out.push(e);
        }
    }
    out
}

/// `{ A ⪰ 0 : tr A = 1 } - I/ℓ` in traceless coordinates, of dimension
/// `ℓ(ℓ+1)/2 - 1`.
#[derive(Clone, Debug)]
pub struct PsdSlice {
    pub l: usize,
    basis: Vec<DMatrix<f64>>,
}

/// Polar of [`PsdSlice`] about `I/ℓ`: `{ Z traceless : λ_max(Z) <= 1 }`.
#[derive(Clone, Debug)]
pub struct PsdSlicePolar {
    pub l: usize,
    basis: Vec<DMatrix<f64>>,
}

pub fn psd_slice_oracle(l: usize) -> PsdSlice {
    assert!(l >= 2, "PSD slice needs ℓ >= 2");
    PsdSlice {
        l,
        basis: traceless_basis(l),
    }
}

pub fn psd_slice_polar_oracle(l: usize) -> PsdSlicePolar {
    assert!(l >= 2, "PSD slice needs ℓ >= 2");
    PsdSlicePolar {
        l,
        basis: traceless_basis(l),
    }
}

fn chart_matrix(basis: &[DMatrix<f64>], u: &DVector<f64>, l: usize) -> DMatrix<f64> {
    basis
        .iter()
        .zip(u.iter())
        .fold(DMatrix::zeros(l, l), |acc, (b, t)| acc + b * *t)
}

impl PsdSlice {
    /// The trace-one matrix at chart point `u`.
    pub fn matrix(&self, u: &DVector<f64>) -> DMatrix<f64> {
        chart_matrix(&self.basis, u, self.l) + DMatrix::identity(self.l, self.l) / self.l as f64
    }

    /// Exact volume: `e^{Φ(y)} = n! Vol(K_y) / |y|` at `y = -I`.
    pub fn exact_volume(&self) -> f64 {
        let n = self.dim();
        psd_cn(self.l).exp() * (self.l as f64).sqrt() / factorial(n)
    }
}

impl ConvexOracle for PsdSlice {
    fn dim(&self) -> usize {
        self.basis.len()
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let m = self.matrix(x);
        m.symmetric_eigenvalues().min() >= -tol
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }
    fn inner_radius(&self) -> f64 {
        let l = self.l as f64;
        1.0 / (l * (l - 1.0)).sqrt()
    }
    fn outer_radius(&self) -> f64 {
        (1.0 - 1.0 / self.l as f64).sqrt()
    }
}

impl ConvexOracle for PsdSlicePolar {
    fn dim(&self) -> usize {
        self.basis.len()
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        chart_matrix(&self.basis, x, self.l)
            .symmetric_eigenvalues()
            .max()
            <= 1.0 + tol
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }
    fn inner_radius(&self) -> f64 {
        let l = self.l as f64;
        (l / (l - 1.0)).sqrt()
    }
    fn outer_radius(&self) -> f64 {
        let l = self.l as f64;
        (l * (l - 1.0)).sqrt()
    }
}

/// Duality report for a body and its polar.
#[derive(Clone, Debug, Serialize)]
pub struct HomogeneousReport {
    pub dim: usize,
    /// `‖(n+2)^2 cov(K°) cov(K) - I‖_∞` (entrywise max).
    pub identity_residual: f64,
    /// `|b(K°)|` with `K` centered at its barycenter.
    pub polar_barycenter_norm: f64,
    /// `L_K · L_{K°} · s(K)^{1/n}`; the target is `1/(n+2)`.
    pub product: f64,
    /// `L_K^2 · s(K)^{1/n}`.
    pub lk2_s: f64,
    pub target: f64,
    pub exact: bool,
}

fn report_from(mk: &MomentData, mp: &MomentData, exact: bool) -> Result<HomogeneousReport> {
    let n = mk.dim();
    let nf = n as f64;
    let prod = &mp.covariance * &mk.covariance * (nf + 2.0).powi(2) - DMatrix::identity(n, n);
    let lk = isotropic_constant(mk)?;
    let lp = isotropic_constant(mp)?;
    let s = mk.volume * mp.volume;
    Ok(HomogeneousReport {
        dim: n,
        identity_residual: crate::linalg::max_abs(&prod),
        polar_barycenter_norm: mp.barycenter.norm(),
        product: lk * lp * s.powf(1.0 / nf),
        lk2_s: lk * lk * s.powf(1.0 / nf),
        target: 1.0 / (nf + 2.0),
        exact,
    })
}

/// Exact version for polytopes; `K` is translated to its barycenter first.
pub fn verify_homogeneous_duality_exact(k: &VPolytope) -> Result<HomogeneousReport> {
    let m = body_moments(k)?;
    let kc = k.translate(&m.barycenter);
    let mk = body_moments(&kc)?;
    let mp = body_moments(&kc.polar_body(1e-12)?)?;
    report_from(&mk, &mp, true)
}

/// Monte Carlo version for oracle bodies whose polar is given as a second
/// oracle. Both must be centered at the origin already (symmetric models).
pub fn verify_homogeneous_duality<A, B>(
    body: &A,
    polar: &B,
    samples: usize,
    seed: u64,
) -> Result<HomogeneousReport>
where
    A: ConvexOracle + ?Sized,
    B: ConvexOracle + ?Sized,
{
    let mk = mc_moments(body, samples, seed).estimate.value;
    let mp = mc_moments(polar, samples, seed.wrapping_add(1))
        .estimate
        .value;
    if !(mk.volume.is_finite() && mp.volume.is_finite()) {
        return Err(Error::Degenerate(
            "Monte Carlo volume unavailable under hit-and-run".into(),
        ));
    }
    report_from(&mk, &mp, false)
}

/// Closed-form report for the Euclidean ball, the section of the Lorentz
/// cone.
pub fn verify_ball_duality(n: usize) -> Result<HomogeneousReport> {
    let nf = n as f64;
    let vol = (nf / 2.0 * std::f64::consts::PI.ln() - ln_gamma_half(n + 2)).exp();
    let cov = DMatrix::identity(n, n) / (nf + 2.0);
    let m = MomentData {
        volume: vol,
        barycenter: DVector::zeros(n),
        second_moment: cov.clone(),
        covariance: cov,
    };
    report_from(&m, &m, true)
}

/// Residual of `Φ_V(T* y) = Φ_V(y) - log|det T|` for an automorphism `T`.
pub fn equivariance_residual(v: &AnalyticCone, t: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let lhs = v.eval(&(t.transpose() * y))?.value;
    let rhs = v.eval(y)?.value - t.determinant().abs().ln();
    Ok((lhs - rhs).abs())
}

/// Lorentz boost of rapidity `r` in the `(x_0, x_i)` plane.
pub fn lorentz_boost(n: usize, i: usize, r: f64) -> DMatrix<f64> {
    let mut t = DMatrix::identity(n + 1, n + 1);
    t[(0, 0)] = r.cosh();
    t[(i, i)] = r.cosh();
    t[(0, i)] = r.sinh();
    t[(i, 0)] = r.sinh();
    t
}

/// The linear map `A -> T^T A T` on symmetric matrices, in coordinates.
pub fn congruence_map(t: &DMatrix<f64>) -> DMatrix<f64> {
    let l = t.nrows();
    let m = l * (l + 1) / 2;
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        out.set_column(j, &svec(&(t.transpose() * smat(&e, l) * t)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_constant_small_cases() {
        assert_eq!(psd_cn(1), 0.0);
        let c2 = 0.5 * LN_2PI + ln_gamma_half(3);
        assert!((psd_cn(2) - c2).abs() < 1e-14);
        for l in 1..=8 {
            assert!((psd_cn(l) - psd_cn_recursive(l)).abs() < 1e-12);
        }
    }

    #[test]
    fn lorentz_constant_in_the_plane() {
        assert!((lorentz_cn(2) - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn svec_is_isometric() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.5, -0.1, 0.5, 4.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -0.2, 0.4, -0.2, 3.0, 0.0, 0.4, 0.0, 0.5]);
        assert!((svec(&a).dot(&svec(&b)) - (&a * &b).trace()).abs() < 1e-14);
        assert!((smat(&svec(&a), 3) - a).norm() < 1e-15);
    }

    #[test]
    fn closed_form_legendre_matches_newton() {
        for v in [
            AnalyticCone::Lorentz(3),
            AnalyticCone::Psd(3),
            AnalyticCone::Orthant(3),
        ] {
            let x = match v {
                AnalyticCone::Lorentz(_) => DVector::from_vec(vec![2.0, 0.3, -0.5, 0.7]),
                AnalyticCone::Psd(_) => svec(&DMatrix::from_row_slice(
                    3,
                    3,
                    &[2.0, 0.3, -0.1, 0.3, 1.0, 0.5, -0.1, 0.5, 4.0],
                )),
                AnalyticCone::Orthant(_) => DVector::from_vec(vec![0.5, 1.0, 2.0]),
            };
            let (num, _) = analytic_legendre(&v, &x, 1e-12).unwrap();
            assert!((num - v.legendre_value(&x).unwrap()).abs() < 1e-10, "{v:?}");
            assert!((v.j_numeric(&x, 1e-12).unwrap() - v.j_constant()).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_slice_radii() {
        let s = psd_slice_oracle(3);
        assert_eq!(s.dim(), 5);
        let u = DVector::from_fn(5, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let g = ConvexOracle::gauge(&s, &u, 1e-12);
        let r = 1.0 / g;
        assert!(r >= s.inner_radius() - 1e-9 && r <= s.outer_radius() + 1e-9);
    }
}

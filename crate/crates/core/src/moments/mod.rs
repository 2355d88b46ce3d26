//! Exact volumes, barycenters and second moments of polytopes, assembled
//! from simplices.

pub mod mc;

pub use mc::{mc_moments, MCEstimate, McMoments, Sampler};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::body::VPolytope;
use crate::error::{Error, Result};
use crate::linalg::{factorial, log_det_spd};

/// Volume-normalized moments of a body: `second_moment = ∫ x x^T / vol`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentData {
    pub volume: f64,
    #[serde(with = "crate::ser::vector")]
    pub barycenter: DVector<f64>,
    #[serde(with = "crate::ser::matrix")]
    pub second_moment: DMatrix<f64>,
    #[serde(with = "crate::ser::matrix")]
    pub covariance: DMatrix<f64>,
}

impl MomentData {
    pub fn dim(&self) -> usize {
        self.barycenter.len()
    }

    /// Moments from raw integrals `∫1`, `∫x`, `∫xx^T`.
    pub fn from_integrals(mass: f64, first: &DVector<f64>, second: &DMatrix<f64>) -> Self {
        let b = first / mass;
        let m = second / mass;
        let m = (&m + m.transpose()) * 0.5;
        let cov = &m - &b * b.transpose();
        Self {
            volume: mass,
            barycenter: b,
            second_moment: m,
            covariance: cov,
        }
    }

    /// Moments of the image under `x -> A x + t`.
    pub fn affine_image(&self, a: &DMatrix<f64>, t: &DVector<f64>) -> Self {
        let b = a * &self.barycenter + t;
        let cov = a * &self.covariance * a.transpose();
        let m = &cov + &b * b.transpose();
        Self {
            volume: self.volume * a.determinant().abs(),
            barycenter: b,
            second_moment: m,
            covariance: cov,
        }
    }
}

/// Running sums of `∫1`, `∫x`, `∫xx^T` over simplices.
struct Integrals {
    mass: f64,
    first: DVector<f64>,
    second: DMatrix<f64>,
}

impl Integrals {
    fn new(n: usize) -> Self {
        Self {
            mass: 0.0,
            first: DVector::zeros(n),
            second: DMatrix::zeros(n, n),
        }
    }

    /// Adds the simplex with the given `n+1` vertices. Over a simplex with
    /// volume `V`, `∫x = V·mean(v)` and
    /// `∫xx^T = V (Σ v v^T + s s^T) / ((n+1)(n+2))` with `s = Σ v`.
    fn add_simplex(&mut self, verts: &[&DVector<f64>]) -> f64 {
        let n = self.first.len();
        let mut e = DMatrix::zeros(n, n);
        for (k, v) in verts[1..].iter().enumerate() {
            e.set_column(k, &(*v - verts[0]));
        }
        let vol = e.determinant().abs() / factorial(n);
        if vol == 0.0 {
            return 0.0;
        }
        let mut s = DVector::zeros(n);
        let mut vv = DMatrix::zeros(n, n);
        for v in verts {
            s += *v;
            vv.ger(1.0, v, v, 1.0);
        }
        vv.ger(1.0, &s, &s, 1.0);
        let nf = n as f64;
        self.mass += vol;
        self.first.axpy(vol / (nf + 1.0), &s, 1.0);
        self.second += vv * (vol / ((nf + 1.0) * (nf + 2.0)));
        vol
    }
}

/// Moments of a simplex given by `n+1` affinely independent vertices.
pub fn simplex_moments(vertices: &[DVector<f64>]) -> Result<MomentData> {
    let n = vertices
        .first()
        .map(|v| v.len())
        .ok_or_else(|| Error::Degenerate("no vertices".into()))?;
    if vertices.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: vertices.len(),
        });
    }
    let mut acc = Integrals::new(n);
    let refs: Vec<&DVector<f64>> = vertices.iter().collect();
    if acc.add_simplex(&refs) == 0.0 {
        return Err(Error::Degenerate("simplex has zero volume".into()));
    }
    Ok(MomentData::from_integrals(
        acc.mass,
        &acc.first,
        &acc.second,
    ))
}

/// Exact moments of a polytope via the fan from its vertex mean over a
/// triangulation of the boundary.
pub fn body_moments(p: &VPolytope) -> Result<MomentData> {
    body_moments_with_apex(p, &p.vertex_mean())
}

/// Same as [`body_moments`] with the fan apex at `apex`, which must be an
/// interior point.
pub fn body_moments_with_apex(p: &VPolytope, apex: &DVector<f64>) -> Result<MomentData> {
    if !p.contains(apex, -1e-12) {
        return Err(Error::PointNotInterior);
    }
    let n = p.dim();
    let verts = p.vertices();
    let mut acc = Integrals::new(n);
    if n == 1 {
        for v in verts {
            acc.add_simplex(&[apex, v]);
        }
    } else {
        for s in p.boundary_triangulation() {
            let mut simplex: Vec<&DVector<f64>> = Vec::with_capacity(n + 1);
            simplex.push(apex);
            simplex.extend(s.iter().map(|&i| &verts[i]));
            acc.add_simplex(&simplex);
        }
    }
    if acc.mass <= 0.0 {
        return Err(Error::Degenerate("polytope has zero volume".into()));
    }
    Ok(MomentData::from_integrals(
        acc.mass,
        &acc.first,
        &acc.second,
    ))
}

/// Exact volume of a polytope.
pub fn volume(p: &VPolytope) -> Result<f64> {
    Ok(body_moments(p)?.volume)
}

/// `L_K = (det cov / vol^2)^{1/(2n)}`.
pub fn isotropic_constant(m: &MomentData) -> Result<f64> {
    let n = m.dim() as f64;
    let ld = log_det_spd(&m.covariance).ok_or(Error::SingularCovariance)?;
    Ok(((ld - 2.0 * m.volume.ln()) / (2.0 * n)).exp())
}

/// Isotropic constant of the Euclidean ball in `R^n`.
pub fn ball_isotropic_constant(n: usize) -> f64 {
    let nf = n as f64;
    // cov = I/(n+2), vol = π^{n/2}/Γ(n/2+1).
    let ln_vol = 0.5 * nf * std::f64::consts::PI.ln() - crate::linalg::ln_gamma_half(n + 2);
    ((-nf * (nf + 2.0).ln() - 2.0 * ln_vol) / (2.0 * nf)).exp()
}

/// Isotropic constant of the simplex: `(n!)^{1/n} / ((n+1)^{(n+1)/(2n)} (n+2)^{1/2})`.
pub fn simplex_isotropic_constant(n: usize) -> f64 {
    let nf = n as f64;
    (crate::linalg::ln_factorial(n) / nf
        - (nf + 1.0) / (2.0 * nf) * (nf + 1.0).ln()
        - 0.5 * (nf + 2.0).ln())
    .exp()
}

/// Value of `E<X, Y>^2 = tr(M_K M_P)` and whether both barycenters were
/// negligible (in which case it equals `tr(cov_K cov_P)`).
#[derive(Clone, Copy, Debug)]
pub struct PhiValue {
    pub value: f64,
    pub centered: bool,
}

pub fn phi_functional(mk: &MomentData, mp: &MomentData) -> Result<PhiValue> {
    if mk.dim() != mp.dim() {
        return Err(Error::DimensionMismatch {
            expected: mk.dim(),
            got: mp.dim(),
        });
    }
    let value = (&mk.second_moment * &mp.second_moment).trace();
    let scale = mk
        .second_moment
        .trace()
        .sqrt()
        .max(mp.second_moment.trace().sqrt());
    let centered = mk.barycenter.norm() <= 1e-6 * scale && mp.barycenter.norm() <= 1e-6 * scale;
    Ok(PhiValue { value, centered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::builders::{cross, cube, simplex};

    #[test]
    fn standard_triangle() {
        let v = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let m = simplex_moments(&v).unwrap();
        assert!((m.volume - 0.5).abs() < 1e-15);
        assert!((m.barycenter[0] - 1.0 / 3.0).abs() < 1e-15);
        // ∫x^2 over the triangle is 1/12, so E x^2 = 1/6.
        assert!((m.second_moment[(0, 0)] - 1.0 / 6.0).abs() < 1e-15);
        assert!((m.second_moment[(0, 1)] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn cube_and_cross_moments() {
        for n in 1..=4 {
            let m = body_moments(&cube(n)).unwrap();
            assert!((m.volume - 2f64.powi(n as i32)).abs() < 1e-10);
            assert!((m.covariance.clone() - DMatrix::identity(n, n) / 3.0).amax() < 1e-12);
            let c = body_moments(&cross(n)).unwrap();
            let expect = 2.0 / ((n + 1) as f64 * (n + 2) as f64);
            assert!((c.covariance - DMatrix::identity(n, n) * expect).amax() < 1e-12);
        }
    }

    #[test]
    fn simplex_constant_matches_closed_form() {
        for n in 1..=6 {
            let m = body_moments(&simplex(n)).unwrap();
            let l = isotropic_constant(&m).unwrap();
            assert!((l - simplex_isotropic_constant(n)).abs() < 1e-9, "n = {n}");
        }
        assert!((simplex_isotropic_constant(1) - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn cube_cross_phi() {
        let n = 2;
        let phi = phi_functional(
            &body_moments(&cube(n)).unwrap(),
            &body_moments(&cross(n)).unwrap(),
        )
        .unwrap();
        assert!((phi.value - 1.0 / 9.0).abs() < 1e-14);
        assert!(phi.centered);
    }
}

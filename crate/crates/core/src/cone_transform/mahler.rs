//! Mahler volumes, the functional `J = Φ_{V*} - Φ_V*`, Santaló points and
//! the identities tying them to the Laplace transform.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::constants::kappa_mahler;
use super::laplace::{laplace_eval, laplace_value};
use super::legendre::{legendre, LegendreResult};
use super::section::section;
use crate::body::{PolyhedralCone, VPolytope};
use crate::error::{Error, Result};
use crate::linalg::{eigen_range, ln_factorial};
use crate::moments::{body_moments, isotropic_constant, MomentData};

/// Default Newton tolerance for the transforms in this module.
pub const NEWTON_TOL: f64 = 1e-12;

/// `s_p(K) = Vol(K - p) · Vol((K - p)°)`.
pub fn mahler_at(k: &VPolytope, p: &DVector<f64>) -> Result<f64> {
    let scale = k.outer_radius().max(1.0);
    if !k.contains(p, -1e-12 * scale) {
        return Err(Error::PointNotInterior);
    }
    let t = k.translate(p);
    let vol = body_moments(&t)?.volume;
    let polar = t.polar_body(1e-12)?;
    Ok(vol * body_moments(&polar)?.volume)
}

/// `J(x)` with its two parts and the Mahler volume it encodes.
#[derive(Clone, Debug, Serialize)]
pub struct JValue {
    pub j: f64,
    /// `Φ_{V*}(x)`.
    pub phi_dual: f64,
    /// `Φ_V*(x)`.
    pub phi_star: f64,
    /// `s̄(T_x) = exp(J - κ_mahler(n))`.
    pub mahler: f64,
    pub legendre: LegendreResult,
}

/// `J(x)` for `x ∈ int(V)`; `dual` must be `V*`.
pub fn j_functional(v: &PolyhedralCone, dual: &PolyhedralCone, x: &DVector<f64>) -> Result<JValue> {
    let n = v.ambient() - 1;
    let leg = legendre(v, x, NEWTON_TOL)?;
    let phi_dual = laplace_value(dual, x)?;
    let j = phi_dual - leg.value;
    Ok(JValue {
        j,
        phi_dual,
        phi_star: leg.value,
        mahler: (j - kappa_mahler(n)).exp(),
        legendre: leg,
    })
}

/// `∇J(x) = ∇Φ_{V*}(x) - ∇Φ_V*(x)`.
pub fn j_gradient(
    v: &PolyhedralCone,
    dual: &PolyhedralCone,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let leg = legendre(v, x, NEWTON_TOL)?;
    Ok(laplace_eval(dual, x)?.gradient - leg.argmax)
}

/// Mahler volume at the Santaló point, computed two ways.
#[derive(Clone, Debug, Serialize)]
pub struct SantaloResult {
    /// `s̄(K)`.
    pub mahler: f64,
    /// Santaló point from the Legendre transform on the dual of the cone
    /// over `K`.
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub point: DVector<f64>,
    /// Santaló point from direct minimization of `Vol((K - p)°)`.
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub direct_point: DVector<f64>,
    /// `s_p(K)` at the direct point.
    pub direct_mahler: f64,
    /// Relative disagreement of the two Mahler values.
    pub disagreement: f64,
}

/// Relative disagreement above which the two Santaló routes are reported.
pub const SANTALO_DIAGNOSTIC: f64 = 1e-5;

/// Santaló point via the cone: with `W = (cone over K)*` and `x = -e`, the
/// section `T_x` of `W* ` is `{1} × K` and `∇Φ_W*(x) / (n+1) = (1, p)`.
pub fn santalo_via_cone(k: &VPolytope) -> Result<DVector<f64>> {
    let n = k.dim();
    let v = PolyhedralCone::cone_over(k)?;
    let w = v.dual()?;
    let mut x = DVector::zeros(n + 1);
    x[0] = -1.0;
    let leg = legendre(&w, &x, NEWTON_TOL)?;
    let y = leg.argmax / (n + 1) as f64;
    Ok(y.rows(1, n).into_owned() / y[0])
}

/// Santaló point by Nelder–Mead on `p -> log Vol((K - p)°)`.
pub fn santalo_direct(k: &VPolytope, start: &DVector<f64>) -> Result<DVector<f64>> {
    let k = k.reduce();
    let scale = k.outer_radius().max(1.0);
    let f = |p: &[f64]| -> f64 {
        let p = DVector::from_row_slice(p);
        if !k.contains(&p, -1e-9 * scale) {
            return f64::INFINITY;
        }
        let t = k.translate(&p);
        match t.polar_body(1e-12).and_then(|q| body_moments(&q)) {
            Ok(m) => m.volume.ln(),
            Err(_) => f64::INFINITY,
        }
    };
    let width = k
        .facets()
        .offsets
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let step = 0.05 * width.abs().max(1e-3);
    let (p, _) = crate::optim::nelder_mead_restarts(f, start.as_slice(), step, 5);
    Ok(DVector::from_vec(p))
}

pub fn mahler_santalo(k: &VPolytope) -> Result<SantaloResult> {
    let k = k.reduce();
    let point = santalo_via_cone(&k)?;
    let mahler = mahler_at(&k, &point)?;
    let direct_point = santalo_direct(&k, &k.vertex_mean())?;
    let direct_mahler = mahler_at(&k, &direct_point)?;
    let disagreement = (mahler - direct_mahler).abs() / mahler;
    Ok(SantaloResult {
        mahler,
        point,
        direct_point,
        direct_mahler,
        disagreement,
    })
}

/// The three members of the product identity and their largest relative
/// discrepancy.
#[derive(Clone, Debug, Serialize)]
pub struct ProductIdentity {
    /// `s_{r x0}(K_{y0})`.
    pub section_mahler: f64,
    /// `s_{r y0}(T_{x0})`.
    pub dual_section_mahler: f64,
    /// `(-<x0,y0>)^{n+1} / (n!)^2 · e^{Φ_V(y0)} · e^{Φ_{V*}(x0)}`.
    pub laplace_product: f64,
    pub residual: f64,
}

pub fn product_identity_check(
    v: &PolyhedralCone,
    dual: &PolyhedralCone,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
) -> Result<ProductIdentity> {
    let n = v.ambient() - 1;
    let pair = x0.dot(y0);
    if !(pair < 0.0) {
        return Err(Error::OutsideDualInterior { min_product: pair });
    }
    let r = -1.0 / pair;
    let ky = section(v, y0)?;
    let s1 = mahler_at(&ky.body, &ky.to_chart(&(x0 * r)))?;
    let tx = section(dual, x0)?;
    let s2 = mahler_at(&tx.body, &tx.to_chart(&(y0 * r)))?;
    let lp = ((n + 1) as f64 * (-pair).ln() - 2.0 * ln_factorial(n)
        + laplace_value(v, y0)?
        + laplace_value(dual, x0)?)
    .exp();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let residual = rel(s1, s2).max(rel(s1, lp)).max(rel(s2, lp));
    Ok(ProductIdentity {
        section_mahler: s1,
        dual_section_mahler: s2,
        laplace_product: lp,
        residual,
    })
}

/// Outcome of the polarity check between `K_y - x` and `T_x - y`.
#[derive(Clone, Debug, Serialize)]
pub struct TildePolarity {
    /// Largest `<u, v> - 1` over vertex pairs (should be `<= 0`).
    pub max_pairing_excess: f64,
    /// Hausdorff distance between the vertex sets of `T_x - y` and of the
    /// polar of `K_y - x` mapped into `x^⊥`.
    pub vertex_gap: f64,
    pub holds: bool,
}

/// Checks that `T_x - y = { u ∈ x^⊥ : <u, v> <= 1 for all v ∈ K_y - x }`
/// for `x ∈ int(V)`, `y ∈ int(V*)` with `<x, y> = -1`.
pub fn tilde_polarity_check(
    v: &PolyhedralCone,
    dual: &PolyhedralCone,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Result<TildePolarity> {
    let ky = section(v, y)?;
    let tx = section(dual, x)?;
    let kt: Vec<DVector<f64>> = ky.ambient_vertices.iter().map(|z| z - x).collect();
    let tt: Vec<DVector<f64>> = tx.ambient_vertices.iter().map(|z| z - y).collect();
    let mut excess = f64::NEG_INFINITY;
    for u in &tt {
        for w in &kt {
            excess = excess.max(u.dot(w) - 1.0);
        }
    }
    // Polar of K̃ inside x^⊥: with a = Q_y^T v and c = Q_x^T u we have
    // <u, v> = c^T M a for M = Q_x^T Q_y, so K̃° = M^{-T} (chart polar).
    let kc = ky.body.translate(&ky.to_chart(x));
    let polar = kc.polar_vertices(1e-12)?;
    let m = tx.chart.transpose() * &ky.chart;
    let mt_inv = m
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("sections are not in duality".into()))?;
    let mapped: Vec<DVector<f64>> = polar.iter().map(|w| &mt_inv * w).collect();
    let tchart: Vec<DVector<f64>> = tt.iter().map(|u| tx.chart.transpose() * u).collect();
    let gap = hausdorff(&mapped, &tchart);
    let scale = tchart.iter().map(|c| c.norm()).fold(1.0, f64::max);
    Ok(TildePolarity {
        max_pairing_excess: excess,
        vertex_gap: gap,
        holds: excess <= tol && gap <= tol * scale,
    })
}

fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let one = |p: &[DVector<f64>], q: &[DVector<f64>]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    CandidateMin,
    CandidateMax,
    Saddle,
    /// The gradient does not vanish.
    NotStationary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stationarity {
    /// `(n+1) (0, b(K°))` for `K` centered at its barycenter.
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub grad_j: DVector<f64>,
    /// `(n+2) cov(K°) - cov(K)^{-1} / (n+2)` when the gradient vanishes.
    #[serde(serialize_with = "crate::ser::opt_matrix::serialize")]
    pub hessian_block: Option<DMatrix<f64>>,
    pub eigen_range: Option<(f64, f64)>,
    pub classification: Classification,
}

/// Gradient and Hessian of `J` at `e` for the cone over `K`, with `K`
/// translated to its barycenter.
pub fn projective_stationarity(k: &VPolytope, tol: f64) -> Result<Stationarity> {
    let n = k.dim();
    let nf = n as f64;
    let m = body_moments(k)?;
    let kc = k.translate(&m.barycenter);
    let mk = MomentData {
        barycenter: DVector::zeros(n),
        second_moment: m.covariance.clone(),
        ..m
    };
    let polar = kc
        .polar_body(1e-12)
        .map_err(|e| Error::BarycenterNotComputable(e.to_string()))?;
    let mp = body_moments(&polar).map_err(|e| Error::BarycenterNotComputable(e.to_string()))?;
    let mut grad_j = DVector::zeros(n + 1);
    grad_j
        .rows_mut(1, n)
        .copy_from(&(&mp.barycenter * (nf + 1.0)));
    let scale = mp.covariance.trace().sqrt();
    if mp.barycenter.norm() > tol * scale.max(1e-300) {
        return Ok(Stationarity {
            grad_j,
            hessian_block: None,
            eigen_range: None,
            classification: Classification::NotStationary,
        });
    }
    let cov_inv = mk
        .covariance
        .clone()
        .try_inverse()
        .ok_or(Error::SingularCovariance)?;
    let d = &mp.covariance * (nf + 2.0) - cov_inv / (nf + 2.0);
    let d = (&d + d.transpose()) * 0.5;
    let (lo, hi) = eigen_range(&d);
    let mag = (&mp.covariance * (nf + 2.0)).norm();
    let t = tol * mag;
    let classification = if lo >= -t && hi <= t {
        // D = 0: both a candidate minimum and maximum; report as minimum.
        Classification::CandidateMin
    } else if lo >= -t {
        Classification::CandidateMin
    } else if hi <= t {
        Classification::CandidateMax
    } else {
        Classification::Saddle
    };
    Ok(Stationarity {
        grad_j,
        hessian_block: Some(d),
        eigen_range: Some((lo, hi)),
        classification,
    })
}

/// `L_K · L_{K°} · s(K)^{1/n} - 1/(n+2)` with `K` centered at its barycenter.
pub fn theorem11_gap(k: &VPolytope) -> Result<f64> {
    let n = k.dim() as f64;
    let m = body_moments(k)?;
    let kc = k.translate(&m.barycenter);
    let mk = body_moments(&kc)?;
    let polar = kc.polar_body(1e-12)?;
    let mp = body_moments(&polar)?;
    let lk = isotropic_constant(&mk)?;
    let lp = isotropic_constant(&mp)?;
    let s = mk.volume * mp.volume;
    Ok(lk * lp * s.powf(1.0 / n) - 1.0 / (n + 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::builders::{cube, simplex};
    use crate::cone_transform::constants::simplex_mahler;

    #[test]
    fn simplex_and_square_mahler() {
        let s = simplex(2);
        let m = mahler_at(&s, &DVector::zeros(2)).unwrap();
        assert!((m - simplex_mahler(2)).abs() < 1e-12);
        let c = cube(2);
        assert!((mahler_at(&c, &DVector::zeros(2)).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn orthant_j_is_n_plus_one() {
        let v = PolyhedralCone::orthant(3);
        let d = v.dual().unwrap();
        let x = DVector::from_vec(vec![0.4, 1.3, 2.2]);
        let j = j_functional(&v, &d, &x).unwrap();
        assert!((j.j - 3.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_santalo_point_is_center() {
        let r = mahler_santalo(&cube(2)).unwrap();
        assert!(r.point.norm() < 1e-10);
        assert!((r.mahler - 8.0).abs() < 1e-10);
        assert!(r.disagreement < 1e-6);
    }
}

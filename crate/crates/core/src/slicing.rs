//! Search for a hyperplane section of the cone over `K` with small isotropic
//! constant, and the translate `T` of `K°`-duality it produces.
//!
//! With `H = ∇²Φ_V(y)`, `F(y) = log det H - 2 Φ_V(y)` and
//! `L_{K_y} = exp((F - log κ_iso(n)) / 2n)`. `F` is invariant under
//! `y -> t y`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::body::{HPolytope, PolyhedralCone, VPolytope};
use crate::cone_transform::{laplace_eval, laplace_eval3, ln_kappa_iso, section};
use crate::error::{Error, Result};
use crate::linalg::log_det_spd;
use crate::moments::{body_moments, isotropic_constant};

#[derive(Clone, Debug, Serialize)]
pub struct IsotropicValue {
    /// `F(y) = log det ∇²Φ_V(y) - 2 Φ_V(y)`.
    pub f: f64,
    /// `L_{K_y}`.
    pub l: f64,
}

fn l_from_f(f: f64, n: usize) -> f64 {
    ((f - ln_kappa_iso(n)) / (2.0 * n as f64)).exp()
}

pub fn isotropic_objective(v: &PolyhedralCone, y: &DVector<f64>) -> Result<IsotropicValue> {
    let n = v.ambient() - 1;
    let ev = laplace_eval(v, y)?;
    let ld = log_det_spd(&ev.hessian)
        .ok_or_else(|| Error::Degenerate("Hessian not positive definite".into()))?;
    let f = ld - 2.0 * ev.value;
    Ok(IsotropicValue {
        f,
        l: l_from_f(f, n),
    })
}

/// `F` and its gradient `∂_k F = tr(H^{-1} ∂_k H) - 2 ∂_k Φ`.
pub fn isotropic_gradient(v: &PolyhedralCone, y: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let (ev, third) = laplace_eval3(v, y)?;
    let ch = ev
        .hessian
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("Hessian not positive definite".into()))?;
    let ld = 2.0 * ch.l().diagonal().iter().map(|t| t.ln()).sum::<f64>();
    let hinv = ch.inverse();
    let grad = DVector::from_fn(v.ambient(), |k, _| {
        hinv.component_mul(&third[k]).sum() - 2.0 * ev.gradient[k]
    });
    Ok((ld - 2.0 * ev.value, grad))
}

/// `L_{K_y}` from exact moments of the section.
pub fn section_isotropic_constant(v: &PolyhedralCone, y: &DVector<f64>) -> Result<f64> {
    let s = section(v, y)?;
    isotropic_constant(&body_moments(&s.body)?)
}

/// `S = (y0 + V*) ∩ ((1+ε) y0 - V*)`.
#[derive(Clone, Debug)]
pub struct Slab {
    pub y0: DVector<f64>,
    pub eps: f64,
    /// Rows `<a, y> <= b`.
    pub normals: Vec<DVector<f64>>,
    pub offsets: Vec<f64>,
    pub vertices: Vec<DVector<f64>>,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

pub fn slab_region(v: &PolyhedralCone, y0: &DVector<f64>, eps: f64) -> Result<Slab> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Degenerate(format!(
            "slab width must be in (0, 1/2), got {eps}"
        )));
    }
    if !(v.max_ray_product(y0) < 0.0) {
        return Err(Error::OutsideDualInterior {
            min_product: v.max_ray_product(y0),
        });
    }
    let mut normals = Vec::new();
    let mut offsets = Vec::new();
    for g in v.rays() {
        let gn = g / g.norm();
        normals.push(gn.clone());
        offsets.push(gn.dot(y0));
        normals.push(-&gn);
        offsets.push(-(1.0 + eps) * gn.dot(y0));
    }
    let h = HPolytope::new(normals.clone(), offsets.clone());
    let vertices = h.vertices()?.to_vec();
    let d = v.ambient();
    let mut lo = DVector::from_element(d, f64::INFINITY);
    let mut hi = DVector::from_element(d, f64::NEG_INFINITY);
    for p in &vertices {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    Ok(Slab {
        y0: y0.clone(),
        eps,
        normals,
        offsets,
        vertices,
        lo,
        hi,
    })
}

impl Slab {
    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        let s = tol * self.y0.norm();
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, b)| a.dot(y) <= b + s)
    }

    /// Uniform sample by rejection from the bounding box of the vertices.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        loop {
            let y = DVector::from_fn(self.y0.len(), |i, _| {
                if self.hi[i] > self.lo[i] {
                    rng.random_range(self.lo[i]..self.hi[i])
                } else {
                    self.lo[i]
                }
            });
            if self.contains(&y, 0.0) {
                return y;
            }
        }
    }

    /// Largest `α` with `y + α d` in the slab.
    fn max_step(&self, y: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let mut a = f64::INFINITY;
        for (n, b) in self.normals.iter().zip(&self.offsets) {
            let nd = n.dot(d);
            if nd > 0.0 {
                a = a.min(((b - n.dot(y)) / nd).max(0.0));
            }
        }
        a
    }

    /// Removes from `d` the components pushing into nearly active faces.
    fn project_direction(&self, y: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
        let scale = 1e-6 * self.eps * self.y0.norm();
        let mut out = d.clone();
        for _ in 0..3 {
            let active: Vec<DVector<f64>> = self
                .normals
                .iter()
                .zip(&self.offsets)
                .filter(|(n, b)| *b - n.dot(y) <= scale && n.dot(&out) > 0.0)
                .map(|(n, _)| n.clone())
                .collect();
            if active.is_empty() {
                break;
            }
            let a = DMatrix::from_columns(&active);
            let gram = a.transpose() * &a;
            let Some(inv) = gram.pseudo_inverse(1e-12).ok() else {
                break;
            };
            out -= &a * (inv * (a.transpose() * &out));
        }
        out
    }
}

/// `min` of `-max facet product / |x|` and `(<x, y0> + n+1)/(n+1)` for
/// `x = ∇Φ_V(y)`: nonnegative iff `x ∈ (n+1) C_{y0}`.
pub fn gradient_containment_slack(
    v: &PolyhedralCone,
    y0: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    let m = (v.ambient()) as f64;
    let x = laplace_eval(v, y)?.gradient;
    let cone = -v.max_facet_product(&x) / x.norm();
    Ok(cone.min((x.dot(y0) + m) / m))
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub y: DVector<f64>,
    pub l: f64,
    /// `L_{K_{y0}}`.
    pub l_start: f64,
    pub starts: usize,
    pub iterations: usize,
}

pub const SEARCH_ITERATIONS: usize = 300;
const TO_BOUNDARY: f64 = 0.9;

fn descend(
    v: &PolyhedralCone,
    slab: &Slab,
    start: DVector<f64>,
) -> Result<(DVector<f64>, f64, usize)> {
    let mut y = start;
    let (mut f, mut g) = isotropic_gradient(v, &y)?;
    let mut alpha = 0.1 * y.norm() / g.norm().max(1e-300);
    let mut iters = 0;
    for _ in 0..SEARCH_ITERATIONS {
        iters += 1;
        let d = slab.project_direction(&y, &-&g);
        let slope = g.dot(&d);
        if d.norm() <= 1e-14 * g.norm().max(1e-300) || slope >= 0.0 {
            break;
        }
        let amax = slab.max_step(&y, &d);
        let mut a = alpha.min(TO_BOUNDARY * amax);
        let mut moved = false;
        for _ in 0..40 {
            let trial = &y + &d * a;
            if let Ok(val) = isotropic_objective(v, &trial) {
                if val.f <= f + 1e-4 * a * slope {
                    y = trial;
                    moved = true;
                    break;
                }
            }
            a *= 0.5;
        }
        if !moved {
            break;
        }
        alpha = 2.0 * a;
        let (nf, ng) = isotropic_gradient(v, &y)?;
        let done = (f - nf).abs() <= 1e-15 * f.abs().max(1.0);
        f = nf;
        g = ng;
        if done {
            break;
        }
    }
    Ok((y, f, iters))
}

/// Multistart projected gradient descent of `F` over the slab, from `y0`
/// and `budget - 1` uniform samples. Never worse than `y0`.
pub fn minimize_isotropic(
    v: &PolyhedralCone,
    y0: &DVector<f64>,
    eps: f64,
    budget: usize,
    seed: u64,
) -> Result<SearchResult> {
    let n = v.ambient() - 1;
    let slab = slab_region(v, y0, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![y0.clone()];
    for _ in 1..budget.max(1) {
        starts.push(slab.sample(&mut rng));
    }
    let f0 = isotropic_objective(v, y0)?.f;
    let runs: Vec<(DVector<f64>, f64, usize)> = starts
        .into_par_iter()
        .map(|s| descend(v, &slab, s))
        .collect::<Result<_>>()?;
    let iterations = runs.iter().map(|r| r.2).sum();
    // Ties and noise-level gains resolve to the earliest start.
    let mut best = (y0.clone(), f0);
    for (y, f, _) in runs {
        if f < best.1 - 1e-12 * best.1.abs().max(1.0) {
            best = (y, f);
        }
    }
    Ok(SearchResult {
        y: best.0,
        l: l_from_f(best.1, n),
        l_start: l_from_f(f0, n),
        starts: budget.max(1),
        iterations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SlicingCertificate {
    pub n: usize,
    /// Requested inclusion width.
    pub eps: f64,
    /// Width of the slab searched, `ε / (1 + ε)`.
    pub slab_eps: f64,
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub y: DVector<f64>,
    #[serde(serialize_with = "crate::ser::vectors::serialize")]
    pub t: Vec<DVector<f64>>,
    /// `π(y) / y_1`.
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub translation: DVector<f64>,
    pub l_t: f64,
    /// `1 - (1-ε) max_{v ∈ K} ‖v‖_T`.
    pub inner_margin: f64,
    /// `(1+ε) - max_{v ∈ T} ‖v‖_K`.
    pub outer_margin: f64,
    /// Support-function margins over vertex, facet and random directions.
    pub support_inner_margin: f64,
    pub support_outer_margin: f64,
    /// Hausdorff distance between the vertices of `T°` and `K° + π(y)/y_1`.
    pub polar_translate_residual: f64,
    /// Margins of `(1-ε)K° ⊆ T° ⊆ (1+ε)K°`.
    pub dual_inner_margin: f64,
    pub dual_outer_margin: f64,
    /// `max(‖π(y)‖_{K°}, ‖-π(y)‖_{K°})`, at most `ε_s` in the slab.
    pub pi_symmetric_gauge: f64,
}

/// `T = -y_1 π(K_y)`, i.e. vertices `v / (1 + <v, π(y)>/y_1)`.
pub fn translate_body(k: &VPolytope, y: &DVector<f64>) -> Result<VPolytope> {
    let n = k.dim();
    let y1 = y[0];
    let w = y.rows(1, n).into_owned() / y1;
    let pts: Vec<DVector<f64>> = k.vertices().iter().map(|v| v / (1.0 + v.dot(&w))).collect();
    VPolytope::new(pts)
}

/// `‖x‖_{π(K_y)}` against `-y_1 ‖x‖_K - <x, π(y)>`, largest absolute gap.
pub fn gauge_identity_residual(
    k: &VPolytope,
    y: &DVector<f64>,
    xs: &[DVector<f64>],
) -> Result<f64> {
    let n = k.dim();
    let v = PolyhedralCone::cone_over(k)?;
    let s = section(&v, y)?;
    let proj: Vec<DVector<f64>> = s
        .ambient_vertices
        .iter()
        .map(|z| z.rows(1, n).into_owned())
        .collect();
    let pk = VPolytope::new(proj)?;
    let pi = y.rows(1, n).into_owned();
    let mut worst: f64 = 0.0;
    for x in xs {
        let lhs = pk.gauge(x);
        let rhs = -y[0] * k.gauge(x) - x.dot(&pi);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
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

fn max_gauge(body: &VPolytope, pts: &[DVector<f64>]) -> f64 {
    pts.iter().map(|p| body.gauge(p)).fold(0.0, f64::max)
}

/// Builds `T` from `y` and re-verifies every clause with exact geometry.
/// `K` must contain the origin in its interior.
pub fn extract_translate(
    k: &VPolytope,
    y: &DVector<f64>,
    eps: f64,
    seed: u64,
) -> Result<SlicingCertificate> {
    let n = k.dim();
    let k = k.reduce();
    let slab_eps = eps / (1.0 + eps);
    if !(y[0] < 0.0) {
        return Err(Error::CertificateFailed("y_1 must be negative".into()));
    }
    let t = translate_body(&k, y)?.reduce();
    let translation = y.rows(1, n).into_owned() / y[0];

    // (b) inclusions, vertex form.
    let inner_margin = 1.0 - (1.0 - eps) * max_gauge(&t, k.vertices());
    let outer_margin = (1.0 + eps) - max_gauge(&k, t.vertices());

    // (b) inclusions, support form.
    let mut dirs: Vec<DVector<f64>> = k.vertices().to_vec();
    dirs.extend(k.facets().normals.iter().cloned());
    dirs.extend(t.facets().normals.iter().cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let u = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        dirs.push(u);
    }
    let mut s_in = f64::INFINITY;
    let mut s_out = f64::INFINITY;
    for u in &dirs {
        let hk = k.support(u);
        let ht = t.support(u);
        s_in = s_in.min((ht - (1.0 - eps) * hk) / hk);
        s_out = s_out.min(((1.0 + eps) * hk - ht) / hk);
    }

    // (a) T° = K° + π(y)/y_1.
    let kp = k.polar_body(1e-12)?;
    let tp = t.polar_body(1e-12)?;
    let shifted: Vec<DVector<f64>> = kp.vertices().iter().map(|v| v + &translation).collect();
    let polar_translate_residual = hausdorff(tp.vertices(), &shifted);
    let dual_outer_margin = (1.0 + eps) - max_gauge(&kp, tp.vertices());
    let dual_inner_margin = 1.0 - (1.0 - eps) * max_gauge(&tp, kp.vertices());
    let pi = y.rows(1, n).into_owned();
    let pi_symmetric_gauge = kp.gauge(&pi).max(kp.gauge(&-&pi));

    // (c) L_T.
    let l_t = isotropic_constant(&body_moments(&t)?)?;

    let cert = SlicingCertificate {
        n,
        eps,
        slab_eps,
        y: y.clone(),
        t: t.vertices().to_vec(),
        translation,
        l_t,
        inner_margin,
        outer_margin,
        support_inner_margin: s_in,
        support_outer_margin: s_out,
        polar_translate_residual,
        dual_inner_margin,
        dual_outer_margin,
        pi_symmetric_gauge,
    };
    let tol = 1e-9;
    if cert.inner_margin < -tol || cert.support_inner_margin < -tol {
        return Err(Error::CertificateFailed(format!(
            "(1-ε)K ⊄ T (margin {:.3e})",
            cert.inner_margin.min(cert.support_inner_margin)
        )));
    }
    if cert.outer_margin < -tol || cert.support_outer_margin < -tol {
        return Err(Error::CertificateFailed(format!(
            "T ⊄ (1+ε)K (margin {:.3e})",
            cert.outer_margin.min(cert.support_outer_margin)
        )));
    }
    if cert.polar_translate_residual > 1e-8 {
        return Err(Error::CertificateFailed(format!(
            "T° is not a translate of K° (residual {:.3e})",
            cert.polar_translate_residual
        )));
    }
    if !cert.l_t.is_finite() {
        return Err(Error::CertificateFailed("L_T is not finite".into()));
    }
    Ok(cert)
}

/// The full pipeline: center `K` at its barycenter, search the slab around
/// `y0 = -e` of width `ε/(1+ε)` on the cone over `K`, and certify `T`.
#[derive(Clone, Debug, Serialize)]
pub struct SlicingRun {
    pub search: SearchResult,
    pub certificate: SlicingCertificate,
}

pub fn slicing_pipeline(k: &VPolytope, eps: f64, budget: usize, seed: u64) -> Result<SlicingRun> {
    let n = k.dim();
    let m = body_moments(k)?;
    let kc = k.translate(&m.barycenter).reduce();
    let v = PolyhedralCone::cone_over(&kc)?;
    let mut y0 = DVector::zeros(n + 1);
    y0[0] = -1.0;
    let slab_eps = eps / (1.0 + eps);
    let search = minimize_isotropic(&v, &y0, slab_eps, budget, seed)?;
    // Normalize so that y_1 = -1 is not needed: T depends on π(y)/y_1 only.
    let certificate = extract_translate(&kc, &search.y, eps, seed)?;
    Ok(SlicingRun {
        search,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::simplex_isotropic_constant;

    #[test]
    fn orthant_determinant_route() {
        for n in 1..=5 {
            let v = PolyhedralCone::orthant(n + 1);
            let y = DVector::from_element(n + 1, -1.0);
            let l = isotropic_objective(&v, &y).unwrap().l;
            assert!((l - simplex_isotropic_constant(n)).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn pure_rescale_gives_k() {
        let k = crate::body::builders::cube(2);
        let y = DVector::from_vec(vec![-1.2, 0.0, 0.0]);
        let c = extract_translate(&k, &y, 0.25, 0).unwrap();
        assert!(c.translation.norm() == 0.0);
        assert!((c.outer_margin - 0.25).abs() < 1e-12);
    }
}

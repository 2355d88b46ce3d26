//! Geometric joins `K_1 ◇ K_2` and their behavior under polarity.
//!
//! The join lives in `H = { (t, x, -t, y) }` inside `R^{n_1 + n_2 + 2}`.
//! We work in the orthonormal chart `(τ, ξ, η)` with
//! `(t, x, -t, y) = (τ/√2, ξ, -τ/√2, η)`, where the join has vertices
//! `(1, √2 v, 0)` for `v ∈ vert K_1` and `(-1, 0, √2 w)` for `w ∈ vert K_2`,
//! and `π` flips the sign of `τ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::body::{PolyhedralCone, VPolytope};
use crate::cone_transform::{mahler_santalo, section};
use crate::error::Result;
use crate::linalg::{factorial, ln_factorial};

#[derive(Clone, Debug)]
pub struct JoinBody {
    pub n1: usize,
    pub n2: usize,
    /// Columns: orthonormal basis of `H` in `R^{n_1 + n_2 + 2}`.
    pub chart: DMatrix<f64>,
    /// The join in chart coordinates.
    pub body: VPolytope,
}

impl JoinBody {
    pub fn dim(&self) -> usize {
        self.n1 + self.n2 + 1
    }

    pub fn to_ambient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.chart * u
    }
}

fn join_chart(n1: usize, n2: usize) -> DMatrix<f64> {
    let big = n1 + n2 + 2;
    let mut q = DMatrix::zeros(big, n1 + n2 + 1);
    q[(0, 0)] = std::f64::consts::FRAC_1_SQRT_2;
    q[(n1 + 1, 0)] = -std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n1 {
        q[(1 + i, 1 + i)] = 1.0;
    }
    for j in 0..n2 {
        q[(n1 + 2 + j, 1 + n1 + j)] = 1.0;
    }
    q
}

fn join_vertices(k1: &VPolytope, k2: &VPolytope) -> Vec<DVector<f64>> {
    let (n1, n2) = (k1.dim(), k2.dim());
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(k1.vertices().len() + k2.vertices().len());
    for v in k1.vertices() {
        let mut p = DVector::zeros(n1 + n2 + 1);
        p[0] = 1.0;
        p.rows_mut(1, n1).copy_from(&(v * s));
        out.push(p);
    }
    for w in k2.vertices() {
        let mut p = DVector::zeros(n1 + n2 + 1);
        p[0] = -1.0;
        p.rows_mut(1 + n1, n2).copy_from(&(w * s));
        out.push(p);
    }
    out
}

pub fn geometric_join(k1: &VPolytope, k2: &VPolytope) -> Result<JoinBody> {
    let (k1, k2) = (k1.reduce(), k2.reduce());
    let body = VPolytope::new(join_vertices(&k1, &k2))?;
    Ok(JoinBody {
        n1: k1.dim(),
        n2: k2.dim(),
        chart: join_chart(k1.dim(), k2.dim()),
        body,
    })
}

/// The swap `π(t, x, -t, y) = (-t, x, t, y)` in chart coordinates.
pub fn pi_map(u: &DVector<f64>) -> DVector<f64> {
    let mut v = u.clone();
    v[0] = -v[0];
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct JoinPolarCheck {
    /// Two-sided vertex Hausdorff distance between `(K_1 ◇ K_2)°` and
    /// `π(K_1° ◇ K_2°)`.
    pub vertex_gap: f64,
    /// Largest support-function gap over the sampled directions.
    pub support_gap: f64,
    /// Largest `max(gauge) - 1` of either vertex set in the other body.
    pub vertex_in_polar: f64,
    pub residual: f64,
}

/// Compares `(K_1 ◇ K_2)°` with `π(K_1° ◇ K_2°)` in the chart of `H`.
pub fn join_polar_check(
    k1: &VPolytope,
    k2: &VPolytope,
    directions: &[DVector<f64>],
) -> Result<JoinPolarCheck> {
    let j = geometric_join(k1, k2)?;
    let lhs = j.body.polar_body(1e-12)?.reduce();
    let pj = geometric_join(&k1.polar_body(1e-12)?, &k2.polar_body(1e-12)?)?;
    let rhs_pts: Vec<DVector<f64>> = pj.body.vertices().iter().map(pi_map).collect();
    let rhs = VPolytope::new(rhs_pts)?.reduce();
    let vertex_gap = hausdorff(lhs.vertices(), rhs.vertices());
    let mut support_gap: f64 = 0.0;
    for d in directions {
        support_gap = support_gap.max((lhs.support(d) - rhs.support(d)).abs() / d.norm());
    }
    let mut inside = f64::NEG_INFINITY;
    for v in lhs.vertices() {
        inside = inside.max(rhs.gauge(v) - 1.0);
    }
    for v in rhs.vertices() {
        inside = inside.max(lhs.gauge(v) - 1.0);
    }
    let residual = vertex_gap.max(support_gap).max(inside.abs());
    Ok(JoinPolarCheck {
        vertex_gap,
        support_gap,
        vertex_in_polar: inside,
        residual,
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

/// `C_{n1,n2}` with `s̄(K_1 ◇ K_2) = C · s̄(K_1) · s̄(K_2)`.
pub fn join_constant(n1: usize, n2: usize) -> f64 {
    let ln = 2.0 * (ln_factorial(n1) + ln_factorial(n2) - ln_factorial(n1 + n2 + 1))
        + (n1 + n2 + 2) as f64 * ((n1 + n2 + 2) as f64).ln()
        - (n1 + 1) as f64 * ((n1 + 1) as f64).ln()
        - (n2 + 1) as f64 * ((n2 + 1) as f64).ln();
    ln.exp()
}

/// `C̃_{n1,n2} = n_1! n_2! / (n_1 + n_2)!` for Cartesian products.
pub fn product_constant(n1: usize, n2: usize) -> f64 {
    factorial(n1) * factorial(n2) / factorial(n1 + n2)
}

pub fn cartesian_product(k1: &VPolytope, k2: &VPolytope) -> Result<VPolytope> {
    let (k1, k2) = (k1.reduce(), k2.reduce());
    let (n1, n2) = (k1.dim(), k2.dim());
    let mut pts = Vec::with_capacity(k1.vertices().len() * k2.vertices().len());
    for v in k1.vertices() {
        for w in k2.vertices() {
            let mut p = DVector::zeros(n1 + n2);
            p.rows_mut(0, n1).copy_from(v);
            p.rows_mut(n1, n2).copy_from(w);
            pts.push(p);
        }
    }
    VPolytope::new(pts)
}

#[derive(Clone, Debug, Serialize)]
pub struct JoinMahlerCheck {
    pub factor_mahler: (f64, f64),
    pub join_mahler: f64,
    pub join_predicted: f64,
    pub join_residual: f64,
    pub product_mahler: f64,
    pub product_predicted: f64,
    pub product_residual: f64,
}

/// Relative residuals of the Mahler product formulas for joins and for
/// Cartesian products, all Mahler volumes taken at Santaló points.
pub fn join_mahler_check(k1: &VPolytope, k2: &VPolytope) -> Result<JoinMahlerCheck> {
    let (n1, n2) = (k1.dim(), k2.dim());
    let s1 = mahler_santalo(k1)?.mahler;
    let s2 = mahler_santalo(k2)?.mahler;
    let sj = mahler_santalo(&geometric_join(k1, k2)?.body)?.mahler;
    let sp = mahler_santalo(&cartesian_product(k1, k2)?)?.mahler;
    let pj = join_constant(n1, n2) * s1 * s2;
    let pp = product_constant(n1, n2) * s1 * s2;
    Ok(JoinMahlerCheck {
        factor_mahler: (s1, s2),
        join_mahler: sj,
        join_predicted: pj,
        join_residual: (sj - pj).abs() / pj,
        product_mahler: sp,
        product_predicted: pp,
        product_residual: (sp - pp).abs() / pp,
    })
}

/// Distance between the join's ambient vertices and `√2 (S - c)`, where `S`
/// is the section `t + s = 1` of the product of the cones over the factors
/// and `c = (1/2, 0, 1/2, 0)`.
pub fn join_slice_residual(k1: &VPolytope, k2: &VPolytope) -> Result<f64> {
    let (n1, n2) = (k1.dim(), k2.dim());
    let v = PolyhedralCone::cone_over(k1)?.product(&PolyhedralCone::cone_over(k2)?)?;
    let mut y = DVector::zeros(n1 + n2 + 2);
    y[0] = -1.0;
    y[n1 + 1] = -1.0;
    let s = section(&v, &y)?;
    let mut c = DVector::zeros(n1 + n2 + 2);
    c[0] = 0.5;
    c[n1 + 1] = 0.5;
    let lifted: Vec<DVector<f64>> = s
        .ambient_vertices
        .iter()
        .map(|z| (z - &c) * std::f64::consts::SQRT_2)
        .collect();
    let j = geometric_join(k1, k2)?;
    let amb: Vec<DVector<f64>> = j.body.vertices().iter().map(|u| j.to_ambient(u)).collect();
    Ok(hausdorff(&lifted, &amb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::builders::{cube, simplex};
    use crate::cone_transform::simplex_mahler;

    #[test]
    fn segment_join_is_tetrahedron() {
        let seg = cube(1);
        let j = geometric_join(&seg, &seg).unwrap();
        assert_eq!(j.body.vertices().len(), 4);
        assert!((join_constant(1, 1) - 4.0 / 9.0).abs() < 1e-14);
        assert!((join_constant(1, 1) * 16.0 - simplex_mahler(3)).abs() < 1e-12);
    }

    #[test]
    fn simplex_join_is_simplex() {
        let j = geometric_join(&simplex(2), &simplex(1)).unwrap();
        assert_eq!(j.body.dim(), 4);
        assert_eq!(j.body.vertices().len(), 5);
    }

    #[test]
    fn join_matches_product_slice() {
        assert!(join_slice_residual(&cube(2), &simplex(1)).unwrap() < 1e-12);
    }
}

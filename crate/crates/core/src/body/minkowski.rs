//! Membership in weighted Minkowski sums `Σ s_i B_i`.
//!
//! A split `x = Σ u_i` with `u_i ∈ s_i B_i` is searched by alternating
//! projections between the affine set `{Σ u_i = x}` and the product of the
//! scaled bodies. Every iterate also yields a candidate separating direction
//! `w`; the inequality `<w, x> > Σ s_i h_{B_i}(w)` certifies `x` is outside.

use nalgebra::DVector;

use super::oracle::{
    conv_cube_ball_gauge, Ball, ConvexOracle, CrossBallIntersection, CrossPolytope, Cube,
};
use crate::error::{Error, Result};

/// Bodies with a Euclidean projection and a support function.
pub trait Projectable: ConvexOracle {
    fn project(&self, x: &DVector<f64>) -> DVector<f64>;
    fn support(&self, u: &DVector<f64>) -> f64;
}

impl Projectable for Ball {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.center;
        let n = d.norm();
        if n <= self.radius {
            x.clone()
        } else {
            &self.center + d * (self.radius / n)
        }
    }
    fn support(&self, u: &DVector<f64>) -> f64 {
        self.center.dot(u) + self.radius * u.norm()
    }
}

impl Projectable for Cube {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| v.clamp(-self.half_width, self.half_width))
    }
    fn support(&self, u: &DVector<f64>) -> f64 {
        self.half_width * u.lp_norm(1)
    }
}

/// Euclidean projection onto `radius·B_1` by the sort-and-threshold rule.
pub fn project_l1_ball(x: &DVector<f64>, radius: f64) -> DVector<f64> {
    if x.lp_norm(1) <= radius {
        return x.clone();
    }
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.partial_cmp(p).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, v) in a.iter().enumerate() {
        cum += v;
        let t = (cum - radius) / (k + 1) as f64;
        if *v > t {
            theta = t;
        } else {
            break;
        }
    }
    x.map(|v| v.signum() * (v.abs() - theta).max(0.0))
}

impl Projectable for CrossPolytope {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        project_l1_ball(x, self.radius)
    }
    fn support(&self, u: &DVector<f64>) -> f64 {
        self.radius * u.amax()
    }
}

impl Projectable for CrossBallIntersection {
    /// Dykstra's algorithm on the two constraint sets.
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.contains(x, 0.0) {
            return x.clone();
        }
        let ball = |z: &DVector<f64>| {
            let n = z.norm();
            if n <= self.r {
                z.clone()
            } else {
                z * (self.r / n)
            }
        };
        let mut y = x.clone();
        let mut p = DVector::zeros(x.len());
        let mut q = DVector::zeros(x.len());
        for _ in 0..10_000 {
            let z = project_l1_ball(&(&y + &p), 1.0);
            p = &y + &p - &z;
            let y_next = ball(&(&z + &q));
            q = &z + &q - &y_next;
            let moved = (&y_next - &y).norm();
            y = y_next;
            if moved <= 1e-15 * (1.0 + y.norm()) {
                break;
            }
        }
        y
    }
    fn support(&self, u: &DVector<f64>) -> f64 {
        // h_{B_1 ∩ r B_2} is the gauge of conv(B_∞, B_2 / r).
        conv_cube_ball_gauge(u.as_slice(), 1.0 / self.r)
    }
}

/// Outcome of one split search at a fixed scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Split {
    Found,
    Separated,
}

const MAX_INNER: usize = 20_000;

fn split_search(x: &DVector<f64>, bodies: &[(f64, &dyn Projectable)], tol: f64) -> Result<Split> {
    let k = bodies.len() as f64;
    let mut u: Vec<DVector<f64>> = bodies.iter().map(|_| x / k).collect();
    let mut gap = f64::INFINITY;
    for it in 0..MAX_INNER {
        for ((s, b), ui) in bodies.iter().zip(u.iter_mut()) {
            if *s > 0.0 {
                *ui = b.project(&(&*ui / *s)) * *s;
            } else {
                ui.fill(0.0);
            }
        }
        let mut w = x.clone();
        for ui in &u {
            w -= ui;
        }
        gap = w.norm();
        if gap <= tol {
            return Ok(Split::Found);
        }
        let h: f64 = bodies.iter().map(|(s, b)| s * b.support(&w)).sum();
        if w.dot(x) > h + 1e-13 * w.norm() * x.norm() {
            return Ok(Split::Separated);
        }
        let _ = it;
        let corr = &w / k;
        for ui in u.iter_mut() {
            *ui += &corr;
        }
    }
    Err(Error::ToleranceNotReached {
        iterations: MAX_INNER,
        gap,
    })
}

/// Decide `x ∈ Σ s_i B_i`. Points within about `tol` of the boundary may be
/// classified either way; a stalled split search is reported as an error.
pub fn minkowski_membership(
    x: &DVector<f64>,
    bodies: &[(f64, &dyn Projectable)],
    tol: f64,
) -> Result<bool> {
    Ok(split_search(x, bodies, tol)? == Split::Found)
}

/// Gauge of `Σ s_i B_i` at `x` by bisection over the global scale; the sum
/// must contain the origin in its interior. Stalled inner searches are
/// treated as boundary points.
pub fn minkowski_gauge(x: &DVector<f64>, bodies: &[(f64, &dyn Projectable)], tol: f64) -> f64 {
    let n = x.norm();
    if n == 0.0 {
        return 0.0;
    }
    let inner: f64 = bodies.iter().map(|(s, b)| s * b.inner_radius()).sum();
    let outer: f64 = bodies.iter().map(|(s, b)| s * b.outer_radius()).sum();
    let (mut lo, mut hi) = (n / outer * 0.5, n / inner * 1.01);
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let scaled: Vec<(f64, &dyn Projectable)> =
            bodies.iter().map(|(s, b)| (s * mid, *b)).collect();
        match split_search(x, &scaled, 1e-3 * tol * n) {
            Ok(Split::Found) => hi = mid,
            Ok(Split::Separated) => lo = mid,
            Err(_) => return mid,
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_projection_lands_on_sphere() {
        let x = DVector::from_vec(vec![0.9, -0.6, 0.1]);
        let p = project_l1_ball(&x, 1.0);
        assert!((p.lp_norm(1) - 1.0).abs() < 1e-12);
        assert!((p - DVector::from_vec(vec![0.65, -0.35, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn half_cubes_sum_to_cube() {
        let c = Cube {
            n: 2,
            half_width: 1.0,
        };
        let bodies: [(f64, &dyn Projectable); 2] = [(0.5, &c), (0.5, &c)];
        for (p, inside) in [
            ([0.9, -0.95], true),
            ([1.05, 0.0], false),
            ([0.99, 1.02], false),
        ] {
            let x = DVector::from_row_slice(&p);
            assert_eq!(minkowski_membership(&x, &bodies, 1e-9).unwrap(), inside);
        }
        let g = minkowski_gauge(&DVector::from_vec(vec![0.5, 0.2]), &bodies, 1e-9);
        assert!((g - 0.5).abs() < 1e-7);
    }
}

//! Membership-oracle bodies for the non-polytopal cases.

use nalgebra::DVector;

use super::VPolytope;

/// A convex body known through a membership test and two radii:
/// `ball(interior_point, inner_radius) ⊆ K ⊆ ball(0, outer_radius)`.
pub trait ConvexOracle: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool;
    fn interior_point(&self) -> DVector<f64>;
    fn inner_radius(&self) -> f64;
    fn outer_radius(&self) -> f64;

    /// Gauge with respect to the origin, by bisection along the ray.
    /// Assumes the origin is interior.
    fn gauge(&self, x: &DVector<f64>, tol: f64) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        // x / lambda is inside for lambda >= hi, outside for lambda <= lo.
        let mut lo = n / (2.0 * self.outer_radius());
        let mut hi = n / self.inner_radius().min(self.outer_radius());
        while hi - lo > tol * hi {
            let mid = 0.5 * (lo + hi);
            if self.contains(&(x / mid), 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Parameters `(a, b)` with `p + s d` in the body exactly for
    /// `s ∈ [a, b]`, found by bisection. `p` must be interior.
    fn chord(&self, p: &DVector<f64>, d: &DVector<f64>, tol: f64) -> (f64, f64) {
        let span = 2.0 * self.outer_radius() / d.norm();
        let mut ends = [0.0; 2];
        for (k, sign) in [-1.0, 1.0].into_iter().enumerate() {
            let mut lo = 0.0;
            let mut hi = span;
            while hi - lo > tol * span {
                let mid = 0.5 * (lo + hi);
                if self.contains(&(p + d * (sign * mid)), 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ends[k] = sign * lo;
        }
        (ends[0], ends[1])
    }
}

/// Euclidean ball `center + radius·B_2^n`.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: DVector<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn unit(n: usize) -> Self {
        Self {
            center: DVector::zeros(n),
            radius: 1.0,
        }
    }
}

impl ConvexOracle for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (x - &self.center).norm() <= self.radius + tol
    }
    fn interior_point(&self) -> DVector<f64> {
        self.center.clone()
    }
    fn inner_radius(&self) -> f64 {
        self.radius
    }
    fn outer_radius(&self) -> f64 {
        self.center.norm() + self.radius
    }
}

/// `half_width · B_∞^n`.
#[derive(Clone, Debug)]
pub struct Cube {
    pub n: usize,
    pub half_width: f64,
}

impl ConvexOracle for Cube {
    fn dim(&self) -> usize {
        self.n
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.amax() <= self.half_width + tol
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.n)
    }
    fn inner_radius(&self) -> f64 {
        self.half_width
    }
    fn outer_radius(&self) -> f64 {
        self.half_width * (self.n as f64).sqrt()
    }
    fn gauge(&self, x: &DVector<f64>, _tol: f64) -> f64 {
        x.amax() / self.half_width
    }
}

/// `radius · B_1^n`.
#[derive(Clone, Debug)]
pub struct CrossPolytope {
    pub n: usize,
    pub radius: f64,
}

impl ConvexOracle for CrossPolytope {
    fn dim(&self) -> usize {
        self.n
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.lp_norm(1) <= self.radius + tol
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.n)
    }
    fn inner_radius(&self) -> f64 {
        self.radius / (self.n as f64).sqrt()
    }
    fn outer_radius(&self) -> f64 {
        self.radius
    }
    fn gauge(&self, x: &DVector<f64>, _tol: f64) -> f64 {
        x.lp_norm(1) / self.radius
    }
}

/// `B_1^n ∩ r·B_2^n`.
#[derive(Clone, Debug)]
pub struct CrossBallIntersection {
    pub n: usize,
    pub r: f64,
}

impl ConvexOracle for CrossBallIntersection {
    fn dim(&self) -> usize {
        self.n
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.lp_norm(1) <= 1.0 + tol && x.norm() <= self.r + tol
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.n)
    }
    fn inner_radius(&self) -> f64 {
        (1.0 / (self.n as f64).sqrt()).min(self.r)
    }
    fn outer_radius(&self) -> f64 {
        self.r.min(1.0)
    }
    fn gauge(&self, x: &DVector<f64>, _tol: f64) -> f64 {
        x.lp_norm(1).max(x.norm() / self.r)
    }
}

/// `conv(B_∞^n, rho·B_2^n)`.
#[derive(Clone, Debug)]
pub struct ConvCubeBall {
    pub n: usize,
    pub rho: f64,
}

impl ConvCubeBall {
    /// Exact gauge: the infimal convolution `min_s [s + d(s)/rho]` of the two
    /// gauges, where `d(s)` is the distance from `x` to `s·B_∞`.
    pub fn exact_gauge(&self, x: &DVector<f64>) -> f64 {
        conv_cube_ball_gauge(x.as_slice(), self.rho)
    }
}

/// Gauge of `conv(B_∞, rho·B_2)` at `x`.
///
/// `f(s) = s + sqrt(sum (|x_i| - s)_+^2) / rho` is convex in `s`; its
/// derivative changes sign on one interval between consecutive sorted
/// `|x_i|`, then bisected.
pub fn conv_cube_ball_gauge(x: &[f64], rho: f64) -> f64 {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.partial_cmp(p).unwrap());
    let n = a.len();
    if n == 0 || a[0] == 0.0 {
        return 0.0;
    }
    // With the k largest entries above s: d(s)^2 = sum_{i<k} (a_i - s)^2.
    let d_of = |s: f64, k: usize| -> f64 {
        a[..k]
            .iter()
            .map(|&v| (v - s) * (v - s))
            .sum::<f64>()
            .sqrt()
    };
    // Left derivative of f at s, valid for a[k] <= s <= a[k-1].
    let fprime = |s: f64, k: usize| -> f64 {
        let d = d_of(s, k);
        if d <= 0.0 {
            // All active entries equal s.
            return 1.0 - (k as f64).sqrt() / rho;
        }
        1.0 - a[..k].iter().map(|&v| v - s).sum::<f64>() / (rho * d)
    };
    let value = |s: f64, k: usize| s + d_of(s, k) / rho;
    // Walk the intervals [a[k], a[k-1]] (k active entries) from large s to
    // small; by convexity the first one where f' turns negative holds the
    // minimizer.
    for k in 1..=n {
        let hi = a[k - 1];
        let lo = if k < n { a[k] } else { 0.0 };
        if hi <= lo {
            continue;
        }
        if fprime(hi, k) <= 0.0 {
            return value(hi, k);
        }
        if fprime(lo, k) >= 0.0 {
            continue;
        }
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if fprime(m, k) < 0.0 {
                l = m;
            } else {
                h = m;
            }
            if h - l <= 1e-16 * hi {
                break;
            }
        }
        return value(0.5 * (l + h), k);
    }
    d_of(0.0, n) / rho
}

impl ConvexOracle for ConvCubeBall {
    fn dim(&self) -> usize {
        self.n
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.exact_gauge(x) <= 1.0 + tol
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.n)
    }
    fn inner_radius(&self) -> f64 {
        self.rho.max(1.0)
    }
    fn outer_radius(&self) -> f64 {
        self.rho.max((self.n as f64).sqrt())
    }
    fn gauge(&self, x: &DVector<f64>, _tol: f64) -> f64 {
        self.exact_gauge(x)
    }
}

/// A V-polytope viewed through its facet inequalities.
pub struct PolytopeOracle {
    pub body: VPolytope,
    inner: f64,
    center: DVector<f64>,
}

impl PolytopeOracle {
    pub fn new(body: VPolytope) -> Self {
        let center = body.vertex_mean();
        let f = body.facets();
        let inner = f
            .normals
            .iter()
            .zip(&f.offsets)
            .map(|(a, b)| b - a.dot(&center))
            .fold(f64::INFINITY, f64::min);
        Self {
            body,
            inner,
            center,
        }
    }
}

impl ConvexOracle for PolytopeOracle {
    fn dim(&self) -> usize {
        self.body.dim()
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.body.contains(x, tol)
    }
    fn interior_point(&self) -> DVector<f64> {
        self.center.clone()
    }
    fn inner_radius(&self) -> f64 {
        self.inner
    }
    fn outer_radius(&self) -> f64 {
        self.body.outer_radius()
    }
    fn gauge(&self, x: &DVector<f64>, _tol: f64) -> f64 {
        self.body.gauge(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_gauge_limits() {
        // Points of the cube and of the ball are on or inside the hull.
        let x = [1.0, 1.0, 1.0];
        assert!(
            (conv_cube_ball_gauge(&x, 1.0) - 1.0).abs() < 1e-12,
            "{}",
            conv_cube_ball_gauge(&x, 1.0)
        );
        let y = [3.0, 0.0, 0.0];
        assert!((conv_cube_ball_gauge(&y, 2.0) - 1.5).abs() < 1e-12);
        // Midpoint of (1,1) and (0, 2): on the boundary of conv(B_inf, 2 B_2)
        // in the plane only if the segment is an edge; gauge at most 1.
        let z = [0.5, 1.5];
        assert!(conv_cube_ball_gauge(&z, 2.0) <= 1.0 + 1e-12);
    }

    #[test]
    fn bisection_gauge_matches_closed_form() {
        let b = CrossBallIntersection { n: 4, r: 0.6 };
        let x = DVector::from_vec(vec![0.3, -0.1, 0.2, 0.05]);
        let exact = b.gauge(&x, 0.0);
        let generic = ConvexOracle::gauge(&Ball::unit(4), &x, 1e-12);
        assert!((generic - x.norm()).abs() < 1e-10);
        let bis = {
            struct Wrap<'a>(&'a CrossBallIntersection);
            impl ConvexOracle for Wrap<'_> {
                fn dim(&self) -> usize {
                    self.0.dim()
                }
                fn contains(&self, x: &DVector<f64>, t: f64) -> bool {
                    self.0.contains(x, t)
                }
                fn interior_point(&self) -> DVector<f64> {
                    self.0.interior_point()
                }
                fn inner_radius(&self) -> f64 {
                    self.0.inner_radius()
                }
                fn outer_radius(&self) -> f64 {
                    self.0.outer_radius()
                }
            }
            Wrap(&b).gauge(&x, 1e-13)
        };
        assert!((bis - exact).abs() < 1e-10);
    }

    #[test]
    fn chord_of_unit_ball() {
        let b = Ball::unit(3);
        let p = DVector::from_vec(vec![0.5, 0.0, 0.0]);
        let d = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let (a, c) = b.chord(&p, &d, 1e-13);
        assert!((a + 1.5).abs() < 1e-9 && (c - 0.5).abs() < 1e-9);
    }
}

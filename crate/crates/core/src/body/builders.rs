//! Standard test bodies.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::VPolytope;
use crate::linalg::orthonormal_complement;

/// Regular simplex whose vertices sum to zero, with unit circumradius.
pub fn simplex(n: usize) -> VPolytope {
    let ones = DVector::from_element(n + 1, 1.0);
    let chart = orthonormal_complement(&ones);
    let scale = ((n + 1) as f64 / n as f64).sqrt();
    let verts = (0..=n)
        .map(|i| {
            let mut e = DVector::from_element(n + 1, -1.0 / (n + 1) as f64);
            e[i] += 1.0;
            chart.transpose() * e * scale
        })
        .collect();
    VPolytope::new(verts).expect("simplex is full-dimensional")
}

/// `conv(0, e_1, …, e_n)`.
pub fn standard_simplex(n: usize) -> VPolytope {
    let mut verts = vec![DVector::zeros(n)];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        verts.push(e);
    }
    VPolytope::new(verts).expect("standard simplex is full-dimensional")
}

/// `[-1, 1]^n`.
pub fn cube(n: usize) -> VPolytope {
    let verts = (0..1usize << n)
        .map(|mask| DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }))
        .collect();
    VPolytope::new(verts).expect("cube is full-dimensional")
}

/// `B_1^n = conv(±e_i)`.
pub fn cross(n: usize) -> VPolytope {
    let mut verts = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            verts.push(e);
        }
    }
    VPolytope::new(verts).expect("cross-polytope is full-dimensional")
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Hull of `m` random points on the unit sphere, translated so the vertex
/// mean is the origin. Resamples until the points span `R^n`.
pub fn random_polytope(n: usize, m: usize, seed: u64) -> VPolytope {
    assert!(m > n, "need at least n+1 points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pts: Vec<DVector<f64>> = (0..m)
            .map(|_| {
                let g = gaussian(n, &mut rng);
                &g / g.norm()
            })
            .collect();
        if let Ok(p) = VPolytope::new(pts) {
            let c = p.vertex_mean();
            return p.translate(&c).reduce();
        }
    }
}

/// Inner polytope approximation of the unit `l_p` ball.
#[derive(Clone, Debug)]
pub struct LpBallApprox {
    pub body: VPolytope,
    pub p: f64,
    /// Always true: the polytope is only an approximation of the `l_p` ball.
    pub approximate: bool,
}

/// `l_p` ball approximated by the hull of `points` random boundary points
/// together with `±e_i`.
pub fn lp_ball_approx(n: usize, p: f64, points: usize, seed: u64) -> LpBallApprox {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verts = cross(n).vertices().to_vec();
    for _ in 0..points {
        let g = gaussian(n, &mut rng);
        verts.push(&g / g.lp_norm_f(p));
    }
    LpBallApprox {
        body: VPolytope::new(verts)
            .expect("contains the cross-polytope")
            .reduce(),
        p,
        approximate: true,
    }
}

trait LpNorm {
    fn lp_norm_f(&self, p: f64) -> f64;
}

impl LpNorm for DVector<f64> {
    fn lp_norm_f(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.amax();
        }
        self.iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// A regular simplex with vertex 0 cut off and every vertex jittered by up to
/// `jitter`, recentered at the vertex mean. Neither symmetric nor a simplex.
pub fn perturbed_simplex(n: usize, jitter: f64, seed: u64) -> VPolytope {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = simplex(n);
    let v = base.vertices();
    let mut verts: Vec<DVector<f64>> = v[1..].to_vec();
    for w in &v[1..] {
        verts.push(&v[0] + (w - &v[0]) * 0.3);
    }
    let u = Uniform::new(-jitter, jitter).expect("jitter must be positive");
    for p in verts.iter_mut() {
        for c in p.iter_mut() {
            *c += u.sample(&mut rng);
        }
    }
    let p = VPolytope::new(verts).expect("perturbed simplex is full-dimensional");
    let c = p.vertex_mean();
    p.translate(&c).reduce()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_vertices_sum_to_zero() {
        let s = simplex(3);
        assert_eq!(s.vertices().len(), 4);
        let sum: DVector<f64> = s.vertices().iter().sum();
        assert!(sum.norm() < 1e-12);
        for v in s.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_polytope_is_reproducible() {
        let a = random_polytope(3, 12, 5);
        let b = random_polytope(3, 12, 5);
        assert_eq!(a.vertices(), b.vertices());
        assert!(a.origin_margin() > 0.0);
    }

    #[test]
    fn perturbed_simplex_has_more_vertices() {
        let p = perturbed_simplex(4, 0.05, 1);
        assert_eq!(p.vertices().len(), 8);
    }
}

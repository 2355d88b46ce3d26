//! An unconditional body with `E<X, Y>^2` bounded below independently of
//! the dimension.
//!
//! Coordinates are `(t, x) ∈ R × R^{n-1}`. With `K_0 = B_1^{n-1}` and
//! `K_1 = K_0 ∩ √(3/n) B_2^{n-1}`,
//! `K = { |t| <= 1, x ∈ (1-|t|) K_0 + |t| K_1 }` and
//! `K° = { |t| <= 1, x ∈ B_∞^{n-1} ∩ (1-|t|) K_1° }` with
//! `K_1° = conv(B_∞, √(n/3) B_2)`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::body::oracle::conv_cube_ball_gauge;
use crate::body::ConvexOracle;
use crate::moments::mc::{split_budget, stream_rng, MCEstimate, STREAMS};

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleBody {
    pub n: usize,
    /// `√(3/n)`, the radius of the ball in `K_1`.
    pub r: f64,
}

pub fn build_counterexample(n: usize) -> CounterexampleBody {
    assert!(n >= 2, "the construction needs n >= 2");
    CounterexampleBody {
        n,
        r: (3.0 / n as f64).sqrt(),
    }
}

/// `max Σ z_i` over `0 <= z <= a`, `|z|_2 <= rho`: water-filling
/// `z_i = min(a_i, λ)`. `a` must be sorted in decreasing order.
fn water_fill(a: &[f64], rho: f64) -> f64 {
    let total2: f64 = a.iter().map(|v| v * v).sum();
    if total2 <= rho * rho {
        return a.iter().sum();
    }
    // With the k largest entries capped at λ: k λ^2 + tail2 = rho^2.
    let m = a.len();
    let mut tail2 = total2;
    let mut tail1: f64 = a.iter().sum();
    for k in 1..=m {
        tail2 -= a[k - 1] * a[k - 1];
        tail1 -= a[k - 1];
        let lam2 = (rho * rho - tail2) / k as f64;
        let next = if k < m { a[k] } else { 0.0 };
        if lam2 >= next * next {
            return k as f64 * lam2.max(0.0).sqrt() + tail1;
        }
    }
    (m as f64).sqrt() * rho
}

impl CounterexampleBody {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Exact test `x ∈ a K_0 + b K_1`: the best split keeps signs, so it is
    /// `|x|_1 - max{ Σ z : 0 <= z <= |x|, |z|_2 <= b r, Σ z <= b } <= a`.
    pub fn section_contains(&self, t: f64, x: &[f64], tol: f64) -> bool {
        let a = 1.0 - t.abs();
        let b = t.abs();
        let mut ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let l1: f64 = ax.iter().sum();
        if l1 <= a + tol {
            return true;
        }
        if b == 0.0 {
            return false;
        }
        ax.sort_by(|p, q| q.partial_cmp(p).unwrap());
        let moved = water_fill(&ax, b * self.r).min(b);
        l1 - moved <= a + tol
    }

    pub fn contains_k(&self, p: &DVector<f64>, tol: f64) -> bool {
        p[0].abs() <= 1.0 + tol
            && self.section_contains(p[0].clamp(-1.0, 1.0), &p.as_slice()[1..], tol)
    }

    /// `K_1°` gauge scaled by `1 - |t|`, together with the cube constraint.
    pub fn polar_section_contains(&self, t: f64, x: &[f64], tol: f64) -> bool {
        if x.iter().any(|v| v.abs() > 1.0 + tol) {
            return false;
        }
        let rho = 1.0 / self.r;
        conv_cube_ball_gauge(x, rho) <= (1.0 - t.abs()) * (1.0 + tol) + tol
    }

    pub fn contains_polar(&self, p: &DVector<f64>, tol: f64) -> bool {
        p[0].abs() <= 1.0 + tol && self.polar_section_contains(p[0], &p.as_slice()[1..], tol)
    }

    pub fn oracle(&self) -> CounterexampleOracle<'_> {
        CounterexampleOracle {
            body: self,
            polar: false,
        }
    }

    pub fn polar_oracle(&self) -> CounterexampleOracle<'_> {
        CounterexampleOracle {
            body: self,
            polar: true,
        }
    }
}

/// `K` or `K°` as a [`ConvexOracle`].
pub struct CounterexampleOracle<'a> {
    body: &'a CounterexampleBody,
    polar: bool,
}

impl ConvexOracle for CounterexampleOracle<'_> {
    fn dim(&self) -> usize {
        self.body.n
    }
    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if self.polar {
            self.body.contains_polar(x, tol)
        } else {
            self.body.contains_k(x, tol)
        }
    }
    fn interior_point(&self) -> DVector<f64> {
        DVector::zeros(self.body.n)
    }
    fn inner_radius(&self) -> f64 {
        // Every section contains K_1 ⊇ min(r, 1)/√(n-1) · B_2, and the
        // sections of K° contain (1 - |t|) B_∞.
        if self.polar {
            0.5
        } else {
            self.body.r.min(1.0) / (self.body.n as f64).sqrt()
        }
    }
    fn outer_radius(&self) -> f64 {
        if self.polar {
            (self.body.n as f64).sqrt()
        } else {
            2f64.sqrt()
        }
    }
}

fn uniform_l1_ball(m: usize, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let mut total = 0.0;
    for v in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *v = if rng.random::<bool>() { e } else { -e };
        total += e;
    }
    total += rng.sample::<f64, _>(Exp1);
    debug_assert_eq!(out.len(), m);
    for v in out.iter_mut() {
        *v /= total;
    }
}

/// Second moments along the distinguished axis and `φ`.
#[derive(Clone, Debug, Serialize)]
pub struct X1Moments {
    pub n: usize,
    /// `E_K[t^2]`.
    pub m_k: MCEstimate<f64>,
    /// `E_{K°}[t^2]`.
    pub m_polar: MCEstimate<f64>,
    /// `E_K[x_i^2]` averaged over `i >= 2`.
    pub m_k_rest: MCEstimate<f64>,
    pub m_polar_rest: MCEstimate<f64>,
    /// `E_K[t^2] · E_{K°}[t^2]`.
    pub product_bound: f64,
    /// `Tr[cov K · cov K°]`, both covariances diagonal.
    pub phi: MCEstimate<f64>,
    /// `n / (n+2)^2`.
    pub conjectured_max: f64,
    pub acceptance_k: f64,
    pub acceptance_polar: f64,
}

struct Moments2 {
    count: usize,
    drawn: usize,
    t2: (f64, f64),
    rest: (f64, f64),
}

impl Moments2 {
    fn merge(mut self, o: &Self) -> Self {
        self.count += o.count;
        self.drawn += o.drawn;
        self.t2.0 += o.t2.0;
        self.t2.1 += o.t2.1;
        self.rest.0 += o.rest.0;
        self.rest.1 += o.rest.1;
        self
    }

    fn estimates(&self, samples: usize, seed: u64) -> (MCEstimate<f64>, MCEstimate<f64>) {
        let c = self.count as f64;
        let est = |(s, s2): (f64, f64)| {
            let mean = s / c;
            let var = (s2 / c - mean * mean).max(0.0);
            MCEstimate {
                value: mean,
                std_error: (var / c).sqrt(),
                samples,
                seed,
            }
        };
        (est(self.t2), est(self.rest))
    }
}

/// Exact rejection sampling from the cylinders `[-1,1] × B_1^{n-1}` (for `K`)
/// and `[-1,1] × B_∞^{n-1}` (for `K°`).
fn sample_second_moments(
    body: &CounterexampleBody,
    samples: usize,
    seed: u64,
    polar: bool,
) -> Moments2 {
    let m = body.n - 1;
    split_budget(samples, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(k, want)| {
            let mut rng = stream_rng(seed, k + if polar { 1000 } else { 0 });
            let mut x = vec![0.0; m];
            let mut acc = Moments2 {
                count: 0,
                drawn: 0,
                t2: (0.0, 0.0),
                rest: (0.0, 0.0),
            };
            while acc.count < want {
                acc.drawn += 1;
                let t: f64 = rng.random_range(-1.0..1.0);
                let inside = if polar {
                    for v in x.iter_mut() {
                        *v = rng.random_range(-1.0..1.0);
                    }
                    body.polar_section_contains(t, &x, 0.0)
                } else {
                    uniform_l1_ball(m, &mut rng, &mut x);
                    body.section_contains(t, &x, 0.0)
                };
                if inside {
                    acc.count += 1;
                    let a = t * t;
                    acc.t2.0 += a;
                    acc.t2.1 += a * a;
                    let r = x.iter().map(|v| v * v).sum::<f64>() / m as f64;
                    acc.rest.0 += r;
                    acc.rest.1 += r * r;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| a.merge(&b))
        .expect("at least one stream")
}

pub fn x1_second_moments(body: &CounterexampleBody, samples: usize, seed: u64) -> X1Moments {
    let n = body.n;
    let k = sample_second_moments(body, samples, seed, false);
    let p = sample_second_moments(body, samples, seed, true);
    let (m_k, m_k_rest) = k.estimates(samples, seed);
    let (m_polar, m_polar_rest) = p.estimates(samples, seed);
    let rest = (n - 1) as f64;
    let phi_value = m_k.value * m_polar.value + rest * m_k_rest.value * m_polar_rest.value;
    // Delta method, the four estimates treated as independent.
    let phi_err = ((m_polar.value * m_k.std_error).powi(2)
        + (m_k.value * m_polar.std_error).powi(2)
        + (rest * m_polar_rest.value * m_k_rest.std_error).powi(2)
        + (rest * m_k_rest.value * m_polar_rest.std_error).powi(2))
    .sqrt();
    X1Moments {
        n,
        product_bound: m_k.value * m_polar.value,
        phi: MCEstimate {
            value: phi_value,
            std_error: phi_err,
            samples,
            seed,
        },
        conjectured_max: n as f64 / ((n + 2) as f64).powi(2),
        acceptance_k: k.count as f64 / k.drawn as f64,
        acceptance_polar: p.count as f64 / p.drawn as f64,
        m_k,
        m_polar,
        m_k_rest,
        m_polar_rest,
    }
}

/// `Vol_{n-1}(section at t) / Vol_{n-1}(K_0)`, estimated by sampling `K_0`.
pub fn section_volume_ratio(
    body: &CounterexampleBody,
    t: f64,
    samples: usize,
    seed: u64,
) -> MCEstimate<f64> {
    let m = body.n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; m];
    let mut hits = 0usize;
    for _ in 0..samples {
        uniform_l1_ball(m, &mut rng, &mut x);
        if body.section_contains(t, &x, 0.0) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    MCEstimate {
        value: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResult {
    pub n: usize,
    pub trials: usize,
    /// Empirical `P(|Z| <= √(3n/10))`.
    pub probability: MCEstimate<f64>,
    /// Empirical `E[Z_i^2]`, against the bound `1/4`.
    pub mean_z2: MCEstimate<f64>,
}

/// `X` uniform in `[-1,1]^{n-1}`, `Y_i` the clipping of `2X_i` to
/// `[-8/9, 8/9]`, `Z = 2X - Y`.
pub fn lemma_decomposition_experiment(n: usize, trials: usize, seed: u64) -> DecompositionResult {
    let m = n - 1;
    let radius2 = 3.0 * n as f64 / 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..trials {
        let mut z2 = 0.0;
        for _ in 0..m {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y = (2.0 * x).clamp(-8.0 / 9.0, 8.0 / 9.0);
            let z = 2.0 * x - y;
            z2 += z * z;
        }
        if z2 <= radius2 {
            hits += 1;
        }
        let per = z2 / m as f64;
        s += per;
        s2 += per * per;
    }
    let t = trials as f64;
    let p = hits as f64 / t;
    let mean = s / t;
    DecompositionResult {
        n,
        trials,
        probability: MCEstimate {
            value: p,
            std_error: (p * (1.0 - p) / t).sqrt(),
            samples: trials,
            seed,
        },
        mean_z2: MCEstimate {
            value: mean,
            std_error: ((s2 / t - mean * mean).max(0.0) / t).sqrt(),
            samples: trials,
            seed,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_fill_small_cases() {
        assert!((water_fill(&[0.3, 0.2], 1.0) - 0.5).abs() < 1e-15);
        // Cap both at λ = 1/√2.
        assert!((water_fill(&[1.0, 1.0], 1.0) - 2f64.sqrt()).abs() < 1e-15);
        // Cap the first at λ with λ^2 + 0.01 = 0.25.
        let lam = 0.24f64.sqrt();
        assert!((water_fill(&[1.0, 0.1], 0.5) - (lam + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn end_sections() {
        let k = build_counterexample(6);
        let x = [0.5, -0.3, 0.1, 0.05, 0.0];
        assert!(k.section_contains(0.0, &x, 0.0));
        assert!(!k.section_contains(0.0, &[0.7, 0.4, 0.0, 0.0, 0.0], 0.0));
        // At |t| = 1 the section is K_1: inside B_1, outside r B_2.
        let r = k.r;
        assert!(k.section_contains(1.0, &[0.9 * r, 0.0, 0.0, 0.0, 0.0], 1e-12));
        assert!(!k.section_contains(1.0, &[1.1 * r, 0.0, 0.0, 0.0, 0.0], 1e-12));
    }
}

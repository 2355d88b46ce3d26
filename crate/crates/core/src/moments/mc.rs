//! Monte Carlo moments of membership-oracle bodies.
//!
//! The sample budget is split over a fixed number of ChaCha streams derived
//! from the seed, so results do not depend on the thread count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MomentData;
use crate::body::ConvexOracle;

/// Number of independent streams a sample budget is split into.
pub const STREAMS: usize = 16;

/// A Monte Carlo estimate with per-entry standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MCEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate<f64> {
    /// Inverse-variance-free pooling of two independent estimates of the
    /// same quantity, weighted by sample count.
    pub fn pool(&self, other: &Self) -> Self {
        let (a, b) = (self.samples as f64, other.samples as f64);
        let w = a / (a + b);
        Self {
            value: w * self.value + (1.0 - w) * other.value,
            std_error: (w * w * self.std_error.powi(2)
                + (1.0 - w).powi(2) * other.std_error.powi(2))
            .sqrt(),
            samples: self.samples + other.samples,
            seed: self.seed,
        }
    }

    /// `|value - target| / std_error`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.std_error
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    Rejection,
    HitAndRun,
}

/// Output of [`mc_moments`]. With hit-and-run the volume is not estimated
/// and is reported as NaN.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McMoments {
    pub estimate: MCEstimate<MomentData>,
    pub sampler: Sampler,
    /// Fraction of bounding-box proposals accepted in the pilot run.
    pub acceptance: f64,
}

/// Acceptance rate below which rejection sampling gives way to hit-and-run.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Sums of `1`, `x`, `xx^T`, `(xx^T)^2` entrywise.
#[derive(Clone)]
pub(crate) struct Accumulator {
    pub count: usize,
    pub s1: DVector<f64>,
    pub s2: DMatrix<f64>,
    pub s4: DMatrix<f64>,
    pub s1sq: DVector<f64>,
}

impl Accumulator {
    pub fn new(n: usize) -> Self {
        Self {
            count: 0,
            s1: DVector::zeros(n),
            s2: DMatrix::zeros(n, n),
            s4: DMatrix::zeros(n, n),
            s1sq: DVector::zeros(n),
        }
    }

    pub fn push(&mut self, x: &DVector<f64>) {
        self.count += 1;
        self.s1 += x;
        self.s1sq += x.component_mul(x);
        let n = x.len();
        for j in 0..n {
            for i in 0..n {
                let p = x[i] * x[j];
                self.s2[(i, j)] += p;
                self.s4[(i, j)] += p * p;
            }
        }
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        self.s1 += &other.s1;
        self.s2 += &other.s2;
        self.s4 += &other.s4;
        self.s1sq += &other.s1sq;
        self
    }

    pub fn mean(&self) -> DVector<f64> {
        &self.s1 / self.count as f64
    }

    pub fn second(&self) -> DMatrix<f64> {
        &self.s2 / self.count as f64
    }

    /// Standard errors assuming independent samples.
    pub fn iid_errors(&self) -> (DVector<f64>, DMatrix<f64>) {
        let c = self.count as f64;
        let m1 = self.mean();
        let e1 = DVector::from_fn(m1.len(), |i, _| {
            ((self.s1sq[i] / c - m1[i] * m1[i]).max(0.0) / c).sqrt()
        });
        let m2 = self.second();
        let e2 = DMatrix::from_fn(m2.nrows(), m2.ncols(), |i, j| {
            ((self.s4[(i, j)] / c - m2[(i, j)] * m2[(i, j)]).max(0.0) / c).sqrt()
        });
        (e1, e2)
    }
}

pub(crate) fn stream_rng(seed: u64, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64 + 1);
    rng
}

pub(crate) fn split_budget(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|k| total / parts + usize::from(k < total % parts))
        .collect()
}

pub(crate) fn unit_direction(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let g: DVector<f64> = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 {
            return g / norm;
        }
    }
}

fn pilot_acceptance<O: ConvexOracle + ?Sized>(body: &O, seed: u64) -> f64 {
    let n = body.dim();
    let r = body.outer_radius();
    let mut rng = stream_rng(seed, 10_000);
    let trials = 4000;
    let hits = (0..trials)
        .filter(|_| {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-r..r));
            body.contains(&x, 0.0)
        })
        .count();
    hits as f64 / trials as f64
}

/// Uniform-sample moments of an oracle body. Rejection from the bounding box
/// `[-R, R]^n` when the pilot acceptance is at least [`MIN_ACCEPTANCE`],
/// otherwise hit-and-run from the interior point (burn-in `10·n`, thinning
/// `n`) with batch-means standard errors.
pub fn mc_moments<O: ConvexOracle + ?Sized>(body: &O, samples: usize, seed: u64) -> McMoments {
    let acceptance = pilot_acceptance(body, seed);
    if acceptance >= MIN_ACCEPTANCE {
        rejection_moments(body, samples, seed, acceptance)
    } else {
        hit_and_run_moments(body, samples, seed, acceptance)
    }
}

pub fn rejection_moments<O: ConvexOracle + ?Sized>(
    body: &O,
    samples: usize,
    seed: u64,
    acceptance: f64,
) -> McMoments {
    let n = body.dim();
    let r = body.outer_radius();
    let parts: Vec<(Accumulator, usize)> = split_budget(samples, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(k, want)| {
            let mut rng = stream_rng(seed, k);
            let mut acc = Accumulator::new(n);
            let mut drawn = 0usize;
            while acc.count < want {
                drawn += 1;
                let x = DVector::from_fn(n, |_, _| rng.random_range(-r..r));
                if body.contains(&x, 0.0) {
                    acc.push(&x);
                }
            }
            (acc, drawn)
        })
        .collect();
    let drawn: usize = parts.iter().map(|p| p.1).sum();
    let acc = parts
        .iter()
        .skip(1)
        .fold(parts[0].0.clone(), |a, p| a.merge(&p.0));
    let p = acc.count as f64 / drawn as f64;
    let box_vol = (2.0 * r).powi(n as i32);
    let volume = p * box_vol;
    let vol_err = box_vol * (p * (1.0 - p) / drawn as f64).sqrt();
    let (e1, e2) = acc.iid_errors();
    let value = MomentData::from_integrals(1.0, &acc.mean(), &acc.second());
    let value = MomentData { volume, ..value };
    let cov_err = covariance_errors(&value, &e1, &e2);
    McMoments {
        estimate: MCEstimate {
            value,
            std_error: MomentData {
                volume: vol_err,
                barycenter: e1,
                second_moment: e2,
                covariance: cov_err,
            },
            samples,
            seed,
        },
        sampler: Sampler::Rejection,
        acceptance,
    }
}

/// First-order error of `M - b b^T` ignoring the `b`–`M` correlation.
fn covariance_errors(m: &MomentData, e1: &DVector<f64>, e2: &DMatrix<f64>) -> DMatrix<f64> {
    let b = &m.barycenter;
    DMatrix::from_fn(e2.nrows(), e2.ncols(), |i, j| {
        (e2[(i, j)].powi(2) + (b[j] * e1[i]).powi(2) + (b[i] * e1[j]).powi(2)).sqrt()
    })
}

pub fn hit_and_run_moments<O: ConvexOracle + ?Sized>(
    body: &O,
    samples: usize,
    seed: u64,
    acceptance: f64,
) -> McMoments {
    let n = body.dim();
    let chord_tol = 1e-10;
    let parts: Vec<Accumulator> = split_budget(samples, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(k, want)| {
            let mut rng = stream_rng(seed, k);
            let mut x = body.interior_point();
            let step = |x: &mut DVector<f64>, rng: &mut ChaCha8Rng| {
                let d = unit_direction(n, rng);
                let (a, b) = body.chord(x, &d, chord_tol);
                let t = rng.random_range(a..=b);
                *x += d * t;
            };
            for _ in 0..10 * n {
                step(&mut x, &mut rng);
            }
            let mut acc = Accumulator::new(n);
            while acc.count < want {
                for _ in 0..n {
                    step(&mut x, &mut rng);
                }
                acc.push(&x);
            }
            acc
        })
        .collect();
    // Batch means over the streams: each stream is one batch.
    let acc = parts
        .iter()
        .skip(1)
        .fold(parts[0].clone(), |a, p| a.merge(p));
    let means: Vec<DVector<f64>> = parts.iter().map(|p| p.mean()).collect();
    let seconds: Vec<DMatrix<f64>> = parts.iter().map(|p| p.second()).collect();
    let k = parts.len() as f64;
    let m1 = acc.mean();
    let m2 = acc.second();
    let e1 = DVector::from_fn(n, |i, _| {
        (means.iter().map(|m| (m[i] - m1[i]).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    });
    let e2 = DMatrix::from_fn(n, n, |i, j| {
        (seconds
            .iter()
            .map(|m| (m[(i, j)] - m2[(i, j)]).powi(2))
            .sum::<f64>()
            / (k - 1.0)
            / k)
            .sqrt()
    });
    let value = MomentData::from_integrals(1.0, &m1, &m2);
    let value = MomentData {
        volume: f64::NAN,
        ..value
    };
    let cov_err = covariance_errors(&value, &e1, &e2);
    McMoments {
        estimate: MCEstimate {
            value,
            std_error: MomentData {
                volume: f64::NAN,
                barycenter: e1,
                second_moment: e2,
                covariance: cov_err,
            },
            samples,
            seed,
        },
        sampler: Sampler::HitAndRun,
        acceptance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::oracle::{Ball, Cube};

    #[test]
    fn ball_covariance() {
        let m = mc_moments(&Ball::unit(3), 200_000, 3);
        assert_eq!(m.sampler, Sampler::Rejection);
        let est = &m.estimate;
        for i in 0..3 {
            let z = (est.value.covariance[(i, i)] - 0.2).abs() / est.std_error.covariance[(i, i)];
            assert!(z < 4.0, "z = {z}");
        }
        let vol = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((est.value.volume - vol).abs() < 4.0 * est.std_error.volume);
    }

    #[test]
    fn hit_and_run_cube() {
        let m = hit_and_run_moments(
            &Cube {
                n: 3,
                half_width: 1.0,
            },
            40_000,
            1,
            1.0,
        );
        let est = &m.estimate;
        for i in 0..3 {
            let z = (est.value.second_moment[(i, i)] - 1.0 / 3.0).abs()
                / est.std_error.second_moment[(i, i)];
            assert!(z < 4.0, "z = {z}");
        }
    }

    #[test]
    fn reproducible() {
        let a = mc_moments(&Ball::unit(2), 5_000, 9);
        let b = mc_moments(&Ball::unit(2), 5_000, 9);
        assert_eq!(
            a.estimate.value.second_moment,
            b.estimate.value.second_moment
        );
    }
}

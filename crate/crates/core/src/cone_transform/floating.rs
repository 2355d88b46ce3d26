//! Floating bodies of a cone.
//!
//! A point `x ∈ int(V)` lies in `V_δ` when every truncated cone
//! `C_y = { z ∈ V : <z, y> >= -1 }` with `<x, y> = -1` has volume at least
//! `δ`. Minimizing over the affine slice `<x, y> = -1` turns this into the
//! sublevel set `Φ_V*(x) <= κ_float(n) - log δ`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::constants::kappa_float;
use super::legendre::legendre;
use super::mahler::NEWTON_TOL;
use super::section::section;
use crate::body::PolyhedralCone;
use crate::error::{Error, Result};
use crate::moments::volume;

/// Sublevel test `Φ_V*(x) <= κ_float(n) - log δ`.
pub fn floating_contains(v: &PolyhedralCone, delta: f64, x: &DVector<f64>) -> Result<bool> {
    if !(delta > 0.0) {
        return Err(Error::Degenerate(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let n = v.ambient() - 1;
    let leg = legendre(v, x, NEWTON_TOL)?;
    Ok(leg.value <= kappa_float(n) - delta.ln())
}

/// `Vol_{n+1}(C_y) = Vol_n(K_y) / ((n+1) |y|)`, from exact section geometry.
pub fn cap_volume(v: &PolyhedralCone, y: &DVector<f64>) -> Result<f64> {
    let n = v.ambient() - 1;
    let s = section(v, y)?;
    Ok(volume(&s.body)? / ((n + 1) as f64 * y.norm()))
}

#[derive(Clone, Debug, Serialize)]
pub struct FloatingOracle {
    /// Smallest cap volume found over `y ∈ T_x`.
    pub min_cap_volume: f64,
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub minimizer: DVector<f64>,
    pub inside: bool,
}

/// Independent check of [`floating_contains`]: minimizes the cap volume over
/// `T_x = { y ∈ V* : <x, y> = -1 }` by Nelder–Mead from `trials` random
/// starting points and compares the minimum with `δ`.
pub fn floating_oracle(
    v: &PolyhedralCone,
    dual: &PolyhedralCone,
    delta: f64,
    x: &DVector<f64>,
    trials: usize,
    seed: u64,
) -> Result<FloatingOracle> {
    let tx = section(dual, x)?;
    let k = &tx.body;
    let scale = k.outer_radius().max(1e-12);
    let f = |u: &[f64]| -> f64 {
        let u = DVector::from_row_slice(u);
        if !k.contains(&u, -1e-9 * scale) {
            return f64::INFINITY;
        }
        match cap_volume(v, &tx.to_ambient(&u)) {
            Ok(c) => c.ln(),
            Err(_) => f64::INFINITY,
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verts = k.vertices();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for t in 0..trials.max(1) {
        // Random convex combination of vertices, pulled toward the center.
        let start = if t == 0 {
            k.vertex_mean()
        } else {
            let w: Vec<f64> = (0..verts.len())
                .map(|_| rng.random::<f64>() + 0.2)
                .collect();
            let total: f64 = w.iter().sum();
            verts
                .iter()
                .zip(&w)
                .fold(DVector::zeros(k.dim()), |acc, (p, wi)| {
                    acc + p * (wi / total)
                })
        };
        let (u, val) = crate::optim::nelder_mead_restarts(f, start.as_slice(), 0.1 * scale, 4);
        if best.as_ref().is_none_or(|(_, b)| val < *b) {
            best = Some((u, val));
        }
    }
    let (u, val) = best.expect("at least one trial");
    let min_cap_volume = val.exp();
    Ok(FloatingOracle {
        min_cap_volume,
        minimizer: tx.to_ambient(&DVector::from_vec(u)),
        inside: min_cap_volume >= delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_floating_body_is_hyperbola() {
        let v = PolyhedralCone::orthant(2);
        let delta = 0.3;
        for &(a, b) in &[(0.5, 0.2), (0.5, 0.4), (1.0, 0.1), (2.0, 0.08)] {
            let x = DVector::from_vec(vec![a, b]);
            let expect = a * b >= delta / 2.0;
            assert_eq!(floating_contains(&v, delta, &x).unwrap(), expect, "{a} {b}");
        }
    }
}

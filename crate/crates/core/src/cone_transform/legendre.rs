//! `Φ_V*(x) = sup_y <x, y> - Φ_V(y)` by damped Newton on `int(V*)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::laplace::{laplace_eval, laplace_value, LaplaceEval};
use crate::body::PolyhedralCone;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct LegendreResult {
    pub value: f64,
    /// The maximizer `y* = ∇Φ_V*(x)`, strictly inside `V*`.
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub argmax: DVector<f64>,
    pub iterations: usize,
    /// `|x - ∇Φ_V(y*)| / |x|`.
    pub final_gradient_norm: f64,
}

pub const MAX_NEWTON_STEPS: usize = 200;
const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const TO_BOUNDARY: f64 = 0.95;

/// Initial point: the exact maximizer for the cell of the triangulation that
/// contains `x` most deeply. For a simplicial cone with generators `G` and
/// `x = G λ`, that maximizer is `y = -G^{-T} (1/λ)`.
fn initial_point(v: &PolyhedralCone, x: &DVector<f64>) -> DVector<f64> {
    let d = v.ambient();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for cell in v.cells() {
        let mut g = DMatrix::zeros(d, d);
        for (k, &i) in cell.iter().enumerate() {
            g.set_column(k, &v.rays()[i]);
        }
        let Some(lu) = g.clone().lu().solve(x) else {
            continue;
        };
        let depth = lu.min();
        if depth <= 0.0 {
            continue;
        }
        if best.as_ref().is_none_or(|(bd, _)| depth > *bd) {
            let Some(gt_inv) = g.transpose().try_inverse() else {
                continue;
            };
            let y = -(gt_inv * lu.map(|l| 1.0 / l));
            best = Some((depth, y));
        }
    }
    if let Some((_, y)) = best {
        if v.max_ray_product(&y) < 0.0 {
            return y;
        }
    }
    let y = v.dual_interior_point();
    let s = -(d as f64) / x.dot(&y);
    y * s
}

/// Solves `∇Φ_V(y) = x` for `x ∈ int(V)` to relative residual `tol`.
pub fn legendre(v: &PolyhedralCone, x: &DVector<f64>, tol: f64) -> Result<LegendreResult> {
    let y0 = initial_point_checked(v, x)?;
    legendre_from(v, x, y0, tol)
}

fn initial_point_checked(v: &PolyhedralCone, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != v.ambient() {
        return Err(Error::DimensionMismatch {
            expected: v.ambient(),
            got: x.len(),
        });
    }
    let worst = v.max_facet_product(x);
    if !(worst < -1e-12 * x.norm()) {
        return Err(Error::NotInteriorPrimal { max_product: worst });
    }
    Ok(initial_point(v, x))
}

/// Same as [`legendre`], starting the Newton iteration at `y0 ∈ int(V*)`.
pub fn legendre_from(
    v: &PolyhedralCone,
    x: &DVector<f64>,
    y0: DVector<f64>,
    tol: f64,
) -> Result<LegendreResult> {
    let xn = x.norm();
    let mut y = y0;
    let mut ev = laplace_eval(v, &y)?;
    let objective = |y: &DVector<f64>, phi: f64| x.dot(y) - phi;
    let mut f = objective(&y, ev.value);
    let mut best = LegendreResult {
        value: f,
        argmax: y.clone(),
        iterations: 0,
        final_gradient_norm: f64::INFINITY,
    };
    for it in 0..=MAX_NEWTON_STEPS {
        let r = x - &ev.gradient;
        let res = r.norm() / xn;
        if res < best.final_gradient_norm {
            best = LegendreResult {
                value: f,
                argmax: y.clone(),
                iterations: it,
                final_gradient_norm: res,
            };
        }
        if res <= tol {
            return Ok(best);
        }
        if it == MAX_NEWTON_STEPS {
            break;
        }
        let step = match ev.hessian.clone().cholesky() {
            Some(ch) => ch.solve(&r),
            None => r.clone(),
        };
        // Largest step keeping every ray product negative, damped.
        let mut alpha_max = f64::INFINITY;
        for g in v.rays() {
            let dg = g.dot(&step);
            if dg > 0.0 {
                alpha_max = alpha_max.min(-g.dot(&y) / dg);
            }
        }
        let mut alpha = (TO_BOUNDARY * alpha_max).min(1.0);
        let slope = r.dot(&step);
        let mut accepted = None;
        // Inside the quadratic region function values stop resolving the
        // progress; take the full step when it shrinks the residual.
        if slope < 1e-4 && alpha == 1.0 {
            let trial = &y + &step;
            if let Ok(te) = laplace_eval(v, &trial) {
                if (x - &te.gradient).norm() < r.norm() {
                    y = trial;
                    f = objective(&y, te.value);
                    ev = te;
                    continue;
                }
            }
        }
        for _ in 0..60 {
            let trial = &y + &step * alpha;
            if let Ok(phi) = laplace_value(v, &trial) {
                let ft = objective(&trial, phi);
                if ft >= f + ARMIJO * alpha * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= SHRINK;
        }
        let Some(next) = accepted else {
            break;
        };
        y = next;
        ev = laplace_eval(v, &y)?;
        f = objective(&y, ev.value);
    }
    // Rounding can stall the line search a hair above tol; accept the best
    // iterate only if it meets the tolerance.
    if best.final_gradient_norm <= tol {
        Ok(best)
    } else {
        Err(Error::NoConvergence {
            best: Box::new(best),
        })
    }
}

/// Legendre transform together with its gradient `y*` and Hessian
/// `[∇²Φ_V(y*)]^{-1}`.
#[derive(Clone, Debug)]
pub struct LegendreFull {
    pub result: LegendreResult,
    pub at_argmax: LaplaceEval,
    pub hessian: DMatrix<f64>,
}

pub fn legendre_full(v: &PolyhedralCone, x: &DVector<f64>, tol: f64) -> Result<LegendreFull> {
    let result = legendre(v, x, tol)?;
    let at_argmax = laplace_eval(v, &result.argmax)?;
    let hessian = at_argmax
        .hessian
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular Hessian".into()))?;
    Ok(LegendreFull {
        result,
        at_argmax,
        hessian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_closed_form() {
        let v = PolyhedralCone::orthant(3);
        let x = DVector::from_vec(vec![0.3, 2.0, 1.1]);
        let r = legendre(&v, &x, 1e-12).unwrap();
        let expect = -3.0 - x.iter().map(|t| t.ln()).sum::<f64>();
        assert!((r.value - expect).abs() < 1e-12);
        assert!(matches!(
            legendre(&v, &DVector::from_vec(vec![0.3, -2.0, 1.1]), 1e-10),
            Err(Error::NotInteriorPrimal { .. })
        ));
    }
}

//! `Φ_V(y) = log ∫_V e^{<y,x>} dx` for a triangulated polyhedral cone.
//!
//! Over a simplicial cell with generators `g_1..g_d`,
//! `∫ e^{<y,x>} = |det G| / Π c_i` with `c_i = -<y, g_i>`. Writing
//! `w_σ = log|det G_σ| - Σ log c_i`, `Φ_V` is the log-sum-exp of the `w_σ`,
//! and its derivatives are softmax-weighted moments of the derivatives of
//! `w_σ`: `∇w = Σ g/c`, `∇²w = Σ g g^T / c²`, `∇³w = 2 Σ g⊗g⊗g / c³`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::body::PolyhedralCone;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct LaplaceEval {
    pub value: f64,
    #[serde(serialize_with = "crate::ser::vector::serialize")]
    pub gradient: DVector<f64>,
    #[serde(serialize_with = "crate::ser::matrix::serialize")]
    pub hessian: DMatrix<f64>,
}

/// Refuses points closer to `∂V*` than this, relative to `|y|`.
const BOUNDARY_GUARD: f64 = 1e-12;

/// Ray products `c_i = -<y, g_i>` (generators as stored), checked positive.
fn ray_products(v: &PolyhedralCone, y: &DVector<f64>) -> Result<Vec<f64>> {
    if y.len() != v.ambient() {
        return Err(Error::DimensionMismatch {
            expected: v.ambient(),
            got: y.len(),
        });
    }
    let yn = y.norm();
    let mut out = Vec::with_capacity(v.rays().len());
    let mut worst = f64::INFINITY;
    for g in v.rays() {
        let c = -g.dot(y);
        worst = worst.min(c / g.norm());
        out.push(c);
    }
    if !(worst > BOUNDARY_GUARD * yn) {
        return Err(Error::OutsideDualInterior {
            min_product: -worst,
        });
    }
    Ok(out)
}

fn cell_weights(v: &PolyhedralCone, c: &[f64]) -> Vec<f64> {
    v.cells()
        .iter()
        .zip(v.cell_log_dets())
        .map(|(cell, ld)| ld - cell.iter().map(|&i| c[i].ln()).sum::<f64>())
        .collect()
}

fn softmax(w: &[f64]) -> (f64, Vec<f64>) {
    let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    (m + s.ln(), e.into_iter().map(|x| x / s).collect())
}

/// `Φ_V(y)` only.
pub fn laplace_value(v: &PolyhedralCone, y: &DVector<f64>) -> Result<f64> {
    let c = ray_products(v, y)?;
    Ok(softmax(&cell_weights(v, &c)).0)
}

/// Value, gradient and Hessian of `Φ_V` at `y ∈ int(V*)`.
pub fn laplace_eval(v: &PolyhedralCone, y: &DVector<f64>) -> Result<LaplaceEval> {
    let d = v.ambient();
    let c = ray_products(v, y)?;
    let (value, p) = softmax(&cell_weights(v, &c));
    let mut grad = DVector::zeros(d);
    let mut second = DMatrix::zeros(d, d);
    for (cell, &pk) in v.cells().iter().zip(&p) {
        if pk == 0.0 {
            continue;
        }
        let mut u = DVector::zeros(d);
        for &i in cell {
            let g = &v.rays()[i];
            u.axpy(1.0 / c[i], g, 1.0);
            second.ger(pk / (c[i] * c[i]), g, g, 1.0);
        }
        grad.axpy(pk, &u, 1.0);
        second.ger(pk, &u, &u, 1.0);
    }
    let hessian = second - &grad * grad.transpose();
    Ok(LaplaceEval {
        value,
        gradient: grad,
        hessian: (&hessian + hessian.transpose()) * 0.5,
    })
}

/// Value, gradient, Hessian and third-derivative tensor of `Φ_V`, the latter
/// as the slices `t[k] = ∂_k ∇²Φ_V`.
pub fn laplace_eval3(
    v: &PolyhedralCone,
    y: &DVector<f64>,
) -> Result<(LaplaceEval, Vec<DMatrix<f64>>)> {
    let d = v.ambient();
    let c = ray_products(v, y)?;
    let (value, p) = softmax(&cell_weights(v, &c));
    let mut e1 = DVector::zeros(d);
    let mut e2 = DMatrix::zeros(d, d);
    let mut e3 = vec![DMatrix::<f64>::zeros(d, d); d];
    for (cell, &pk) in v.cells().iter().zip(&p) {
        if pk == 0.0 {
            continue;
        }
        let mut u = DVector::zeros(d);
        let mut a = DMatrix::zeros(d, d);
        for &i in cell {
            let g = &v.rays()[i];
            u.axpy(1.0 / c[i], g, 1.0);
            a.ger(1.0 / (c[i] * c[i]), g, g, 1.0);
        }
        e1.axpy(pk, &u, 1.0);
        let mut au = a.clone();
        au.ger(1.0, &u, &u, 1.0);
        e2 += &au * pk;
        for k in 0..d {
            let slice = &mut e3[k];
            for &i in cell {
                let g = &v.rays()[i];
                slice.ger(2.0 * pk * g[k] / c[i].powi(3), g, g, 1.0);
            }
            // w_ij u_k + w_ik u_j + w_jk u_i + u_i u_j u_k
            *slice += &a * (pk * u[k]);
            let ak = a.column(k).into_owned();
            slice.ger(pk, &ak, &u, 1.0);
            slice.ger(pk, &u, &ak, 1.0);
            slice.ger(pk * u[k], &u, &u, 1.0);
        }
    }
    let grad = e1;
    let hess = &e2 - &grad * grad.transpose();
    let hess = (&hess + hess.transpose()) * 0.5;
    let mut third = e3;
    for k in 0..d {
        let hk = hess.column(k).into_owned();
        let slice = &mut third[k];
        *slice -= &hess * grad[k];
        slice.ger(-1.0, &hk, &grad, 1.0);
        slice.ger(-1.0, &grad, &hk, 1.0);
        slice.ger(-grad[k], &grad, &grad, 1.0);
    }
    Ok((
        LaplaceEval {
            value,
            gradient: grad,
            hessian: hess,
        },
        third,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_closed_form() {
        let v = PolyhedralCone::orthant(3);
        let y = DVector::from_vec(vec![-0.5, -2.0, -1.5]);
        let e = laplace_eval(&v, &y).unwrap();
        let expect: f64 = -y.iter().map(|t| t.abs().ln()).sum::<f64>();
        assert!((e.value - expect).abs() < 1e-14);
        for i in 0..3 {
            assert!((e.gradient[i] + 1.0 / y[i]).abs() < 1e-14);
            assert!((e.hessian[(i, i)] - 1.0 / (y[i] * y[i])).abs() < 1e-13);
        }
        assert!(laplace_eval(&v, &DVector::from_vec(vec![-1.0, 0.0, -1.0])).is_err());
    }

    #[test]
    fn third_derivative_of_orthant() {
        let v = PolyhedralCone::orthant(2);
        let y = DVector::from_vec(vec![-0.5, -2.0]);
        let (_, t) = laplace_eval3(&v, &y).unwrap();
        // ∂³(-log|y_i|) = -2 / y_i^3
        assert!((t[0][(0, 0)] + 2.0 / y[0].powi(3)).abs() < 1e-12);
        assert!(t[0][(1, 1)].abs() < 1e-12 && t[1][(0, 1)].abs() < 1e-12);
    }
}

//! `Ψ_V(x) = -log Vol(V ∩ (x - V))` and its comparison with `Φ_V*`.

use nalgebra::DVector;
use serde::Serialize;

use super::constants::kappa_conv;
use super::legendre::legendre;
use super::mahler::NEWTON_TOL;
use crate::body::{HPolytope, PolyhedralCone};
use crate::error::{Error, Result};
use crate::moments::volume;

/// `Ψ_V(x)` by exact volume of the intersection polytope.
pub fn self_convolution(v: &PolyhedralCone, x: &DVector<f64>) -> Result<f64> {
    if x.len() != v.ambient() {
        return Err(Error::DimensionMismatch {
            expected: v.ambient(),
            got: x.len(),
        });
    }
    if !(v.max_facet_product(x) < -1e-12 * x.norm()) {
        return Err(Error::EmptyIntersection);
    }
    // V: <a, z> <= 0.  x - V: <a, x - z> <= 0, i.e. <-a, z> <= -<a, x>.
    let mut normals = Vec::with_capacity(2 * v.facet_normals().len());
    let mut offsets = Vec::with_capacity(normals.capacity());
    for a in v.facet_normals() {
        normals.push(a.clone());
        offsets.push(0.0);
        normals.push(-a);
        offsets.push(-a.dot(x));
    }
    let h = HPolytope::new(normals, offsets);
    let p = h.to_vpolytope().map_err(|_| Error::EmptyIntersection)?;
    Ok(-volume(&p)?.ln())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvolutionSandwich {
    pub psi: f64,
    pub phi_star: f64,
    /// `Ψ_V - Φ_V* - κ_conv(n)`, nonnegative.
    pub lower_slack: f64,
    /// `(Ψ_V - Φ_V*) / n`.
    pub upper_ratio: f64,
}

pub fn convolution_upper_check(
    v: &PolyhedralCone,
    x: &DVector<f64>,
) -> Result<ConvolutionSandwich> {
    let n = v.ambient() - 1;
    let psi = self_convolution(v, x)?;
    let phi_star = legendre(v, x, NEWTON_TOL)?.value;
    Ok(ConvolutionSandwich {
        psi,
        phi_star,
        lower_slack: psi - phi_star - kappa_conv(n),
        upper_ratio: (psi - phi_star) / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_unit_square() {
        let v = PolyhedralCone::orthant(2);
        let psi = self_convolution(&v, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(psi.abs() < 1e-12);
        let t: f64 = 2.5;
        let psi_t = self_convolution(&v, &DVector::from_vec(vec![t, t])).unwrap();
        assert!((psi_t + 2.0 * t.ln()).abs() < 1e-12);
    }
}

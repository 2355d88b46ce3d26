//! Hyperplane sections `K_y = { z ∈ V : <z, y> = -1 }` in an orthonormal
//! chart of the hyperplane.

use nalgebra::{DMatrix, DVector};

use crate::body::{HullFacets, PolyhedralCone, VPolytope};
use crate::error::{Error, Result};
use crate::linalg::orthonormal_complement;
use crate::moments::{body_moments, MomentData};

/// The section of a cone at direction `y`.
///
/// Ambient points are `origin + chart · u` with `u` the chart coordinates;
/// `origin = -y/|y|²` is the foot of the perpendicular from `0`.
#[derive(Clone, Debug)]
pub struct SectionBody {
    pub direction: DVector<f64>,
    pub origin: DVector<f64>,
    pub chart: DMatrix<f64>,
    /// Vertices in ambient coordinates, one per extreme ray of the cone.
    pub ambient_vertices: Vec<DVector<f64>>,
    /// The section as a polytope in chart coordinates.
    pub body: VPolytope,
}

impl SectionBody {
    pub fn to_ambient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.chart * u
    }

    pub fn to_chart(&self, z: &DVector<f64>) -> DVector<f64> {
        self.chart.transpose() * (z - &self.origin)
    }
}

/// Section of `v` at `y ∈ int(V*)`; the facet structure is inherited from the
/// cone, so no hull computation is needed.
pub fn section(v: &PolyhedralCone, y: &DVector<f64>) -> Result<SectionBody> {
    let worst = v.max_ray_product(y);
    if !(worst < 0.0) {
        return Err(Error::OutsideDualInterior { min_product: worst });
    }
    let origin = -y / y.norm_squared();
    let chart = orthonormal_complement(y);
    let ambient_vertices: Vec<DVector<f64>> = v.rays().iter().map(|g| g / (-g.dot(y))).collect();
    let verts: Vec<DVector<f64>> = ambient_vertices
        .iter()
        .map(|z| chart.transpose() * (z - &origin))
        .collect();
    let mut normals = Vec::with_capacity(v.facet_normals().len());
    let mut offsets = Vec::with_capacity(v.facet_normals().len());
    for a in v.facet_normals() {
        // <a, origin + Q u> <= 0
        let n = chart.transpose() * a;
        let norm = n.norm();
        normals.push(n / norm);
        offsets.push(-a.dot(&origin) / norm);
    }
    let facets = HullFacets {
        normals,
        offsets,
        incidence: v.incidence().to_vec(),
    };
    Ok(SectionBody {
        direction: y.clone(),
        origin,
        chart,
        ambient_vertices,
        body: VPolytope::with_facets(verts, facets),
    })
}

/// Exact moments of a section, in the chart and in ambient coordinates.
#[derive(Clone, Debug)]
pub struct SectionMoments {
    pub chart_moments: MomentData,
    pub barycenter: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

pub fn section_moments(v: &PolyhedralCone, y: &DVector<f64>) -> Result<SectionMoments> {
    let s = section(v, y)?;
    let m = body_moments(&s.body)?;
    let barycenter = s.to_ambient(&m.barycenter);
    let covariance = &s.chart * &m.covariance * s.chart.transpose();
    Ok(SectionMoments {
        chart_moments: m,
        barycenter,
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_section_is_simplex() {
        let v = PolyhedralCone::orthant(4);
        let y = DVector::from_element(4, -1.0);
        let m = section_moments(&v, &y).unwrap();
        for i in 0..4 {
            assert!((m.barycenter[i] - 0.25).abs() < 1e-14);
        }
        let s = section(&v, &y).unwrap();
        for z in &s.ambient_vertices {
            assert!((z.dot(&y) + 1.0).abs() < 1e-12);
        }
    }
}

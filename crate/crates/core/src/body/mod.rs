//! Vertex and halfspace descriptions of convex polytopes, polarity, gauges
//! and support functions.

pub mod builders;
pub mod cone;
pub mod io;
pub mod minkowski;
pub mod oracle;
pub(crate) mod triangulate;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::dd::{extreme_rays, DD_TOL};

const FACET_MERGE_TOL: f64 = 1e-7;
use crate::error::{Error, Result};
use crate::linalg::affine_rank;

pub use cone::PolyhedralCone;
pub use oracle::ConvexOracle;

/// Facet description of a full-dimensional polytope: unit outward normals
/// `a_j`, offsets `b_j` (meaning `<a_j, x> <= b_j`), and for every facet the
/// indices of the points lying on it.
#[derive(Clone, Debug)]
pub struct HullFacets {
    pub normals: Vec<DVector<f64>>,
    pub offsets: Vec<f64>,
    pub incidence: Vec<Vec<usize>>,
}

/// Convex hull of finitely many points spanning `R^dim`.
#[derive(Debug)]
pub struct VPolytope {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    facets: OnceLock<HullFacets>,
}

impl Clone for VPolytope {
    fn clone(&self) -> Self {
        let facets = OnceLock::new();
        if let Some(f) = self.facets.get() {
            let _ = facets.set(f.clone());
        }
        Self {
            dim: self.dim,
            vertices: self.vertices.clone(),
            facets,
        }
    }
}

/// Intersection of halfspaces `<a_i, x> <= b_i`, assumed bounded.
#[derive(Debug)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<DVector<f64>>,
    offsets: Vec<f64>,
    vertices: OnceLock<std::result::Result<Vec<DVector<f64>>, String>>,
}

impl Clone for HPolytope {
    fn clone(&self) -> Self {
        Self::new(self.normals.clone(), self.offsets.clone())
    }
}

fn outer_radius_of(points: &[DVector<f64>]) -> f64 {
    points.iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Drop points closer than `tol` to an earlier one.
fn dedupe(points: Vec<DVector<f64>>, tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| (q - &p).norm() <= tol) {
            out.push(p);
        }
    }
    out
}

impl VPolytope {
    /// Hull of `points`. Near-duplicate points are merged; points need not
    /// be extreme (see [`VPolytope::reduce`]).
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::Degenerate("empty point set".into()))?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        let scale = outer_radius_of(&points).max(1.0);
        let vertices = dedupe(points, DD_TOL * scale);
        let refs: Vec<&DVector<f64>> = vertices.iter().collect();
        if affine_rank(&refs, 1e-10) < dim {
            return Err(Error::Degenerate(format!(
                "points do not affinely span R^{dim}"
            )));
        }
        Ok(Self {
            dim,
            vertices,
            facets: OnceLock::new(),
        })
    }

    /// Polytope whose facet structure is already known. The caller
    /// guarantees every point is a vertex and the facets are correct.
    pub(crate) fn with_facets(vertices: Vec<DVector<f64>>, facets: HullFacets) -> Self {
        let dim = vertices[0].len();
        let p = Self {
            dim,
            vertices,
            facets: OnceLock::new(),
        };
        let _ = p.facets.set(facets);
        p
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_row_slice(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn outer_radius(&self) -> f64 {
        outer_radius_of(&self.vertices)
    }

    pub fn vertex_mean(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim);
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Facets of the hull, computed once by double description on the polar
    /// of the points re-centered at their mean.
    pub fn facets(&self) -> &HullFacets {
        self.facets.get_or_init(|| self.compute_facets())
    }

    fn compute_facets(&self) -> HullFacets {
        let d = self.dim;
        let c = self.vertex_mean();
        let m = self.vertices.len();
        let mut rows = Vec::with_capacity(m + 1);
        for v in &self.vertices {
            let mut r = DVector::zeros(d + 1);
            r.rows_mut(0, d).copy_from(&(v - &c));
            r[d] = -1.0;
            rows.push(r);
        }
        let mut cap = DVector::zeros(d + 1);
        cap[d] = -1.0;
        rows.push(cap);
        let rays = extreme_rays(&rows, DD_TOL)
            .expect("the polar of a full-dimensional point set is a pointed cone");
        let mut out = HullFacets {
            normals: Vec::new(),
            offsets: Vec::new(),
            incidence: Vec::new(),
        };
        for r in rays {
            let s = r.dir[d];
            if s <= 1e-14 {
                continue;
            }
            let y = r.dir.rows(0, d).into_owned() / s;
            let norm = y.norm();
            let a = &y / norm;
            let b = (1.0 + y.dot(&c)) / norm;
            let inc: Vec<usize> = (0..m).filter(|&i| r.zeros.contains(i)).collect();
            // Near-coplanar points can split one facet into copies with
            // partial incidences; merge them.
            if let Some(j) = out.normals.iter().zip(&out.offsets).position(|(a2, b2)| {
                (a2 - &a).norm() <= FACET_MERGE_TOL
                    && (b2 - b).abs() <= FACET_MERGE_TOL * b.abs().max(1.0)
            }) {
                let mut u: Vec<usize> = out.incidence[j].iter().chain(&inc).copied().collect();
                u.sort_unstable();
                u.dedup();
                out.incidence[j] = u;
                continue;
            }
            out.normals.push(a);
            out.offsets.push(b);
            out.incidence.push(inc);
        }
        out
    }

    /// The extreme points only.
    pub fn reduce(&self) -> VPolytope {
        let f = self.facets();
        let keep: Vec<DVector<f64>> = (0..self.vertices.len())
            .filter(|&i| {
                let normals: Vec<&DVector<f64>> = f
                    .incidence
                    .iter()
                    .enumerate()
                    .filter(|(_, inc)| inc.contains(&i))
                    .map(|(j, _)| &f.normals[j])
                    .collect();
                if normals.len() < self.dim {
                    return false;
                }
                let mut a = DMatrix::zeros(normals.len(), self.dim);
                for (k, n) in normals.iter().enumerate() {
                    a.set_row(k, &n.transpose());
                }
                a.singular_values().iter().filter(|s| **s > 1e-8).count() == self.dim
            })
            .map(|i| self.vertices[i].clone())
            .collect();
        VPolytope {
            dim: self.dim,
            vertices: keep,
            facets: OnceLock::new(),
        }
    }

    /// Smallest facet slack at the origin; positive iff the origin is interior.
    pub fn origin_margin(&self) -> f64 {
        self.facets()
            .offsets
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let f = self.facets();
        f.normals
            .iter()
            .zip(&f.offsets)
            .all(|(a, b)| a.dot(x) <= b + tol)
    }

    /// `max_v <v, u>`.
    pub fn support(&self, u: &DVector<f64>) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minkowski gauge; requires the origin in the interior.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        let f = self.facets();
        f.normals
            .iter()
            .zip(&f.offsets)
            .map(|(a, b)| a.dot(x) / b)
            .fold(0.0, f64::max)
    }

    /// Vertices of the polar body, one per facet.
    pub fn polar_vertices(&self, tol: f64) -> Result<Vec<DVector<f64>>> {
        let margin = self.origin_margin();
        if margin <= tol * self.outer_radius().max(1.0) {
            return Err(Error::OriginNotInterior { margin });
        }
        let f = self.facets();
        Ok(f.normals
            .iter()
            .zip(&f.offsets)
            .map(|(a, b)| a / *b)
            .collect())
    }

    /// Polar body as a V-polytope.
    pub fn polar_body(&self, tol: f64) -> Result<VPolytope> {
        let f = self.facets();
        let verts = self.polar_vertices(tol)?;
        // Facets of the polar are the vertices of self; the incidence is the
        // transpose of ours.
        let reduced_ix: Vec<usize> = (0..self.vertices.len())
            .filter(|i| f.incidence.iter().filter(|inc| inc.contains(i)).count() >= self.dim)
            .collect();
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        let mut incidence = Vec::new();
        for &i in &reduced_ix {
            let v = &self.vertices[i];
            let n = v.norm();
            normals.push(v / n);
            offsets.push(1.0 / n);
            incidence.push(
                (0..f.incidence.len())
                    .filter(|&j| f.incidence[j].contains(&i))
                    .collect(),
            );
        }
        let p = VPolytope {
            dim: self.dim,
            vertices: verts,
            facets: OnceLock::new(),
        };
        if reduced_ix.len() == self.vertices.len() {
            let _ = p.facets.set(HullFacets {
                normals,
                offsets,
                incidence,
            });
        }
        Ok(p)
    }

    /// `self - p`.
    pub fn translate(&self, p: &DVector<f64>) -> VPolytope {
        let verts = self.vertices.iter().map(|v| v - p).collect();
        let out = VPolytope {
            dim: self.dim,
            vertices: verts,
            facets: OnceLock::new(),
        };
        if let Some(f) = self.facets.get() {
            let mut g = f.clone();
            for (a, b) in g.normals.iter().zip(g.offsets.iter_mut()) {
                *b -= a.dot(p);
            }
            let _ = out.facets.set(g);
        }
        out
    }

    /// Image under `x -> A x + t`.
    pub fn affine_image(&self, a: &DMatrix<f64>, t: &DVector<f64>) -> Result<VPolytope> {
        VPolytope::new(self.vertices.iter().map(|v| a * v + t).collect())
    }

    pub fn scaled(&self, s: f64) -> VPolytope {
        VPolytope {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            facets: OnceLock::new(),
        }
    }

    pub fn to_hpolytope(&self) -> HPolytope {
        let f = self.facets();
        HPolytope::new(f.normals.clone(), f.offsets.clone())
    }

    /// Simplices of a triangulation using only the hull's points.
    pub fn triangulation(&self) -> Vec<Vec<usize>> {
        let f = self.facets();
        triangulate::pulling_triangulation(&self.vertices, &f.incidence, self.dim, 1e-9)
    }

    /// `(dim-1)`-simplices triangulating the boundary.
    pub fn boundary_triangulation(&self) -> Vec<Vec<usize>> {
        let f = self.facets();
        triangulate::boundary_simplices(&self.vertices, &f.incidence, self.dim, 1e-9)
    }
}

impl HPolytope {
    pub fn new(normals: Vec<DVector<f64>>, offsets: Vec<f64>) -> Self {
        assert_eq!(normals.len(), offsets.len());
        let dim = normals.first().map_or(0, |a| a.len());
        Self {
            dim,
            normals,
            offsets,
            vertices: OnceLock::new(),
        }
    }

    pub fn from_rows(rows: &[(Vec<f64>, f64)]) -> Self {
        Self::new(
            rows.iter()
                .map(|(a, _)| DVector::from_row_slice(a))
                .collect(),
            rows.iter().map(|(_, b)| *b).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[DVector<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, b)| a.dot(x) <= b + tol * a.norm())
    }

    /// Minkowski gauge; requires every offset positive.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| a.dot(x) / b)
            .fold(0.0, f64::max)
    }

    /// Vertex set, enumerated by double description on the homogenization.
    pub fn vertices(&self) -> Result<&[DVector<f64>]> {
        let cached = self.vertices.get_or_init(|| self.enumerate_vertices());
        match cached {
            Ok(v) => Ok(v),
            Err(msg) if msg == "unbounded" => Err(Error::Unbounded),
            Err(msg) => Err(Error::Degenerate(msg.clone())),
        }
    }

    fn enumerate_vertices(&self) -> std::result::Result<Vec<DVector<f64>>, String> {
        let d = self.dim;
        let mut rows = Vec::with_capacity(self.normals.len() + 1);
        for (a, b) in self.normals.iter().zip(&self.offsets) {
            let mut r = DVector::zeros(d + 1);
            r.rows_mut(0, d).copy_from(a);
            r[d] = -b;
            rows.push(r);
        }
        let mut cap = DVector::zeros(d + 1);
        cap[d] = -1.0;
        rows.push(cap);
        let rays = match extreme_rays(&rows, DD_TOL) {
            Ok(r) => r,
            Err(Error::NotProper(_)) => return Err("unbounded".into()),
            Err(e) => return Err(e.to_string()),
        };
        let mut out = Vec::new();
        for r in rays {
            let s = r.dir[d];
            if s <= 1e-12 {
                return Err("unbounded".into());
            }
            out.push(r.dir.rows(0, d).into_owned() / s);
        }
        let scale = outer_radius_of(&out).max(1.0);
        let out = dedupe(out, DD_TOL * scale);
        let refs: Vec<&DVector<f64>> = out.iter().collect();
        if affine_rank(&refs, 1e-10) < d {
            return Err("halfspaces have empty interior".into());
        }
        Ok(out)
    }

    pub fn to_vpolytope(&self) -> Result<VPolytope> {
        VPolytope::new(self.vertices()?.to_vec())
    }

    /// `max <x, u>` over the polytope, attained at a vertex.
    pub fn support(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self
            .vertices()?
            .iter()
            .map(|v| v.dot(u))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Polar of a V-polytope: one halfspace `<v, y> <= 1` per vertex.
pub fn polar(p: &VPolytope, tol: f64) -> Result<HPolytope> {
    let margin = p.origin_margin();
    if margin <= tol * p.outer_radius().max(1.0) {
        return Err(Error::OriginNotInterior { margin });
    }
    let r = p.reduce();
    Ok(HPolytope::new(
        r.vertices().to_vec(),
        vec![1.0; r.vertices().len()],
    ))
}

/// Vertex enumeration of an H-polytope.
pub fn vertices_of(h: &HPolytope) -> Result<VPolytope> {
    h.to_vpolytope()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn square_facets_and_polar() {
        let sq = VPolytope::from_rows(&[
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, -1.0],
            vec![0.2, 0.1],
        ])
        .unwrap();
        assert_eq!(sq.facets().normals.len(), 4);
        assert_eq!(sq.reduce().vertices().len(), 4);
        let pol = vertices_of(&polar(&sq, 1e-9).unwrap()).unwrap();
        assert_eq!(pol.vertices().len(), 4);
        for w in pol.vertices() {
            assert!((w.norm() - 1.0).abs() < 1e-12);
        }
        assert!((sq.gauge(&v(&[0.5, -0.25])) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cross_polytope_from_halfspaces() {
        let mut rows = Vec::new();
        for s in 0..8u32 {
            let a: Vec<f64> = (0..3)
                .map(|k| if s >> k & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            rows.push((a, 1.0));
        }
        let h = HPolytope::from_rows(&rows);
        let verts = h.vertices().unwrap();
        assert_eq!(verts.len(), 6);
        assert!((h.gauge(&v(&[0.5, 0.5, 0.0])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_halfspaces_are_unbounded() {
        let h = HPolytope::from_rows(&[(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)]);
        assert!(matches!(h.vertices(), Err(Error::Unbounded)));
    }

    #[test]
    fn off_center_origin_is_rejected() {
        let p = VPolytope::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            polar(&p, 1e-9),
            Err(Error::OriginNotInterior { .. })
        ));
    }
}

//! Proper polyhedral cones with a simplicial triangulation.

use nalgebra::{DMatrix, DVector};

use super::triangulate::pulling_triangulation;
use super::VPolytope;
use crate::dd::{extreme_rays, DD_TOL};
use crate::error::{Error, Result};
use crate::linalg::orthonormal_complement;

/// A pointed, full-dimensional cone in `R^ambient`.
///
/// `rays` are the extreme rays, `facet_normals` the unit outward normals
/// (`<a, z> <= 0` on the cone), `incidence[j]` lists the rays on facet `j`,
/// and `cells` index `ambient`-element subsets of `rays` forming a simplicial
/// triangulation.
#[derive(Clone, Debug)]
pub struct PolyhedralCone {
    ambient: usize,
    rays: Vec<DVector<f64>>,
    facet_normals: Vec<DVector<f64>>,
    incidence: Vec<Vec<usize>>,
    cells: Vec<Vec<usize>>,
    cell_log_dets: Vec<f64>,
}

impl PolyhedralCone {
    /// Cone generated by `gens`. Redundant and repeated generators are dropped.
    pub fn from_rays(gens: Vec<DVector<f64>>) -> Result<Self> {
        let ambient = gens
            .first()
            .map(|g| g.len())
            .ok_or_else(|| Error::NotProper("no generators".into()))?;
        if ambient < 2 {
            return Err(Error::NotProper("ambient dimension below 2".into()));
        }
        let mut dirs: Vec<DVector<f64>> = Vec::new();
        for g in gens {
            if g.len() != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    got: g.len(),
                });
            }
            let n = g.norm();
            if n == 0.0 {
                continue;
            }
            if !dirs.iter().any(|d| (d / d.norm() - &g / n).norm() < DD_TOL) {
                dirs.push(g);
            }
        }
        // Facets of V are the extreme rays of V* = { y : <g, y> <= 0 }.
        let facets = extreme_rays(&dirs, DD_TOL)
            .map_err(|_| Error::NotProper("generators do not span the ambient space".into()))?;
        let m = dirs.len();
        let normals: Vec<DVector<f64>> = facets.iter().map(|r| r.dir.clone()).collect();
        let inc: Vec<Vec<usize>> = facets
            .iter()
            .map(|r| (0..m).filter(|&i| r.zeros.contains(i)).collect())
            .collect();
        // A generator is extreme iff the facets through it have rank ambient-1.
        let extreme: Vec<usize> = (0..m)
            .filter(|&i| {
                let through: Vec<&DVector<f64>> = inc
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.contains(&i))
                    .map(|(j, _)| &normals[j])
                    .collect();
                if through.len() + 1 < ambient {
                    return false;
                }
                let mut a = DMatrix::zeros(through.len(), ambient);
                for (k, n) in through.iter().enumerate() {
                    a.set_row(k, &n.transpose());
                }
                a.singular_values().iter().filter(|s| **s > 1e-8).count() + 1 == ambient
            })
            .collect();
        let remap: Vec<Option<usize>> = {
            let mut r = vec![None; m];
            for (k, &i) in extreme.iter().enumerate() {
                r[i] = Some(k);
            }
            r
        };
        let rays: Vec<DVector<f64>> = extreme.iter().map(|&i| dirs[i].clone()).collect();
        let incidence: Vec<Vec<usize>> = inc
            .iter()
            .map(|s| s.iter().filter_map(|&i| remap[i]).collect())
            .collect();
        Self::assemble(rays, normals, incidence)
    }

    fn assemble(
        rays: Vec<DVector<f64>>,
        facet_normals: Vec<DVector<f64>>,
        incidence: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let ambient = rays[0].len();
        let mut cone = Self {
            ambient,
            rays,
            facet_normals,
            incidence,
            cells: Vec::new(),
            cell_log_dets: Vec::new(),
        };
        let y0 = cone.dual_interior_point();
        let chart = orthonormal_complement(&y0);
        let pts: Vec<DVector<f64>> = cone
            .rays
            .iter()
            .map(|g| chart.transpose() * (g / (-g.dot(&y0))))
            .collect();
        cone.cells = pulling_triangulation(&pts, &cone.incidence, ambient - 1, 1e-9);
        if cone.cells.is_empty() {
            return Err(Error::NotProper("empty triangulation".into()));
        }
        cone.cell_log_dets = cone.cells.iter().map(|c| cone.log_abs_det(c)).collect();
        Ok(cone)
    }

    /// `{ (t, t x) : t >= 0, x ∈ K }`.
    pub fn cone_over(k: &VPolytope) -> Result<Self> {
        let gens = k
            .vertices()
            .iter()
            .map(|v| {
                let mut g = DVector::zeros(v.len() + 1);
                g[0] = 1.0;
                g.rows_mut(1, v.len()).copy_from(v);
                g
            })
            .collect();
        Self::from_rays(gens)
    }

    /// Non-negative orthant of `R^d`.
    pub fn orthant(d: usize) -> Self {
        let rays: Vec<DVector<f64>> = (0..d)
            .map(|i| {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                e
            })
            .collect();
        let normals = rays.iter().map(|e| -e).collect();
        let incidence = (0..d)
            .map(|j| (0..d).filter(|&i| i != j).collect())
            .collect();
        Self {
            ambient: d,
            rays,
            facet_normals: normals,
            incidence,
            cells: vec![(0..d).collect()],
            cell_log_dets: vec![0.0],
        }
    }

    fn log_abs_det(&self, cell: &[usize]) -> f64 {
        let mut g = DMatrix::zeros(self.ambient, self.ambient);
        for (k, &i) in cell.iter().enumerate() {
            g.set_column(k, &self.rays[i]);
        }
        g.determinant().abs().ln()
    }

    /// Dual cone `{ y : <x, y> <= 0 for all x in V }`.
    pub fn dual(&self) -> Result<Self> {
        let rays = self.facet_normals.clone();
        let normals: Vec<DVector<f64>> = self.rays.iter().map(|g| g / g.norm()).collect();
        let incidence = (0..self.rays.len())
            .map(|i| {
                (0..self.facet_normals.len())
                    .filter(|&j| self.incidence[j].contains(&i))
                    .collect()
            })
            .collect();
        Self::assemble(rays, normals, incidence)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rays(&self) -> &[DVector<f64>] {
        &self.rays
    }

    pub fn facet_normals(&self) -> &[DVector<f64>] {
        &self.facet_normals
    }

    pub fn incidence(&self) -> &[Vec<usize>] {
        &self.incidence
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// `log |det G_σ|` for every cell, with the generators as columns.
    pub fn cell_log_dets(&self) -> &[f64] {
        &self.cell_log_dets
    }

    /// A point of `int(V*)`: the sum of the unit facet normals.
    pub fn dual_interior_point(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.ambient);
        for a in &self.facet_normals {
            y += a / a.norm();
        }
        y
    }

    /// A point of `int(V)`: the sum of the unit rays.
    pub fn interior_point(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.ambient);
        for g in &self.rays {
            x += g / g.norm();
        }
        x
    }

    /// `max_j <a_j, x>`; negative iff `x ∈ int(V)`.
    pub fn max_facet_product(&self, x: &DVector<f64>) -> f64 {
        self.facet_normals
            .iter()
            .map(|a| a.dot(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i <g_i, y> / |g_i|`; negative iff `y ∈ int(V*)`.
    pub fn max_ray_product(&self, y: &DVector<f64>) -> f64 {
        self.rays
            .iter()
            .map(|g| g.dot(y) / g.norm())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.max_facet_product(x) <= tol * x.norm().max(1.0)
    }

    /// Cartesian product `V1 × V2 ⊆ R^{a+b}`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let (a, b) = (self.ambient, other.ambient);
        let lift = |v: &DVector<f64>, off: usize| {
            let mut w = DVector::zeros(a + b);
            w.rows_mut(off, v.len()).copy_from(v);
            w
        };
        let mut gens: Vec<DVector<f64>> = self.rays.iter().map(|g| lift(g, 0)).collect();
        gens.extend(other.rays.iter().map(|g| lift(g, a)));
        Self::from_rays(gens)
    }

    /// Image under an invertible linear map.
    pub fn linear_image(&self, t: &DMatrix<f64>) -> Result<Self> {
        Self::from_rays(self.rays.iter().map(|g| t * g).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn orthant_dual_is_negative_orthant() {
        let o =
            PolyhedralCone::from_rays(vec![v(&[1., 0., 0.]), v(&[0., 1., 0.]), v(&[0., 0., 1.])])
                .unwrap();
        let d = o.dual().unwrap();
        assert_eq!(d.rays().len(), 3);
        for r in d.rays() {
            assert!(r.iter().all(|c| *c <= 1e-12));
        }
        assert_eq!(o.cells().len(), 1);
    }

    #[test]
    fn square_cone_has_two_cells() {
        let k = VPolytope::from_rows(&[
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        let c = PolyhedralCone::cone_over(&k).unwrap();
        assert_eq!(c.rays().len(), 4);
        assert_eq!(c.facet_normals().len(), 4);
        assert_eq!(c.cells().len(), 2);
        let d = c.dual().unwrap();
        for r in d.rays() {
            let w = r / -r[0];
            assert!((w[1].abs() + w[2].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn redundant_generator_is_dropped() {
        let c = PolyhedralCone::from_rays(vec![v(&[1., 0.]), v(&[1., 1.]), v(&[0., 1.])]).unwrap();
        assert_eq!(c.rays().len(), 2);
    }
}

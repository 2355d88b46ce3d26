//! Triangulations of polytopes from their vertex–facet incidences.
//!
//! Faces are represented by the sorted list of point indices lying on them.
//! The facets of a face `G` are the sets `G ∩ F`, over facets `F` of the
//! whole polytope, whose affine dimension is exactly `dim G - 1`.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DVector;

use crate::linalg::affine_rank;

pub(crate) struct FaceLattice<'a> {
    points: &'a [DVector<f64>],
    facets: &'a [Vec<usize>],
    tol: f64,
    cache: HashMap<Vec<usize>, Vec<Vec<usize>>>,
}

impl<'a> FaceLattice<'a> {
    pub(crate) fn new(points: &'a [DVector<f64>], facets: &'a [Vec<usize>], tol: f64) -> Self {
        Self {
            points,
            facets,
            tol,
            cache: HashMap::new(),
        }
    }

    fn rank(&self, idx: &[usize]) -> usize {
        let pts: Vec<&DVector<f64>> = idx.iter().map(|&i| &self.points[i]).collect();
        affine_rank(&pts, self.tol)
    }

    /// Facets of the face spanned by `face` (sorted indices) of dimension `dim`.
    fn facets_of(&mut self, face: &[usize], dim: usize) -> Vec<Vec<usize>> {
        if let Some(hit) = self.cache.get(face) {
            return hit.clone();
        }
        let members: BTreeSet<usize> = face.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for f in self.facets {
            let sub: Vec<usize> = f.iter().copied().filter(|i| members.contains(i)).collect();
            if sub.len() < dim || sub.len() == face.len() || seen.contains(&sub) {
                continue;
            }
            if self.rank(&sub) + 1 == dim {
                seen.insert(sub.clone());
                out.push(sub);
            }
        }
        self.cache.insert(face.to_vec(), out.clone());
        out
    }

    /// Pulling triangulation of a face: cone from its lowest-index point over
    /// the triangulated facets not containing it.
    pub(crate) fn triangulate_face(&mut self, face: &[usize], dim: usize) -> Vec<Vec<usize>> {
        if dim == 0 {
            return vec![vec![face[0]]];
        }
        if face.len() == dim + 1 {
            return vec![face.to_vec()];
        }
        let apex = face[0];
        let mut out = Vec::new();
        for sub in self.facets_of(face, dim) {
            if sub.contains(&apex) {
                continue;
            }
            for mut s in self.triangulate_face(&sub, dim - 1) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }
}

/// Simplices (as index lists of length `dim + 1`) of a pulling triangulation
/// that uses only the given points.
pub(crate) fn pulling_triangulation(
    points: &[DVector<f64>],
    facets: &[Vec<usize>],
    dim: usize,
    tol: f64,
) -> Vec<Vec<usize>> {
    let mut lattice = FaceLattice::new(points, facets, tol);
    let all: Vec<usize> = {
        let mut s: BTreeSet<usize> = BTreeSet::new();
        for f in facets {
            s.extend(f.iter().copied());
        }
        s.into_iter().collect()
    };
    lattice.triangulate_face(&all, dim)
}

/// Boundary triangulation: for every facet, its `(dim-1)`-simplices. Coning
/// these from any interior point triangulates the polytope.
pub(crate) fn boundary_simplices(
    points: &[DVector<f64>],
    facets: &[Vec<usize>],
    dim: usize,
    tol: f64,
) -> Vec<Vec<usize>> {
    let mut lattice = FaceLattice::new(points, facets, tol);
    let mut out = Vec::new();
    for f in facets {
        out.extend(lattice.triangulate_face(f, dim - 1));
    }
    out
}

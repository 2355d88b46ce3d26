//! Double description method: extreme rays of a pointed polyhedral cone
//! `{ z : <a_i, z> <= 0 }`, with incidence sets tracked as bitsets.
//!
//! Adjacency of two rays is decided combinatorially: their common zero set
//! must have at least `d - 2` elements and must not be contained in the zero
//! set of any third ray.

use fixedbitset::FixedBitSet;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An extreme ray together with the indices of the constraints it saturates.
#[derive(Clone, Debug)]
pub struct Ray {
    pub dir: DVector<f64>,
    pub zeros: FixedBitSet,
}

/// Classification tolerance for normalized constraint/ray products.
pub const DD_TOL: f64 = 1e-9;

/// Enumerate the extreme rays of `{ z ∈ R^d : <rows[i], z> <= 0 }`.
///
/// Returns `Error::NotProper` when the rows do not have full column rank
/// (the cone contains a line).
pub fn extreme_rays(rows: &[DVector<f64>], tol: f64) -> Result<Vec<Ray>> {
    let d = rows
        .first()
        .map(|r| r.len())
        .ok_or_else(|| Error::Degenerate("no constraints".into()))?;
    let m = rows.len();
    let normed: Vec<Option<DVector<f64>>> = rows
        .iter()
        .map(|r| {
            let n = r.norm();
            (n > 0.0).then(|| r / n)
        })
        .collect();

    let basis = greedy_basis(&normed, d, tol);
    if basis.len() < d {
        return Err(Error::NotProper(format!(
            "constraint rank {} below dimension {d}",
            basis.len()
        )));
    }
    let mut a_s = DMatrix::<f64>::zeros(d, d);
    for (k, &i) in basis.iter().enumerate() {
        a_s.set_row(k, &normed[i].as_ref().unwrap().transpose());
    }
    let inv = a_s
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular initial basis".into()))?;

    let mut processed = FixedBitSet::with_capacity(m);
    for &i in &basis {
        processed.insert(i);
    }
    let mut rays: Vec<Ray> = (0..d)
        .map(|k| {
            let dir = -inv.column(k).into_owned();
            let dir = &dir / dir.norm();
            let mut zeros = FixedBitSet::with_capacity(m);
            for (kk, &i) in basis.iter().enumerate() {
                if kk != k {
                    zeros.insert(i);
                }
            }
            Ray { dir, zeros }
        })
        .collect();

    for i in 0..m {
        if processed.contains(i) {
            continue;
        }
        processed.insert(i);
        let a = match &normed[i] {
            Some(a) => a,
            None => continue,
        };
        let prods: Vec<f64> = rays.iter().map(|r| a.dot(&r.dir)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| prods[j] > tol).collect();
        if pos.is_empty() {
            for (j, r) in rays.iter_mut().enumerate() {
                if prods[j].abs() <= tol {
                    r.zeros.insert(i);
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| prods[j] < -tol).collect();

        let mut fresh = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let mut common = rays[p].zeros.clone();
                common.intersect_with(&rays[q].zeros);
                if common.count_ones(..) + 2 < d {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(j, r)| j == p || j == q || !common.is_subset(&r.zeros));
                if !adjacent {
                    continue;
                }
                let dir = &rays[q].dir * prods[p] - &rays[p].dir * prods[q];
                let norm = dir.norm();
                if norm == 0.0 {
                    continue;
                }
                common.insert(i);
                fresh.push(Ray {
                    dir: dir / norm,
                    zeros: common,
                });
            }
        }

        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (j, mut r) in rays.into_iter().enumerate() {
            if prods[j] > tol {
                continue;
            }
            if prods[j] >= -tol {
                r.zeros.insert(i);
            }
            next.push(r);
        }
        next.extend(fresh);
        rays = next;
    }
    Ok(rays)
}

fn greedy_basis(rows: &[Option<DVector<f64>>], d: usize, tol: f64) -> Vec<usize> {
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut chosen = Vec::with_capacity(d);
    // Prefer the most independent rows: repeatedly take the row with the
    // largest residual against the span selected so far.
    while chosen.len() < d {
        let mut best: Option<(usize, f64, DVector<f64>)> = None;
        for (i, r) in rows.iter().enumerate() {
            let r = match r {
                Some(r) if !chosen.contains(&i) => r,
                _ => continue,
            };
            let mut res = r.clone();
            for q in &ortho {
                let c = res.dot(q);
                res.axpy(-c, q, 1.0);
            }
            let n = res.norm();
            if best.as_ref().is_none_or(|b| n > b.1 + 1e-12) {
                best = Some((i, n, res));
            }
        }
        match best {
            Some((i, n, res)) if n > tol.max(1e-12) * 10.0 => {
                ortho.push(res / n);
                chosen.push(i);
            }
            _ => break,
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn orthant_rays() {
        let rows = vec![
            v(&[-1.0, 0.0, 0.0]),
            v(&[0.0, -1.0, 0.0]),
            v(&[0.0, 0.0, -1.0]),
        ];
        let rays = extreme_rays(&rows, DD_TOL).unwrap();
        assert_eq!(rays.len(), 3);
        for r in &rays {
            assert!(r.dir.iter().all(|x| *x >= -1e-12));
            assert_eq!(r.zeros.count_ones(..), 2);
        }
    }

    #[test]
    fn square_pyramid_cone() {
        // Homogenized square |x|,|y| <= t: four extreme rays (±1, ±1, 1).
        let rows = vec![
            v(&[1.0, 0.0, -1.0]),
            v(&[-1.0, 0.0, -1.0]),
            v(&[0.0, 1.0, -1.0]),
            v(&[0.0, -1.0, -1.0]),
            v(&[0.0, 0.0, -1.0]),
        ];
        let rays = extreme_rays(&rows, DD_TOL).unwrap();
        assert_eq!(rays.len(), 4);
        for r in &rays {
            let s = &r.dir / r.dir[2];
            assert!((s[0].abs() - 1.0).abs() < 1e-12 && (s[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn line_is_rejected() {
        let rows = vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])];
        assert!(matches!(
            extreme_rays(&rows, DD_TOL),
            Err(Error::NotProper(_))
        ));
    }
}

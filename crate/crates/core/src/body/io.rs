//! JSON body files: `{"type": "vpoly" | "hpoly" | "cone", "dim": n, "data": [...]}`.
//!
//! `vpoly` rows are vertices, `cone` rows are ray generators, and `hpoly`
//! rows are `[a_1, …, a_n, b]` for the halfspace `<a, x> <= b`.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{HPolytope, PolyhedralCone, VPolytope};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub dim: usize,
    pub data: Vec<Vec<f64>>,
}

#[derive(Debug)]
pub enum Body {
    V(VPolytope),
    H(HPolytope),
    Cone(PolyhedralCone),
}

fn rows(v: &[DVector<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|r| r.iter().copied().collect()).collect()
}

impl BodyFile {
    pub fn from_vpoly(p: &VPolytope) -> Self {
        Self {
            kind: "vpoly".into(),
            dim: p.dim(),
            data: rows(p.vertices()),
        }
    }

    pub fn from_hpoly(h: &HPolytope) -> Self {
        let data = h
            .normals()
            .iter()
            .zip(h.offsets())
            .map(|(a, b)| a.iter().copied().chain(std::iter::once(*b)).collect())
            .collect();
        Self {
            kind: "hpoly".into(),
            dim: h.dim(),
            data,
        }
    }

    pub fn from_cone(c: &PolyhedralCone) -> Self {
        Self {
            kind: "cone".into(),
            dim: c.ambient(),
            data: rows(c.rays()),
        }
    }

    pub fn into_body(self) -> Result<Body> {
        let width = if self.kind == "hpoly" {
            self.dim + 1
        } else {
            self.dim
        };
        if let Some(r) = self.data.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: r.len(),
            });
        }
        match self.kind.as_str() {
            "vpoly" => Ok(Body::V(VPolytope::from_rows(&self.data)?)),
            "hpoly" => {
                let hs: Vec<(Vec<f64>, f64)> = self
                    .data
                    .iter()
                    .map(|r| (r[..self.dim].to_vec(), r[self.dim]))
                    .collect();
                Ok(Body::H(HPolytope::from_rows(&hs)))
            }
            "cone" => Ok(Body::Cone(PolyhedralCone::from_rays(
                self.data
                    .iter()
                    .map(|r| DVector::from_row_slice(r))
                    .collect(),
            )?)),
            other => Err(Error::Parse(format!("unknown body type {other:?}"))),
        }
    }
}

pub fn parse_body(json: &str) -> Result<Body> {
    serde_json::from_str::<BodyFile>(json)?.into_body()
}

pub fn read_body(path: &Path) -> Result<Body> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::FixtureMissing(path.display().to_string()))?;
    parse_body(&text)
}

/// Reads a body file and converts it to a V-polytope (enumerating vertices of
/// an H-polytope if needed).
pub fn read_vpolytope(path: &Path) -> Result<VPolytope> {
    match read_body(path)? {
        Body::V(p) => Ok(p),
        Body::H(h) => h.to_vpolytope(),
        Body::Cone(_) => Err(Error::Parse("expected a polytope, found a cone".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::builders::cube;

    #[test]
    fn round_trip() {
        let c = cube(2);
        let text = serde_json::to_string(&BodyFile::from_vpoly(&c)).unwrap();
        match parse_body(&text).unwrap() {
            Body::V(p) => assert_eq!(p.vertices(), c.vertices()),
            _ => panic!("wrong kind"),
        }
        let h = c.to_hpolytope();
        let text = serde_json::to_string(&BodyFile::from_hpoly(&h)).unwrap();
        match parse_body(&text).unwrap() {
            Body::H(h2) => assert_eq!(h2.vertices().unwrap().len(), 4),
            _ => panic!("wrong kind"),
        }
        assert!(parse_body(r#"{"type":"blob","dim":1,"data":[]}"#).is_err());
    }
}

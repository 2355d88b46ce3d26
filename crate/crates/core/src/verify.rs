//! The verification suite: numbered checks, each made of named parts with a
//! residual and a tolerance, plus unasserted findings.

use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::body::builders::{cross, cube, perturbed_simplex, random_polytope, simplex};
use crate::body::{PolyhedralCone, VPolytope};
use crate::cone_transform::{
    convolution_upper_check, floating_contains, floating_oracle, j_functional, kappa_float,
    laplace_eval, laplace_value, legendre, legendre_full, product_identity_check, NEWTON_TOL,
};
use crate::error::{Error, Result};
use crate::join::{join_mahler_check, join_polar_check};
use crate::kuperberg::{build_counterexample, lemma_decomposition_experiment, x1_second_moments};
use crate::linalg::sym_operator_norm;
use crate::models::{
    psd_cn, psd_cn_recursive, psd_j_per_dim, psd_slice_oracle, psd_slice_polar_oracle,
    verify_ball_duality, verify_homogeneous_duality, verify_homogeneous_duality_exact,
};
use crate::slicing::{isotropic_objective, section_isotropic_constant, slicing_pipeline};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Finding,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Finding => "finding",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Exact geometry up to n = 4, 10^5 Monte Carlo samples.
    Quick,
    /// Exact geometry up to n = 6, 10^6 Monte Carlo samples.
    Full,
}

impl Scale {
    pub fn mc_samples(self) -> usize {
        match self {
            Scale::Quick => 100_000,
            Scale::Full => 1_000_000,
        }
    }

    pub fn max_exact_dim(self) -> usize {
        match self {
            Scale::Quick => 4,
            Scale::Full => 6,
        }
    }
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Scale::Quick),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Parse(format!("unknown scale `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Identities,
    Homogeneous,
    Joins,
    Kuperberg,
    Slicing,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "identities" => Suite::Identities,
            "homogeneous" => Suite::Homogeneous,
            "joins" => Suite::Joins,
            "kuperberg" => Suite::Kuperberg,
            "slicing" => Suite::Slicing,
            _ => return Err(Error::Parse(format!("unknown suite `{s}`"))),
        })
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| std::fmt::Error)?;
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub seed: u64,
    pub scale: Scale,
    /// Replaces every positive tolerance.
    pub tol_override: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: Scale::Quick,
            tol_override: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Part {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    /// Residual and tolerance of the first failing part, or of the part
    /// closest to its tolerance.
    pub residual: f64,
    pub tolerance: f64,
    pub parts: Vec<Part>,
    pub detail: String,
    #[serde(skip)]
    pub runtime: f64,
}

/// Check ids and their anchors. Every id has exactly one anchor.
pub const ANCHORS: &[(&str, &str)] = &[
    ("C01", "orthant J identity"),
    ("C02", "simplex covariance duality"),
    ("C03", "PSD slice isotropic product"),
    ("C04", "section Mahler product identity"),
    ("C05", "log-Laplace derivatives"),
    ("C06", "gradient map round trip"),
    ("C07", "join polarity and join Mahler constant"),
    ("C08", "floating body sublevel test"),
    ("C09", "self-convolution sandwich"),
    ("C10", "Kuperberg counterexample n=50"),
    ("C11", "clipping decomposition probability"),
    ("C12", "slicing certificate"),
    ("C13", "isotropic constant determinant route"),
    ("C14", "PSD Laplace constant"),
    ("F01", "Kuperberg counterexample n=200"),
    ("F02", "cube slicing table"),
    ("F03", "homogeneous duality table"),
    ("F04", "PSD J per dimension"),
];

pub fn anchor(id: &str) -> &'static str {
    ANCHORS
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, a)| *a)
        .unwrap_or("unknown")
}

struct Builder {
    cfg: Config,
    parts: Vec<Part>,
    detail: Vec<String>,
    finding: bool,
}

impl Builder {
    fn new(cfg: Config) -> Self {
        Self {
            cfg,
            parts: Vec::new(),
            detail: Vec::new(),
            finding: false,
        }
    }

    /// Passes iff `residual <= tolerance`.
    fn part(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        let tolerance = match self.cfg.tol_override {
            Some(t) if tolerance > 0.0 => t,
            _ => tolerance,
        };
        self.parts.push(Part {
            name: name.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        });
    }

    /// An unasserted measurement.
    fn value(&mut self, name: impl Into<String>, value: f64) {
        self.parts.push(Part {
            name: name.into(),
            residual: value,
            tolerance: f64::NAN,
            pass: true,
        });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.detail.push(s.into());
    }

    fn finish(self, id: &str) -> Check {
        let status = if self.finding {
            Status::Finding
        } else if !self.parts.is_empty() && self.parts.iter().all(|p| p.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        let lead = self.parts.iter().find(|p| !p.pass).or_else(|| {
            self.parts.iter().max_by(|a, b| {
                let r = |p: &Part| {
                    if p.tolerance > 0.0 {
                        p.residual / p.tolerance
                    } else {
                        p.residual
                    }
                };
                r(a).total_cmp(&r(b))
            })
        });
        Check {
            id: id.into(),
            anchor: anchor(id).into(),
            status,
            residual: lead.map_or(f64::NAN, |p| p.residual),
            tolerance: lead.map_or(f64::NAN, |p| p.tolerance),
            parts: self.parts,
            detail: self.detail.join("; "),
            runtime: 0.0,
        }
    }
}

fn timed(id: &str, cfg: Config, f: impl FnOnce(&mut Builder) -> Result<()>) -> Check {
    let start = Instant::now();
    let mut b = Builder::new(cfg);
    if let Err(e) = f(&mut b) {
        b.part("error", f64::INFINITY, 0.0);
        b.note(format!("error: {e}"));
        b.finding = false;
    }
    let mut c = b.finish(id);
    c.runtime = start.elapsed().as_secs_f64();
    c
}

fn rng_for(cfg: Config, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        cfg.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(salt),
    )
}

/// A simplicial cone in `R^d` with rays `(1, z)`, `z` Gaussian.
pub fn random_simplicial_cone(d: usize, rng: &mut ChaCha8Rng) -> PolyhedralCone {
    loop {
        let rays: Vec<DVector<f64>> = (0..d)
            .map(|_| {
                let mut g = DVector::from_fn(d, |_, _| 0.6 * rng.sample::<f64, _>(StandardNormal));
                g[0] = 1.0;
                g
            })
            .collect();
        if let Ok(v) = PolyhedralCone::from_rays(rays) {
            if v.rays().len() == d {
                return v;
            }
        }
    }
}

/// Alternates simplicial cones and cones over random polytopes.
fn random_cone(i: usize, d: usize, rng: &mut ChaCha8Rng) -> PolyhedralCone {
    if i.is_multiple_of(2) {
        random_simplicial_cone(d, rng)
    } else {
        let n = d - 1;
        let p = random_polytope(n, n + 3, rng.random());
        PolyhedralCone::cone_over(&p).expect("random polytopes contain the origin")
    }
}

pub fn random_interior(v: &PolyhedralCone, rng: &mut ChaCha8Rng) -> DVector<f64> {
    v.rays().iter().fold(DVector::zeros(v.ambient()), |acc, g| {
        acc + g * (rng.random_range(0.2..1.2) / g.norm())
    })
}

pub fn random_dual_interior(v: &PolyhedralCone, rng: &mut ChaCha8Rng) -> DVector<f64> {
    v.facet_normals()
        .iter()
        .fold(DVector::zeros(v.ambient()), |acc, a| {
            acc + a * (rng.random_range(0.2..1.2) / a.norm())
        })
}

fn unit_vectors(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| {
            let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &g / g.norm()
        })
        .collect()
}

pub fn criterion_01(cfg: Config) -> Check {
    timed("C01", cfg, |b| {
        let mut rng = rng_for(cfg, 1);
        let mut worst: f64 = 0.0;
        for n in 1..=6 {
            let v = PolyhedralCone::orthant(n + 1);
            let dual = v.dual()?;
            for _ in 0..20 {
                let x = DVector::from_fn(n + 1, |_, _| rng.random_range(-1.0f64..1.0).exp());
                let j = j_functional(&v, &dual, &x)?.j;
                worst = worst.max((j - (n + 1) as f64).abs());
            }
        }
        b.part("max |J - (n+1)|, n = 1..6", worst, 1e-8);
        Ok(())
    })
}

pub fn criterion_02(cfg: Config) -> Check {
    timed("C02", cfg, |b| {
        for n in 2..=cfg.scale.max_exact_dim() {
            let r = verify_homogeneous_duality_exact(&simplex(n))?;
            b.part(format!("n = {n}"), r.identity_residual, 1e-7);
        }
        Ok(())
    })
}

pub fn criterion_03(cfg: Config) -> Check {
    timed("C03", cfg, |b| {
        let r = verify_homogeneous_duality(
            &psd_slice_oracle(3),
            &psd_slice_polar_oracle(3),
            cfg.scale.mc_samples(),
            cfg.seed,
        )?;
        b.part(
            "relative error of L^2 s^(1/n) vs 1/7",
            (r.lk2_s - r.target).abs() / r.target,
            0.05,
        );
        b.note(format!(
            "L^2 s^(1/n) = {:.6}, L L° s^(1/n) = {:.6}, samples = {}",
            r.lk2_s,
            r.product,
            cfg.scale.mc_samples()
        ));
        Ok(())
    })
}

pub fn criterion_04(cfg: Config) -> Check {
    timed("C04", cfg, |b| {
        let mut rng = rng_for(cfg, 4);
        let mut worst: f64 = 0.0;
        for i in 0..30 {
            let d = 3 + i % 3;
            let v = random_simplicial_cone(d, &mut rng);
            let dual = v.dual()?;
            let x0 = random_interior(&v, &mut rng);
            let y0 = random_dual_interior(&v, &mut rng);
            worst = worst.max(product_identity_check(&v, &dual, &x0, &y0)?.residual);
        }
        b.part("three-way relative residual, 30 cones", worst, 1e-6);
        Ok(())
    })
}

fn relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

pub fn criterion_05(cfg: Config) -> Check {
    timed("C05", cfg, |b| {
        let mut rng = rng_for(cfg, 5);
        let (mut g_err, mut h_err, mut euler): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for i in 0..50 {
            let d = 3 + i % 3;
            let v = random_cone(i / 3, d, &mut rng);
            let y = random_dual_interior(&v, &mut rng);
            let ev = laplace_eval(&v, &y)?;
            let h = 1e-5 * y.norm();
            let mut g_fd = DVector::zeros(d);
            let mut h_fd = DMatrix::zeros(d, d);
            for k in 0..d {
                let mut e = DVector::zeros(d);
                e[k] = h;
                g_fd[k] =
                    (laplace_value(&v, &(&y + &e))? - laplace_value(&v, &(&y - &e))?) / (2.0 * h);
                let col = (laplace_eval(&v, &(&y + &e))?.gradient
                    - laplace_eval(&v, &(&y - &e))?.gradient)
                    / (2.0 * h);
                h_fd.set_column(k, &col);
            }
            g_err = g_err.max((&g_fd - &ev.gradient).amax() / ev.gradient.amax());
            h_err = h_err.max(relative(&h_fd, &ev.hessian));
            euler = euler.max((ev.gradient.dot(&y) + d as f64).abs());
        }
        b.part("gradient vs central differences", g_err, 1e-5);
        b.part("Hessian vs central differences", h_err, 1e-5);
        b.part("Euler relation", euler, 1e-9);
        Ok(())
    })
}

/// Jacobian of `x -> ∇Φ_V*(x)` by Richardson-extrapolated central
/// differences.
fn argmax_jacobian(v: &PolyhedralCone, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let d = x.len();
    let central = |h: f64| -> Result<DMatrix<f64>> {
        let mut fd = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut e = DVector::zeros(d);
            e[k] = h;
            let p = legendre(v, &(x + &e), NEWTON_TOL)?.argmax;
            let m = legendre(v, &(x - &e), NEWTON_TOL)?.argmax;
            fd.set_column(k, &((p - m) / (2.0 * h)));
        }
        Ok(fd)
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

pub fn criterion_06(cfg: Config) -> Check {
    timed("C06", cfg, |b| {
        let mut rng = rng_for(cfg, 6);
        let (mut trip, mut hess): (f64, f64) = (0.0, 0.0);
        for c in 0..10 {
            let d = 3 + c % 3;
            let v = random_cone(c, d, &mut rng);
            for _ in 0..10 {
                let x = random_interior(&v, &mut rng);
                let full = legendre_full(&v, &x, NEWTON_TOL)?;
                trip = trip.max((&full.at_argmax.gradient - &x).norm() / x.norm());
                let fd = argmax_jacobian(&v, &x, 1e-4 * x.norm())?;
                let sym = (&fd + fd.transpose()) * 0.5;
                hess = hess.max(
                    sym_operator_norm(&(&sym - &full.hessian)) / sym_operator_norm(&full.hessian),
                );
            }
        }
        b.part("|grad Phi(grad Phi*(x)) - x| / |x|", trip, 1e-7);
        b.part("Hessian of Phi* vs inverse Hessian of Phi", hess, 1e-6);
        Ok(())
    })
}

pub fn join_factor_pairs(seed: u64) -> Vec<(String, VPolytope, VPolytope)> {
    vec![
        ("seg*seg".into(), cube(1), cube(1)),
        ("seg*tri".into(), cube(1), simplex(2)),
        ("seg*square".into(), cube(1), cube(2)),
        ("tri*tri".into(), simplex(2), simplex(2)),
        ("square*tri".into(), cube(2), simplex(2)),
        ("square*square".into(), cube(2), cube(2)),
        ("seg*tetra".into(), cube(1), simplex(3)),
        ("seg*octa".into(), cube(1), cross(3)),
        (
            "perturbed*seg".into(),
            perturbed_simplex(2, 0.15, seed),
            cube(1),
        ),
    ]
}

pub fn criterion_07(cfg: Config) -> Check {
    timed("C07", cfg, |b| {
        let mut rng = rng_for(cfg, 7);
        let (mut polar, mut join, mut prod): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for (_, k1, k2) in join_factor_pairs(cfg.seed) {
            let dirs = unit_vectors(k1.dim() + k2.dim() + 1, 200, &mut rng);
            polar = polar.max(join_polar_check(&k1, &k2, &dirs)?.residual);
            let m = join_mahler_check(&k1, &k2)?;
            join = join.max(m.join_residual);
            prod = prod.max(m.product_residual);
        }
        b.part("join polarity residual", polar, 1e-8);
        b.part("join Mahler constant relative residual", join, 1e-6);
        b.part("product Mahler constant relative residual", prod, 1e-6);
        Ok(())
    })
}

/// Boundary of the floating body along the ray through `u`, by bisection.
fn floating_radius(v: &PolyhedralCone, delta: f64, u: &DVector<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (1e-3, 1.0);
    while !floating_contains(v, delta, &(u * hi))? {
        hi *= 2.0;
    }
    while floating_contains(v, delta, &(u * lo))? {
        lo *= 0.5;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if floating_contains(v, delta, &(u * mid))? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn floating_disagreements(
    v: &PolyhedralCone,
    dual: &PolyhedralCone,
    delta: f64,
    points: &[DVector<f64>],
    seed: u64,
) -> Result<(usize, usize, usize)> {
    let n = v.ambient() - 1;
    let level = kappa_float(n) - delta.ln();
    let out: Vec<Option<(bool, bool)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<Option<(bool, bool)>> {
            let phi_star = legendre(v, x, NEWTON_TOL)?.value;
            if (phi_star - level).abs() <= 1e-6 {
                return Ok(None);
            }
            let test = floating_contains(v, delta, x)?;
            let oracle = floating_oracle(v, dual, delta, x, 4, seed.wrapping_add(i as u64))?;
            Ok(Some((test != oracle.inside, test)))
        })
        .collect::<Result<_>>()?;
    let compared = out.iter().filter(|o| o.is_some()).count();
    let bad = out.iter().flatten().filter(|o| o.0).count();
    let inside = out.iter().flatten().filter(|o| o.1).count();
    Ok((bad, compared, inside))
}

pub fn criterion_08(cfg: Config) -> Check {
    timed("C08", cfg, |b| {
        let (side, cloud) = match cfg.scale {
            Scale::Quick => (15, 200),
            Scale::Full => (30, 1000),
        };
        let delta = 1.0;
        let v2 = PolyhedralCone::orthant(2);
        let grid: Vec<DVector<f64>> = (0..side * side)
            .map(|k| {
                let s = |i: usize| 0.1 + 2.9 * i as f64 / (side - 1) as f64;
                DVector::from_vec(vec![s(k / side), s(k % side)])
            })
            .collect();
        let (bad2, cmp2, in2) = floating_disagreements(&v2, &v2.dual()?, delta, &grid, cfg.seed)?;
        b.part(
            format!("disagreements on the {side}x{side} grid in R^2"),
            bad2 as f64,
            0.0,
        );

        let v3 = PolyhedralCone::orthant(3);
        let mut rng = rng_for(cfg, 8);
        let pts: Vec<DVector<f64>> = (0..cloud)
            .map(|_| DVector::from_fn(3, |_, _| 0.8 * rng.random_range(-1.2f64..1.2).exp()))
            .collect();
        let (bad3, cmp3, in3) = floating_disagreements(&v3, &v3.dual()?, delta, &pts, cfg.seed)?;
        b.part(
            format!("disagreements on {cloud} points in R^3"),
            bad3 as f64,
            0.0,
        );

        let square = PolyhedralCone::cone_over(&cube(2))?;
        let mut scaling: f64 = 0.0;
        for v in [&v3, &square] {
            let n = v.ambient() - 1;
            for _ in 0..5 {
                let u = random_interior(v, &mut rng);
                let r1 = floating_radius(v, 1.0, &u)?;
                for d in [0.1, 0.5, 2.0] {
                    let rd = floating_radius(v, d, &u)?;
                    scaling = scaling.max((rd / r1 - f64::powf(d, 1.0 / (n + 1) as f64)).abs());
                }
            }
        }
        b.part("boundary scaling delta^(1/(n+1))", scaling, 1e-8);
        b.note(format!(
            "compared {cmp2} grid points ({in2} inside) and {cmp3} cloud points ({in3} inside) outside the 1e-6 shell"
        ));
        Ok(())
    })
}

pub fn criterion_09(cfg: Config) -> Check {
    timed("C09", cfg, |b| {
        let mut rng = rng_for(cfg, 9);
        let mut cones: Vec<(PolyhedralCone, bool)> = Vec::new();
        for k in [cube(2), cube(3), cross(2), cross(3)] {
            cones.push((PolyhedralCone::cone_over(&k)?, true));
        }
        for k in [
            simplex(2),
            simplex(3),
            random_polytope(3, 8, cfg.seed),
            perturbed_simplex(3, 0.15, cfg.seed),
        ] {
            cones.push((PolyhedralCone::cone_over(&k)?, false));
        }
        cones.push((PolyhedralCone::orthant(3), false));
        cones.push((random_simplicial_cone(4, &mut rng), false));
        let (mut lower, mut equality, mut upper): (f64, f64, f64) = (f64::INFINITY, 0.0, 0.0);
        for (v, symmetric) in &cones {
            let mut axis = DVector::zeros(v.ambient());
            axis[0] = 1.0;
            let mut points = vec![];
            if *symmetric {
                points.push(axis);
            }
            for _ in 0..3 {
                points.push(random_interior(v, &mut rng));
            }
            for (i, x) in points.iter().enumerate() {
                let c = convolution_upper_check(v, x)?;
                lower = lower.min(c.lower_slack);
                upper = upper.max(c.upper_ratio.abs());
                if *symmetric && i == 0 {
                    equality = equality.max(c.lower_slack.abs());
                }
                if !c.upper_ratio.is_finite() {
                    upper = f64::INFINITY;
                }
            }
        }
        b.part("-min lower slack", -lower, 1e-9);
        b.part(
            "|lower slack| on centrally symmetric sections",
            equality,
            1e-9,
        );
        b.part(
            "upper slack / n is finite",
            if upper.is_finite() {
                0.0
            } else {
                f64::INFINITY
            },
            0.0,
        );
        b.note(format!("max (Psi - Phi*) / n = {upper:.6}"));
        Ok(())
    })
}

fn kuperberg_parts(b: &mut Builder, n: usize, samples: usize, seed: u64) {
    let m = x1_second_moments(&build_counterexample(n), samples, seed);
    b.part(
        "E_K[x1^2] - 3se >= 1/9",
        1.0 / 9.0 - (m.m_k.value - 3.0 * m.m_k.std_error),
        0.0,
    );
    b.part(
        "E_K°[x1^2] - 3se >= 1e-6",
        1e-6 - (m.m_polar.value - 3.0 * m.m_polar.std_error),
        0.0,
    );
    b.part(
        "phi >= 0.9 product bound",
        0.9 * m.product_bound - m.phi.value,
        0.0,
    );
    b.part("phi > n/(n+2)^2", m.conjectured_max - m.phi.value, 0.0);
    b.note(format!(
        "n = {n}, samples = {samples}, E_K[x1^2] = {:.6} ± {:.1e}, E_K°[x1^2] = {:.6e} ± {:.1e}, product bound = {:.6e}, phi = {:.6e} ± {:.1e}, n/(n+2)^2 = {:.6e}, acceptance K° = {:.4}",
        m.m_k.value,
        m.m_k.std_error,
        m.m_polar.value,
        m.m_polar.std_error,
        m.product_bound,
        m.phi.value,
        m.phi.std_error,
        m.conjectured_max,
        m.acceptance_polar
    ));
}

pub fn criterion_10(cfg: Config) -> Check {
    timed("C10", cfg, |b| {
        kuperberg_parts(b, 50, cfg.scale.mc_samples(), cfg.seed);
        Ok(())
    })
}

pub fn criterion_11(cfg: Config) -> Check {
    timed("C11", cfg, |b| {
        for n in [10, 100] {
            let d = lemma_decomposition_experiment(n, 100_000, cfg.seed.wrapping_add(n as u64));
            let p = &d.probability;
            b.part(
                format!("n = {n}: P >= 1/6 - 3se"),
                (1.0 / 6.0 - 3.0 * p.std_error) - p.value,
                0.0,
            );
            b.note(format!("n = {n}: P = {:.5} ± {:.1e}", p.value, p.std_error));
        }
        Ok(())
    })
}

pub const EPS_GRID: [f64; 4] = [0.05, 0.1, 0.25, 0.4];

pub fn criterion_12(cfg: Config) -> Check {
    timed("C12", cfg, |b| {
        let k = perturbed_simplex(4, 0.2, cfg.seed);
        let mut table = Vec::new();
        let mut bound: f64 = 0.0;
        for eps in EPS_GRID {
            let run = slicing_pipeline(&k, eps, 25, cfg.seed)?;
            let c = &run.certificate;
            let incl = [
                -c.inner_margin,
                -c.outer_margin,
                -c.support_inner_margin,
                -c.support_outer_margin,
                -c.dual_inner_margin,
                -c.dual_outer_margin,
                c.pi_symmetric_gauge - c.slab_eps,
            ]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
            b.part(format!("eps = {eps}: inclusion deficit"), incl, 1e-9);
            b.part(
                format!("eps = {eps}: T° vs K° + pi(y)/y1"),
                c.polar_translate_residual,
                1e-8,
            );
            b.part(
                format!("eps = {eps}: L_T vs determinant route"),
                (c.l_t - run.search.l).abs() / c.l_t,
                1e-6,
            );
            b.part(
                format!("eps = {eps}: search not above start"),
                run.search.l - run.search.l_start,
                0.0,
            );
            let scaled = c.l_t * eps.sqrt();
            bound = bound.max(scaled);
            table.push(format!(
                "eps {eps}: L_T {:.6} L_T*sqrt(eps) {:.6}",
                c.l_t, scaled
            ));
        }
        b.part(
            "L_T*sqrt(eps) bounded",
            if bound.is_finite() {
                0.0
            } else {
                f64::INFINITY
            },
            0.0,
        );
        b.note(table.join(", "));
        b.note(format!("C = {bound:.6}"));
        Ok(())
    })
}

pub fn criterion_13(cfg: Config) -> Check {
    timed("C13", cfg, |b| {
        let mut rng = rng_for(cfg, 13);
        let mut worst: f64 = 0.0;
        for i in 0..30 {
            let d = 3 + i % 3;
            let v = random_cone(i / 3, d, &mut rng);
            let y = random_dual_interior(&v, &mut rng);
            let det = isotropic_objective(&v, &y)?.l;
            let mom = section_isotropic_constant(&v, &y)?;
            worst = worst.max((det - mom).abs() / mom);
        }
        b.part("relative gap, 30 cones", worst, 1e-6);
        Ok(())
    })
}

pub fn criterion_14(cfg: Config) -> Check {
    timed("C14", cfg, |b| {
        let gap = (1..=8)
            .map(|l| (psd_cn(l) - psd_cn_recursive(l)).abs())
            .fold(0.0, f64::max);
        b.part("closed form vs recursion, l = 1..8", gap, 1e-12);
        b.part("C_1 = 0 exactly", psd_cn(1).abs(), 0.0);
        Ok(())
    })
}

pub fn finding_01(cfg: Config) -> Check {
    timed("F01", cfg, |b| {
        let samples = cfg.scale.mc_samples() / 5;
        kuperberg_parts(b, 200, samples, cfg.seed);
        b.finding = true;
        Ok(())
    })
}

pub fn finding_02(cfg: Config) -> Check {
    timed("F02", cfg, |b| {
        let k = cube(4);
        for eps in [0.1, 0.25, 0.4] {
            let run = slicing_pipeline(&k, eps, 25, cfg.seed)?;
            b.value(
                format!("eps = {eps}: L*sqrt(eps)"),
                run.search.l * eps.sqrt(),
            );
        }
        b.finding = true;
        Ok(())
    })
}

pub fn finding_03(cfg: Config) -> Check {
    timed("F03", cfg, |b| {
        for n in 2..=cfg.scale.max_exact_dim() {
            let r = verify_homogeneous_duality_exact(&simplex(n))?;
            b.value(
                format!("simplex n = {n}: (n+2) L L° s^(1/n) - 1"),
                r.product / r.target - 1.0,
            );
        }
        for n in 2..=6 {
            let r = verify_ball_duality(n)?;
            b.value(
                format!("ball n = {n}: (n+2) L L° s^(1/n) - 1"),
                r.product / r.target - 1.0,
            );
        }
        let c = cube(3);
        let r = verify_homogeneous_duality_exact(&c)?;
        b.value(
            "cube n = 3 (not homogeneous): (n+2) L L° s^(1/n) - 1",
            r.product / r.target - 1.0,
        );
        b.finding = true;
        Ok(())
    })
}

pub fn finding_04(cfg: Config) -> Check {
    timed("F04", cfg, |b| {
        let limit = (2.0 * std::f64::consts::PI).ln() - 0.5;
        for l in 1..=8 {
            b.value(
                format!("l = {l}: J/N - (log 2pi - 1/2)"),
                psd_j_per_dim(l) - limit,
            );
        }
        b.finding = true;
        Ok(())
    })
}

type CheckFn = fn(Config) -> Check;

fn suite_checks(suite: Suite) -> Vec<CheckFn> {
    let identities: Vec<CheckFn> = vec![
        criterion_01,
        criterion_04,
        criterion_05,
        criterion_06,
        criterion_08,
        criterion_09,
    ];
    let homogeneous: Vec<CheckFn> = vec![
        criterion_02,
        criterion_03,
        criterion_14,
        finding_03,
        finding_04,
    ];
    let joins: Vec<CheckFn> = vec![criterion_07];
    let kuperberg: Vec<CheckFn> = vec![criterion_10, criterion_11, finding_01];
    let slicing: Vec<CheckFn> = vec![criterion_12, criterion_13, finding_02];
    match suite {
        Suite::Identities => identities,
        Suite::Homogeneous => homogeneous,
        Suite::Joins => joins,
        Suite::Kuperberg => kuperberg,
        Suite::Slicing => slicing,
        Suite::All => [identities, homogeneous, joins, kuperberg, slicing].concat(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub seed: u64,
    pub scale: Scale,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    anchor: &'a str,
    status: Status,
    residual: f64,
    tolerance: f64,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_s: Option<f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    /// Canonical JSON. Wall times are included only on request, so that the
    /// default output is identical across runs with the same seed and scale.
    pub fn to_json(&self, timings: bool) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if timings {
            if let Some(arr) = v.get_mut("checks").and_then(|c| c.as_array_mut()) {
                for (j, c) in arr.iter_mut().zip(&self.checks) {
                    j["runtime_s"] = serde_json::json!(c.runtime);
                }
            }
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn to_csv(&self, timings: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(CsvRow {
                id: &c.id,
                anchor: &c.anchor,
                status: c.status,
                residual: c.residual,
                tolerance: c.tolerance,
                detail: &c.detail,
                runtime_s: timings.then_some(c.runtime),
            })
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Runs the checks of a suite concurrently; the report is ordered by id.
pub fn run_suite(suite: Suite, cfg: Config) -> VerificationReport {
    let mut checks: Vec<Check> = suite_checks(suite)
        .into_par_iter()
        .map(|f| f(cfg))
        .collect();
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    VerificationReport {
        suite,
        seed: cfg.seed,
        scale: cfg.scale,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_are_unique() {
        let mut ids: Vec<&str> = ANCHORS.iter().map(|a| a.0).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), ANCHORS.len());
    }

    #[test]
    fn cheap_checks_pass() {
        let cfg = Config::default();
        for c in [criterion_01(cfg), criterion_14(cfg)] {
            assert_eq!(c.status, Status::Pass, "{c:?}");
        }
    }

    #[test]
    fn failing_part_leads() {
        let mut b = Builder::new(Config::default());
        b.part("a", 0.5, 1.0);
        b.part("b", 2.0, 1.0);
        let c = b.finish("C01");
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.residual, 2.0);
    }
}

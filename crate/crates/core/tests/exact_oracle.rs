//! Brute-force vertex enumeration over exact rationals, used as an oracle for
//! the floating-point double description code.

use approx::assert_relative_eq;
use mahlerlab::body::{HPolytope, VPolytope};
use mahlerlab::models::{lorentz_cn, psd_cn};
use mahlerlab::moments::{body_moments, volume};
use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

type Q = BigRational;

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Solves `A x = b` exactly; `None` if singular.
fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..n {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
                let t = &f * &b[col];
                b[r] -= t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            go(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Every feasible basic solution of `{ <a_i, x> <= b_i }`.
fn brute_force_vertices(rows: &[(Vec<i64>, i64)]) -> Vec<Vec<Q>> {
    let d = rows[0].0.len();
    let mut out: Vec<Vec<Q>> = Vec::new();
    for s in subsets(rows.len(), d) {
        let a = s
            .iter()
            .map(|&i| rows[i].0.iter().map(|&v| q(v)).collect())
            .collect();
        let b = s.iter().map(|&i| q(rows[i].1)).collect();
        let Some(x) = solve(a, b) else { continue };
        let feasible = rows.iter().all(|(a, b)| {
            let lhs = a
                .iter()
                .zip(&x)
                .fold(Q::zero(), |acc, (ai, xi)| acc + q(*ai) * xi);
            lhs <= q(*b)
        });
        if feasible && !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn random_rows(d: usize, m: usize, seed: u64) -> Vec<(Vec<i64>, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    // A box keeps the polytope bounded.
    for i in 0..d {
        let mut e = vec![0; d];
        e[i] = 1;
        rows.push((e.clone(), 4));
        e[i] = -1;
        rows.push((e, 4));
    }
    while rows.len() < 2 * d + m {
        let a: Vec<i64> = (0..d).map(|_| rng.random_range(-3..=3)).collect();
        if a.iter().all(|&v| v == 0) {
            continue;
        }
        rows.push((a, rng.random_range(2..=6)));
    }
    rows
}

fn to_f64(x: &[Q]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().map(|v| v.to_f64().unwrap()))
}

#[test]
fn double_description_matches_exact_enumeration() {
    for seed in 0..20 {
        let d = 2 + (seed as usize) % 2;
        let rows = random_rows(d, 4, seed);
        let exact: Vec<DVector<f64>> = brute_force_vertices(&rows)
            .iter()
            .map(|x| to_f64(x))
            .collect();
        let h = HPolytope::from_rows(
            &rows
                .iter()
                .map(|(a, b)| (a.iter().map(|&v| v as f64).collect(), *b as f64))
                .collect::<Vec<_>>(),
        );
        let got = h.vertices().unwrap();
        assert_eq!(got.len(), exact.len(), "seed {seed}");
        for v in &exact {
            let near = got
                .iter()
                .map(|g| (g - v).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 1e-9, "seed {seed}: vertex {v} missing");
        }
    }
}

/// `|det [v_1 - v_0, …, v_n - v_0]| / n!` in exact arithmetic.
fn exact_simplex_volume(verts: &[Vec<i64>]) -> Q {
    let n = verts.len() - 1;
    let mut m: Vec<Vec<Q>> = (1..=n)
        .map(|i| (0..n).map(|j| q(verts[i][j] - verts[0][j])).collect())
        .collect();
    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c].clone();
        for r in c + 1..n {
            let f = &m[r][c] / &m[c][c];
            for k in c..n {
                let t = &f * &m[c][k];
                m[r][k] -= t;
            }
        }
    }
    let fact: i64 = (1..=n as i64).product();
    det.abs() / q(fact)
}

#[test]
fn simplex_volumes_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tested = 0;
    while tested < 20 {
        let n = 2 + tested % 3;
        let verts: Vec<Vec<i64>> = (0..=n)
            .map(|_| (0..n).map(|_| rng.random_range(-5..=5)).collect())
            .collect();
        let exact = exact_simplex_volume(&verts);
        if exact.is_zero() {
            continue;
        }
        let p = VPolytope::from_rows(
            &verts
                .iter()
                .map(|v| v.iter().map(|&x| x as f64).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_relative_eq!(
            volume(&p).unwrap(),
            exact.to_f64().unwrap(),
            max_relative = 1e-12
        );
        let m = body_moments(&p).unwrap();
        for j in 0..n {
            let mean = verts.iter().map(|v| v[j] as f64).sum::<f64>() / (n + 1) as f64;
            assert!((m.barycenter[j] - mean).abs() < 1e-12);
        }
        tested += 1;
    }
}

#[test]
fn cone_constants_match_statrs_gamma() {
    for l in 1..=8usize {
        let direct = (l * (l - 1)) as f64 / 4.0 * (2.0 * std::f64::consts::PI).ln()
            + (1..=l).map(|k| ln_gamma((k + 1) as f64 / 2.0)).sum::<f64>();
        assert_relative_eq!(psd_cn(l), direct, epsilon = 1e-12);
    }
    for n in 1..=10usize {
        let nf = n as f64;
        let direct =
            nf / 2.0 * std::f64::consts::PI.ln() + ln_gamma(nf + 1.0) - ln_gamma(nf / 2.0 + 1.0);
        assert_relative_eq!(lorentz_cn(n), direct, epsilon = 1e-12);
    }
}

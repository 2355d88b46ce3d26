//! Sampling estimates against exact values, and sanity checks on the
//! counterexample body.

use mahlerlab::body::builders::{cross, cube, simplex};
use mahlerlab::body::oracle::PolytopeOracle;
use mahlerlab::body::ConvexOracle;
use mahlerlab::kuperberg::{build_counterexample, section_volume_ratio};
use mahlerlab::moments::{body_moments, mc_moments, volume};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Z: f64 = 4.5;

fn compare(name: &str, p: mahlerlab::body::VPolytope, samples: usize) {
    let exact = body_moments(&p).unwrap();
    let est = mc_moments(&PolytopeOracle::new(p.clone()), samples, 7).estimate;
    let n = exact.dim();
    for i in 0..n {
        let (v, e) = (est.value.barycenter[i], est.std_error.barycenter[i]);
        assert!(
            (v - exact.barycenter[i]).abs() <= Z * e + 1e-12,
            "{name} mean[{i}]: {v} vs {}",
            exact.barycenter[i]
        );
        for j in 0..n {
            let (v, e) = (
                est.value.second_moment[(i, j)],
                est.std_error.second_moment[(i, j)],
            );
            let t = exact.second_moment[(i, j)];
            assert!(
                (v - t).abs() <= Z * e + 1e-12,
                "{name} M[{i},{j}]: {v} vs {t} (se {e})"
            );
        }
    }
    if est.value.volume.is_finite() {
        let (v, e) = (est.value.volume, est.std_error.volume);
        assert!(
            (v - volume(&p).unwrap()).abs() <= Z * e,
            "{name} volume {v}"
        );
    }
}

#[test]
fn sampled_moments_agree_with_exact_ones() {
    compare("cube", cube(3), 200_000);
    compare("simplex", simplex(3), 200_000);
    compare("cross", cross(4), 200_000);
}

#[test]
fn counterexample_sections() {
    let body = build_counterexample(6);
    // The t = 0 section is K_0 itself.
    let r0 = section_volume_ratio(&body, 0.0, 20_000, 1);
    assert_eq!(r0.value, 1.0);
    // Sections shrink toward the ends and stay nonempty.
    let r_half = section_volume_ratio(&body, 0.5, 50_000, 2);
    let r_end = section_volume_ratio(&body, 1.0, 50_000, 3);
    assert!(r_half.value < 1.0 && r_half.value > r_end.value && r_end.value > 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let oracle = body.oracle();
    for _ in 0..2000 {
        let p = DVector::from_fn(6, |_, _| rng.random_range(-1.1..1.1));
        assert_eq!(oracle.contains(&p, 0.0), body.contains_k(&p, 0.0));
    }
    // K_0 is the cross polytope; the end section is cut by both the l1 ball
    // and the ball of radius r.
    let x = [1.0 - 1e-9, 0.0, 0.0, 0.0, 0.0];
    assert!(body.section_contains(0.0, &x, 0.0));
    assert!(body.section_contains(1.0, &[0.19; 5], 0.0));
    assert!(!body.section_contains(1.0, &[0.21; 5], 0.0));
    assert!(!body.section_contains(1.0, &x, 0.0));
}

use mahlerlab::body::builders::{cube, random_polytope, simplex};
use mahlerlab::body::{PolyhedralCone, VPolytope};
use mahlerlab::cone_transform::{j_functional, laplace_eval, laplace_value, legendre, NEWTON_TOL};
use mahlerlab::models::{equivariance_residual, lorentz_boost, AnalyticCone};
use mahlerlab::moments::{body_moments, body_moments_with_apex, isotropic_constant};
use mahlerlab::slicing::{
    extract_translate, gradient_containment_slack, isotropic_objective, minimize_isotropic,
    slab_region,
};
use mahlerlab::verify::{random_dual_interior, random_interior, random_simplicial_cone};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let one = |p: &[DVector<f64>], q: &[DVector<f64>]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn body(n: usize, seed: u64) -> VPolytope {
    random_polytope(n, n + 2 + (seed % 5) as usize, seed)
}

fn cone(d: usize, seed: u64) -> PolyhedralCone {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if seed.is_multiple_of(2) {
        random_simplicial_cone(d, &mut rng)
    } else {
        PolyhedralCone::cone_over(&body(d - 1, seed)).unwrap()
    }
}

fn unit(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    use rand::Rng;
    let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    &v / v.norm()
}

fn normalized(rays: &[DVector<f64>]) -> Vec<DVector<f64>> {
    rays.iter().map(|r| r / r.norm()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bipolar_returns_the_body(n in 2usize..5, seed in 0u64..1000) {
        let k = body(n, seed);
        let kpp = k.polar_body(1e-12).unwrap().polar_body(1e-12).unwrap();
        prop_assert!(hausdorff(k.vertices(), kpp.vertices()) < 1e-9);
    }

    #[test]
    fn gauge_of_polar_is_support(n in 2usize..5, seed in 0u64..1000) {
        let k = body(n, seed);
        let kp = k.polar_body(1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let u = unit(n, &mut rng);
            let h = k.support(&u);
            prop_assert!((kp.gauge(&u) - h).abs() <= 1e-9 * h.max(1.0));
            let x = &u / k.gauge(&u);
            prop_assert!(k.contains(&(&x * 0.999), 0.0));
            prop_assert!(!k.contains(&(&x * 1.001), 0.0));
        }
    }

    #[test]
    fn dual_cone_is_an_involution(d in 3usize..6, seed in 0u64..1000) {
        let v = cone(d, seed);
        let vv = v.dual().unwrap().dual().unwrap();
        prop_assert!(hausdorff(&normalized(v.rays()), &normalized(vv.rays())) < 1e-9);
    }

    #[test]
    fn moments_do_not_depend_on_the_apex(n in 2usize..5, seed in 0u64..1000) {
        let k = body(n, seed);
        let a = body_moments(&k).unwrap();
        let apex = k.vertices().iter().fold(DVector::zeros(n), |s, v| s + v * 0.3)
            / k.vertices().len() as f64;
        let b = body_moments_with_apex(&k, &apex).unwrap();
        prop_assert!((a.volume - b.volume).abs() <= 1e-11 * a.volume);
        prop_assert!((&a.covariance - &b.covariance).amax() <= 1e-11 * a.covariance.amax());
    }

    #[test]
    fn moments_are_affine_covariant(n in 2usize..5, seed in 0u64..1000) {
        let k = body(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let a = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| {
            use rand::Rng;
            rng.random_range(-0.4..0.4)
        });
        let t = unit(n, &mut rng);
        let direct = body_moments(&k.affine_image(&a, &t).unwrap()).unwrap();
        let mapped = body_moments(&k).unwrap().affine_image(&a, &t);
        prop_assert!((direct.volume - mapped.volume).abs() <= 1e-10 * mapped.volume);
        prop_assert!((&direct.barycenter - &mapped.barycenter).amax() <= 1e-10);
        prop_assert!((&direct.covariance - &mapped.covariance).amax() <= 1e-10 * mapped.covariance.amax());
        let la = isotropic_constant(&direct).unwrap();
        let lb = isotropic_constant(&body_moments(&k).unwrap()).unwrap();
        prop_assert!((la - lb).abs() <= 1e-10);
    }

    #[test]
    fn euler_relations_hold(d in 3usize..6, seed in 0u64..1000) {
        let v = cone(d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_dual_interior(&v, &mut rng);
        let e = laplace_eval(&v, &y).unwrap();
        prop_assert!((e.gradient.dot(&y) + d as f64).abs() < 1e-9);
        prop_assert!((&e.hessian * &y + &e.gradient).amax() < 1e-9 * e.gradient.amax());
        let t: f64 = 1.7;
        let shifted = laplace_value(&v, &(&y * t)).unwrap();
        prop_assert!((shifted - (e.value - d as f64 * t.ln())).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences(d in 3usize..6, seed in 0u64..1000) {
        let v = cone(d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_dual_interior(&v, &mut rng);
        let e = laplace_eval(&v, &y).unwrap();
        let h = 1e-5 * y.norm();
        for k in 0..d {
            let mut s = DVector::zeros(d);
            s[k] = h;
            let fd = (laplace_value(&v, &(&y + &s)).unwrap() - laplace_value(&v, &(&y - &s)).unwrap()) / (2.0 * h);
            prop_assert!((fd - e.gradient[k]).abs() <= 1e-5 * e.gradient.amax());
        }
    }

    #[test]
    fn gradient_maps_are_inverse(d in 3usize..6, seed in 0u64..1000) {
        let v = cone(d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_interior(&v, &mut rng);
        let l = legendre(&v, &x, NEWTON_TOL).unwrap();
        let back = laplace_eval(&v, &l.argmax).unwrap().gradient;
        prop_assert!((&back - &x).norm() <= 1e-9 * x.norm());
        // Value is the Fenchel conjugate at the maximizer.
        let phi = laplace_value(&v, &l.argmax).unwrap();
        prop_assert!((l.value - (x.dot(&l.argmax) - phi)).abs() < 1e-10);
    }

    #[test]
    fn j_is_additive_over_products(a in 2usize..4, b in 2usize..4, seed in 0u64..1000) {
        let v1 = cone(a, seed);
        let v2 = cone(b, seed + 7);
        let v = v1.product(&v2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x1 = random_interior(&v1, &mut rng);
        let x2 = random_interior(&v2, &mut rng);
        let x = DVector::from_iterator(a + b, x1.iter().chain(x2.iter()).copied());
        let j = j_functional(&v, &v.dual().unwrap(), &x).unwrap().j;
        let j1 = j_functional(&v1, &v1.dual().unwrap(), &x1).unwrap().j;
        let j2 = j_functional(&v2, &v2.dual().unwrap(), &x2).unwrap().j;
        prop_assert!((j - j1 - j2).abs() < 1e-8);
    }

    #[test]
    fn laplace_transform_is_equivariant(d in 3usize..5, seed in 0u64..1000) {
        let v = cone(d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
        let t = DMatrix::identity(d, d) + DMatrix::from_fn(d, d, |_, _| {
            use rand::Rng;
            rng.random_range(-0.3..0.3)
        });
        let tv = v.linear_image(&t).unwrap();
        let y = random_dual_interior(&v, &mut rng);
        // Φ_{TV}(T^{-T} y) = Φ_V(y) + log|det T|.
        let ty = t.transpose().try_inverse().unwrap() * &y;
        let lhs = laplace_value(&tv, &ty).unwrap();
        let rhs = laplace_value(&v, &y).unwrap() + t.determinant().abs().ln();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn lorentz_boosts_are_automorphisms(n in 2usize..5, r in -1.0f64..1.0, seed in 0u64..1000) {
        let v = AnalyticCone::Lorentz(n);
        let t = lorentz_boost(n, 1 + (seed as usize) % n, r);
        let mut y = DVector::from_element(n + 1, 0.1);
        y[0] = -1.0;
        prop_assert!(equivariance_residual(&v, &t, &y).unwrap() < 1e-10);
    }

    #[test]
    fn isotropic_constant_is_scale_invariant(d in 3usize..6, seed in 0u64..1000, t in 0.2f64..5.0) {
        let v = cone(d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_dual_interior(&v, &mut rng);
        let a = isotropic_objective(&v, &y).unwrap().l;
        let b = isotropic_objective(&v, &(&y * t)).unwrap().l;
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn slab_gradients_stay_in_the_scaled_section(n in 2usize..4, seed in 0u64..1000) {
        let k = body(n, seed);
        let v = PolyhedralCone::cone_over(&k).unwrap();
        let mut y0 = DVector::zeros(n + 1);
        y0[0] = -1.0;
        let slab = slab_region(&v, &y0, 0.2).unwrap();
        prop_assert!(slab.contains(&y0, 1e-12));
        prop_assert!(slab.contains(&(&y0 * 1.2), 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let y = slab.sample(&mut rng);
            prop_assert!(y[0] <= -1.0 + 1e-12 && y[0] >= -1.2 - 1e-12);
            prop_assert!(gradient_containment_slack(&v, &y0, &y).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn accepted_points_certify(n in 2usize..4, seed in 0u64..1000) {
        let k = body(n, seed);
        let c = body_moments(&k).unwrap().barycenter;
        let k = k.translate(&c);
        let v = PolyhedralCone::cone_over(&k).unwrap();
        let mut y0 = DVector::zeros(n + 1);
        y0[0] = -1.0;
        let eps = 0.25;
        let r = minimize_isotropic(&v, &y0, eps / (1.0 + eps), 6, seed).unwrap();
        prop_assert!(r.l <= r.l_start);
        let cert = extract_translate(&k, &r.y, eps, seed).unwrap();
        prop_assert!(cert.pi_symmetric_gauge <= cert.slab_eps + 1e-9);
        prop_assert!(cert.dual_inner_margin >= -1e-9 && cert.dual_outer_margin >= -1e-9);
    }
}

#[test]
fn simplex_start_is_already_optimal() {
    let k = simplex(3);
    let v = PolyhedralCone::cone_over(&k).unwrap();
    let mut y0 = DVector::zeros(4);
    y0[0] = -1.0;
    let r = minimize_isotropic(&v, &y0, 0.2, 10, 1).unwrap();
    assert!((r.l - r.l_start).abs() <= 1e-6 * r.l_start);
}

#[test]
fn pure_rescale_reproduces_the_body() {
    let k = cube(3);
    let y = DVector::from_vec(vec![-1.1, 0.0, 0.0, 0.0]);
    let c = extract_translate(&k, &y, 0.2, 0).unwrap();
    assert!(hausdorff(&c.t, k.vertices()) < 1e-12);
    assert!((c.inner_margin - 0.2).abs() < 1e-12);
}

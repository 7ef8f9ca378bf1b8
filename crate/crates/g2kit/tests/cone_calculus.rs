use std::sync::OnceLock;

use g2kit::cone_calculus::*;
use g2kit::link_algebra::{preset, solve_nk, LinkAlgebra};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nk_link() -> &'static LinkAlgebra {
    static L: OnceLock<LinkAlgebra> = OnceLock::new();
    L.get_or_init(|| solve_nk(&preset("s3xs3").unwrap()).unwrap().algebra)
}

fn random_form(seed: u64, max_log: u32, orders: impl Fn(&mut ChaCha8Rng) -> Order) -> ConeForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    ConeForm::new((0..n).map(|_| {
        let k = rng.random_range(0..=7);
        let m = rng.random_range(0..=max_log);
        let order = orders(&mut rng);
        ConeTerm::random(k, order, m, &mut rng)
    }))
}

fn rational_order(rng: &mut ChaCha8Rng) -> Order {
    Order::ratio(rng.random_range(-24..=24), rng.random_range(1..=4))
}

fn scale(w: &ConeForm) -> f64 {
    w.max_abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>()) {
        let alg = nk_link();
        let w = random_form(seed, 2, rational_order);
        let dd = cone_d(alg, &cone_d(alg, &w));
        prop_assert!(dd.max_abs() < 1e-10 * scale(&w), "{}", dd.max_abs());
    }

    #[test]
    fn laplacian_two_routes_agree(seed in any::<u64>()) {
        let alg = nk_link();
        let w = random_form(seed, 2, rational_order);
        let direct = cone_laplacian(alg, &w);
        let composed = &cone_codiff(alg, &cone_d(alg, &w)) + &cone_d(alg, &cone_codiff(alg, &w));
        prop_assert!(direct.approx_eq(&composed, 1e-9 * scale(&w)));
    }

    #[test]
    fn codiff_is_signed_star_d_star(seed in any::<u64>()) {
        let alg = nk_link();
        let w = random_form(seed, 2, rational_order);
        let mut expect = ConeForm::zero();
        for k in 0..=7 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let part = w.degree_part(k);
            expect = &expect + &(&cone_star(alg, &cone_d(alg, &cone_star(alg, &part))) * sign);
        }
        prop_assert!(cone_codiff(alg, &w).approx_eq(&expect, 1e-10 * scale(&w)));
    }

    #[test]
    fn star_is_an_involution_preserving_orders(seed in any::<u64>()) {
        let alg = nk_link();
        let w = random_form(seed, 2, rational_order);
        let s = cone_star(alg, &w);
        prop_assert!(cone_star(alg, &s).approx_eq(&w, 1e-12 * scale(&w)));
        let mut a: Vec<f64> = w.orders().iter().map(|o| o.1).collect();
        let mut b: Vec<f64> = s.orders().iter().map(|o| o.1).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn star_matches_ambient_hodge_star(seed in any::<u64>(), r in 0.2f64..5.0) {
        let alg = nk_link();
        let w = random_form(seed, 1, rational_order);
        let metric = cone_metric(alg, r);
        let lhs = to_ambient(&cone_star(alg, &w), r);
        for piece in to_ambient(&w, r) {
            let star = metric.star(&piece);
            let got = lhs.iter().find(|p| p.degree() == star.degree()).cloned()
                .unwrap_or_else(|| g2kit::exterior::Form::zero(7, star.degree()));
            prop_assert!((&got - &star).max_abs() <= 1e-11 * star.max_abs().max(got.max_abs()));
        }
    }

    #[test]
    fn norm_formula_matches_ambient(seed in any::<u64>(), r in 0.1f64..10.0) {
        let alg = nk_link();
        let w = random_form(seed, 2, rational_order);
        let a = cone_norm(alg, &w, r);
        let b = cone_norm_ambient(alg, &w, r);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-300, "{a} vs {b}");
    }

    #[test]
    fn homogeneous_norm_scales_with_order(seed in any::<u64>(), r in 0.1f64..3.0, t in 0.2f64..5.0) {
        let alg = nk_link();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(0..=7);
        let order = rational_order(&mut rng);
        let w = ConeForm::from_term(ConeTerm::random(k, order, 0, &mut rng));
        let lam = order.value();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        prop_assert!(rel(cone_norm(alg, &w, t * r), t.powf(lam) * cone_norm(alg, &w, r)));
        let pulled = dilate(t, &w);
        prop_assert!(rel(cone_norm(alg, &pulled, r), t.powi(k as i32) * cone_norm(alg, &w, t * r)));
    }

    #[test]
    fn dilation_commutes_with_d(seed in any::<u64>(), t in 0.2f64..5.0) {
        let alg = nk_link();
        let w = random_form(seed, 2, rational_order);
        let a = cone_d(alg, &dilate(t, &w));
        let b = dilate(t, &cone_d(alg, &w));
        prop_assert!(a.approx_eq(&b, 1e-9 * scale(&b)));
    }

    #[test]
    fn radial_primitive_inverts_d(seed in any::<u64>(), at_zero in any::<bool>()) {
        let alg = nk_link();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(0..=6);
        let m = rng.random_range(0..=2);
        let shift = Order::ratio(rng.random_range(1..=12), 4);
        let order = if at_zero { shift } else { Order::Approx(-(k as f64) - shift.value()) };
        let eta = ConeForm::from_term(ConeTerm::random(k, order, m, &mut rng));
        let w = cone_d(alg, &eta);
        prop_assume!(!w.is_zero());
        let end = if at_zero { End::Zero } else { End::Infinity };
        let p = radial_primitive(alg, &w, end).unwrap();
        prop_assert!(cone_d(alg, &p).approx_eq(&w, 1e-9 * scale(&w)));
        for (tw, tp) in w.orders().iter().zip(p.orders()) {
            prop_assert_eq!(tp.0 + 1, tw.0);
            prop_assert!((tp.1 - tw.1 - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn radial_primitive_rejects_open_forms() {
    let alg = nk_link();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w = ConeForm::from_term(ConeTerm::random(3, Order::int(1), 0, &mut rng));
    assert!(matches!(radial_primitive(alg, &w, End::Zero), Err(ConeError::NotClosed(_))));
}

#[test]
fn dilation_equivariance_of_cone_structure() {
    let sol = solve_nk(&preset("s3xs3").unwrap()).unwrap();
    let cone = build_cone_g2(&sol.algebra, &sol.structure).unwrap();
    for t in [0.5, 2.0, 10.0] {
        assert!(dilate(t, &cone.phi_c).approx_eq(&(&cone.phi_c * t.powi(3)), 1e-12 * t.powi(3)));
        assert!(dilate(t, &cone.psi_c).approx_eq(&(&cone.psi_c * t.powi(4)), 1e-12 * t.powi(4)));
    }
    let p = radial_primitive(&cone.link, &cone.phi_c, End::Zero).unwrap();
    assert!(p.approx_eq(&cone.phi_potential(), 1e-12));
}

#[test]
fn order_minus_degree_is_dilation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..=7 {
        let w = ConeForm::from_term(ConeTerm::random(k, Order::int(-(k as i64)), 0, &mut rng));
        assert!(dilate(3.0, &w).approx_eq(&w, 1e-12));
        let v = ConeForm::from_term(ConeTerm::random(k, Order::int(0), 0, &mut rng));
        assert!(dilate(3.0, &v).approx_eq(&(&v * 3f64.powi(k as i32)), 1e-9));
    }
}

#[test]
fn nk_violation_is_reported() {
    let sol = solve_nk(&preset("s3xs3").unwrap()).unwrap();
    let mut bad = sol.structure.clone();
    bad.omega = &bad.omega * 1.01;
    assert!(matches!(build_cone_g2(&sol.algebra, &bad), Err(ConeError::NKViolation(_))));
}

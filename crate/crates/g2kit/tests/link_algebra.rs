use std::sync::OnceLock;

use g2kit::exterior::{binom, Form};
use g2kit::g2_pointwise::sqrt_and_inverse;
use g2kit::link_algebra::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solved() -> &'static NkSolution {
    static S: OnceLock<NkSolution> = OnceLock::new();
    S.get_or_init(|| solve_nk(&preset("s3xs3").unwrap()).unwrap())
}

fn algebras() -> Vec<LinkAlgebra> {
    vec![preset("abelian6").unwrap(), preset("s3xs3").unwrap(), solved().algebra.clone()]
}

fn values(alg: &LinkAlgebra, k: usize) -> Vec<(f64, usize)> {
    alg.invariant_spectrum(k).iter().map(|e| (e.value, e.multiplicity)).collect()
}

fn assert_spectrum(got: Vec<(f64, usize)>, expect: &[(f64, usize)]) {
    assert_eq!(got.len(), expect.len(), "{got:?}");
    for ((v, m), (ev, em)) in got.iter().zip(expect) {
        assert!((v - ev).abs() < 1e-9, "{got:?}");
        assert_eq!(m, em, "{got:?}");
    }
}

#[test]
fn nk_spectrum_on_invariant_forms() {
    let alg = &solved().algebra;
    let one = [(10.0, 3), (18.0, 3)];
    let two = [(10.0, 3), (12.0, 1), (18.0, 3), (20.0, 3), (36.0, 5)];
    assert_spectrum(values(alg, 0), &[(0.0, 1)]);
    assert_spectrum(values(alg, 1), &one);
    assert_spectrum(values(alg, 2), &two);
    assert_spectrum(values(alg, 3), &[(0.0, 2), (12.0, 2), (20.0, 6), (36.0, 10)]);
    assert_spectrum(values(alg, 4), &two);
    assert_spectrum(values(alg, 5), &one);
    assert_spectrum(values(alg, 6), &[(0.0, 1)]);
}

#[test]
fn harmonic_forms_of_the_nk_link() {
    let alg = &solved().algebra;
    let counts: Vec<usize> = (0..=6).map(|k| alg.harmonic_representatives(k).len()).collect();
    assert_eq!(counts, vec![1, 0, 0, 2, 0, 0, 1]);
    for h in alg.harmonic_representatives(3) {
        assert!(alg.exterior_d(&h).max_abs() < 1e-12);
        assert!(alg.codiff(&h).max_abs() < 1e-12);
        assert!((alg.norm(&h) - 1.0).abs() < 1e-12);
    }
    let c = &alg.harmonic_representatives(0)[0];
    assert!((c.coeffs()[0].abs() - 1.0).abs() < 1e-12);
    let v = &alg.harmonic_representatives(6)[0];
    assert!((v.top().abs() / alg.metric().volume() - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_reconstructs_laplacian() {
    for alg in algebras() {
        for k in 0..=6 {
            let l = alg.laplacian_matrix(k);
            let g = alg.metric().gram(k);
            let mut rebuilt = DMatrix::zeros(l.nrows(), l.ncols());
            for e in alg.invariant_spectrum(k) {
                for b in &e.basis {
                    let v = b.to_vector();
                    rebuilt += &v * (g * &v).transpose() * e.value;
                }
            }
            assert!((rebuilt - l).amax() < 1e-10 * l.amax().max(1.0));
        }
    }
}

#[test]
fn nk_derived_identity() {
    let s = &solved().structure;
    let alg = &solved().algebra;
    let w2 = s.omega.wedge(&s.omega);
    let lhs = alg.exterior_d(&w2);
    let rhs = s.re_omega3.wedge(&s.omega) * -6.0;
    assert!((&lhs - &rhs).max_abs() < 1e-10);
    assert!((&alg.exterior_d(&s.omega) + &(&s.re_omega3 * 3.0)).max_abs() < 1e-10);
}

/// G-orthogonal projector onto the column space of `b`.
fn projector(b: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    if b.ncols() == 0 || b.nrows() == 0 {
        return DMatrix::zeros(n, n);
    }
    let (half, inv) = sqrt_and_inverse(g);
    let svd = (&half * b).svd(true, false);
    let u = svd.u.unwrap();
    let tol = 1e-10 * svd.singular_values.max();
    let mut q = DMatrix::zeros(n, n);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol {
            q += u.column(i) * u.column(i).transpose();
        }
    }
    inv * q * half
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn d_is_adjoint_to_codiff(seed in any::<u64>(), k in 0usize..6, which in 0usize..3) {
        let alg = &algebras()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Form::random(6, k, &mut rng);
        let b = Form::random(6, k + 1, &mut rng);
        let lhs = alg.inner(&alg.exterior_d(&a), &b);
        let rhs = alg.inner(&a, &alg.codiff(&b));
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn laplacian_commutes_with_d(seed in any::<u64>(), k in 0usize..6, which in 0usize..3) {
        let alg = &algebras()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Form::random(6, k, &mut rng);
        let lhs = alg.laplacian(&alg.exterior_d(&a));
        let rhs = alg.exterior_d(&alg.laplacian(&a));
        prop_assert!((&lhs - &rhs).max_abs() < 1e-9 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn complex_and_star_identities(seed in any::<u64>(), k in 0usize..=6, which in 0usize..3) {
        let alg = &algebras()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Form::random(6, k, &mut rng);
        if k + 2 <= 6 {
            prop_assert!(alg.exterior_d(&alg.exterior_d(&a)).max_abs() < 1e-12);
        }
        if k >= 2 {
            prop_assert!(alg.codiff(&alg.codiff(&a)).max_abs() < 1e-10);
        }
        let sign = if (k * (6 - k)) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((&alg.star(&alg.star(&a)) - &(a.clone() * sign)).max_abs() < 1e-10);
    }

    #[test]
    fn hodge_decomposition(seed in any::<u64>(), k in 0usize..=6, which in 0usize..3) {
        let alg = &algebras()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Form::random(6, k, &mut rng).to_vector();
        let g = alg.metric().gram(k).clone();
        let n = binom(6, k);
        let exact = if k > 0 { alg.d_matrix(k - 1).clone() } else { DMatrix::zeros(n, 0) };
        let coexact = if k < 6 { alg.codiff_matrix(k + 1).clone() } else { DMatrix::zeros(n, 0) };
        let e = projector(&exact, &g) * &x;
        let c = projector(&coexact, &g) * &x;
        let h = &x - &e - &c;
        let l = alg.laplacian_matrix(k);
        prop_assert!((l * &h).amax() < 1e-10 * l.amax().max(1.0) * (1.0 + x.amax()));
        let tol = 1e-12 * x.dot(&(&g * &x));
        prop_assert!(e.dot(&(&g * &c)).abs() < tol);
        prop_assert!(e.dot(&(&g * &h)).abs() < tol);
        prop_assert!(c.dot(&(&g * &h)).abs() < tol);
    }

    #[test]
    fn laplacian_is_nonnegative(k in 0usize..=6, which in 0usize..3) {
        let alg = &algebras()[which];
        for e in alg.invariant_spectrum(k) {
            prop_assert!(e.value >= -1e-10);
        }
    }
}

#[test]
fn solved_metric_matches_the_cone_normalization() {
    let g = solved().algebra.metric().matrix();
    for i in 0..6 {
        for j in 0..6 {
            let expect = if i == j {
                1.0 / 9.0
            } else if (i as isize - j as isize).abs() == 3 {
                -1.0 / 18.0
            } else {
                0.0
            };
            assert!((g[(i, j)] - expect).abs() < 1e-10, "g[{i}][{j}] = {}", g[(i, j)]);
        }
    }
}

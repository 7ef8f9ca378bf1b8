use g2kit::glue_sim::*;
use proptest::prelude::*;

const SETS: [(f64, f64, f64, f64); 3] = [(1.0, -4.0, 0.2, 0.8), (0.5, -4.0, 0.1, 0.9), (2.0, -4.0, 0.3, 0.7)];

fn region_fit(scan: &[ScaleReport], region: Region, kind: NormKind) -> Fit {
    let pts: Vec<(f64, f64)> = scan.iter().map(|r| (r.s, r.region(region).norms().get(kind))).collect();
    fit_exponent(&pts).unwrap()
}

#[test]
fn cutoff_examples() {
    for s in [1e-1, 1e-2, 1e-3] {
        let g = 0.7;
        let sg = f64::powf(s, g);
        assert_eq!(cutoff_u(0.5 * sg, s, g).value, 0.0);
        assert_eq!(cutoff_u(3.0 * sg, s, g).value, 1.0);
        let peak = cutoff_u(1.5 * sg, s, g).d_dr;
        assert!((peak * sg / (15.0 / 8.0) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn envelope_examples() {
    let p = GlueParams::with_rates(1.0, -4.0, 0.2, 0.8);
    let s = 1e-4;
    let env = build_envelopes(&p, s).unwrap();
    let sg = s.powf(p.gamma);
    let zeta = env.get(Label::Zeta).eval(sg, 0);
    let want = s.powf(-p.nu_prime * (1.0 - p.gamma) + p.gamma);
    assert!((zeta / want - 1.0).abs() < 1e-12);
    let xi = s.powi(3) * env.get(Label::Xi).eval(sg, 0);
    assert!((xi / s.powf(3.0 * (1.0 - p.gamma)) - 1.0).abs() < 1e-12);
    let r = 0.01;
    let grad = env.get(Label::Zeta).eval(r, 1);
    assert!((grad / (s.powf(-p.nu_prime) * r.powf(p.nu_prime)) - 1.0).abs() < 1e-12);
    assert_eq!(env.iter().count(), Label::ALL.len());
    assert!(env.iter().all(|e| e.coeff >= 0.0));
    assert!(env.get(Label::Zeta).contains(sg) && !env.get(Label::Zeta).contains(s));
}

#[test]
fn inadmissible_scales_are_rejected() {
    let p = GlueParams::with_rates(0.5, -4.0, 0.1, 0.9);
    assert!(matches!(chi_norm_scan(&p, &[1e-2]), Err(GlueError::InadmissibleScale { .. })));
    assert!(matches!(build_envelopes(&p, 1e-2), Err(GlueError::InadmissibleScale { .. })));
    assert!(chi_norm_scan(&p, &[1e-5]).is_ok());
}

#[test]
fn outer_region_vanishes_and_regions_combine() {
    let p = GlueParams::with_rates(2.0, -4.0, 0.3, 0.7);
    let grid = geometric_grid(1e-6, 1e-3, 4);
    for rep in chi_norm_scan(&p, &grid).unwrap() {
        let outer = rep.region(Region::Outer);
        assert_eq!((outer.c0_norm, outer.l2_norm, outer.l14_dstar_norm), (0.0, 0.0, 0.0));
        let parts: Vec<Norms> = rep.regions.iter().map(|r| r.norms()).collect();
        let c0 = parts.iter().map(|n| n.c0).fold(0.0, f64::max);
        let l2 = parts.iter().map(|n| n.l2 * n.l2).sum::<f64>().sqrt();
        let l14 = parts.iter().map(|n| n.l14.powi(14)).sum::<f64>().powf(1.0 / 14.0);
        assert_eq!(rep.total.c0, c0);
        assert!((rep.total.l2 - l2).abs() <= 1e-10 * l2);
        assert!((rep.total.l14 - l14).abs() <= 1e-10 * l14);
        assert_eq!(rep.region(Region::InnerK).c0_norm, rep.s.powi(4));
    }
}

#[test]
fn region_scalings() {
    let p = GlueParams::with_rates(2.0, -4.0, 0.3, 0.7);
    let scan = chi_norm_scan(&p, &geometric_grid(1e-9, 1e-6, 12)).unwrap();
    let g = p.gamma;
    let annulus_l2 = region_fit(&scan, Region::InnerAnnulus, NormKind::L2);
    assert!((annulus_l2.slope - (4.0 - g / 2.0)).abs() < 0.01, "{annulus_l2:?}");
    // ∇χ ~ s⁴ r⁻⁵ on the annulus
    let annulus_l14 = region_fit(&scan, Region::InnerAnnulus, NormKind::L14);
    assert!((annulus_l14.slope - (4.0 - 4.5 * g)).abs() < 0.01, "{annulus_l14:?}");
    let ratio: Vec<(f64, f64)> = scan
        .iter()
        .map(|r| {
            let o = r.region(Region::Overlap);
            (r.s, o.l2_norm / o.c0_norm)
        })
        .collect();
    let fit = fit_exponent(&ratio).unwrap();
    assert!((fit.slope - 3.5 * g).abs() < 0.01, "{fit:?}");
}

#[test]
fn fit_exponent_recovers_power_laws() {
    let grid = geometric_grid(1e-4, 1e-1, 12);
    let pts: Vec<(f64, f64)> = grid.iter().map(|&s| (s, 3.0 * s.powf(1.37))).collect();
    let f = fit_exponent(&pts).unwrap();
    assert!((f.slope - 1.37).abs() < 1e-12);
    assert!(f.width < 1e-12);

    let mut last = f64::INFINITY;
    for hi in [1e-1, 1e-4, 1e-7, 1e-10] {
        let pts: Vec<(f64, f64)> = geometric_grid(hi * 1e-3, hi, 12).iter().map(|&s| (s, s.powf(0.5) + s.powf(0.8))).collect();
        let err = (fit_exponent(&pts).unwrap().slope - 0.5).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-3);
}

#[test]
fn fit_exponent_errors() {
    let mut pts: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, i as f64)).collect();
    assert!(matches!(fit_exponent(&pts[..7]), Err(GlueError::TooFewPoints(7))));
    pts[4].1 = 0.0;
    assert!(matches!(fit_exponent(&pts), Err(GlueError::NonPositiveValue { index: 4, .. })));
}

#[test]
fn predicted_c0_exponent_example() {
    let e = predicted_exponents(&GlueParams::with_rates(1.0, -4.0, 0.2, 0.8));
    assert!((e.c0 - 0.76).abs() < 1e-12);
    assert!((e.l2 - 3.56).abs() < 1e-12);
    assert!((e.l14 - 0.36).abs() < 1e-12);
}

#[test]
fn fitted_slopes_match_predictions() {
    for (mu, nu, delta, gamma) in SETS {
        let p = GlueParams::with_rates(mu, nu, delta, gamma);
        assert!(p.constraint_violations().is_empty());
        let fit = fit_scan(&p).unwrap();
        for k in NormKind::ALL {
            let (got, want) = (fit.fit(k).slope, fit.predicted.get(k));
            assert!((got - want).abs() < 0.05, "{:?} {}: {got} vs {want}", (mu, nu, delta, gamma), k.name());
        }
    }
}

#[test]
fn norms_move_monotonically_in_s() {
    for (mu, nu, delta, gamma) in SETS {
        let p = GlueParams::with_rates(mu, nu, delta, gamma);
        let fit = fit_scan(&p).unwrap();
        for k in NormKind::ALL {
            let v: Vec<f64> = fit.scan.iter().map(|r| r.total.get(k)).collect();
            let up = fit.predicted.get(k) >= 0.0;
            assert!(v.windows(2).all(|w| if up { w[0] <= w[1] } else { w[0] >= w[1] }), "{} {:?}", k.name(), (mu, nu, delta, gamma));
        }
    }
}

#[test]
fn absorption_branches() {
    // δ < (1−γ)/γ: the annulus term stays subdominant
    let a = GlueParams::with_rates(2.0, -5.0, 0.2, 0.7);
    assert!(a.constraint_violations().is_empty());
    let fa = fit_scan(&a).unwrap();
    assert!((fa.l2.slope - fa.predicted.l2).abs() < 0.05);

    // δ > (1−γ)/γ: s^{4(1−γ)} takes over from s^{3(1−γ)+δγ}
    let b = GlueParams::with_rates(2.0, -5.0, 0.6, 0.7);
    assert_eq!(b.constraint_violations().len(), 1);
    let fb = fit_scan(&b).unwrap();
    let flipped = 4.0 * (1.0 - b.gamma);
    assert!((fb.c0.slope - flipped).abs() < 0.05);
    assert!((fb.l2.slope - (flipped + 3.5 * b.gamma)).abs() < 0.05);
    assert!((fb.l14.slope - (flipped - 0.5 * b.gamma)).abs() < 0.05);
    assert!((fb.l2.slope - fb.predicted.l2).abs() > 0.1);
}

#[test]
fn feasibility_kappa_range() {
    let region = FeasibilityRegion::new(1.0, -4.0, 0.2).unwrap();
    assert!((region.kappa_max() - 0.2).abs() < 1e-15);
    let (mut lo, mut hi) = (1e-9, 1.0);
    assert!(region.nonempty_at(lo) && !region.nonempty_at(hi));
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if region.nonempty_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - 0.2).abs() < 1e-6);
    assert!(!region.nonempty_at(0.0));

    for (mu, delta) in [(0.3, 2.0), (2.0, 3.0), (0.05, 0.01)] {
        let r = FeasibilityRegion::new(mu, -4.0, delta).unwrap();
        assert!((r.kappa_max() - delta.min(0.5).min(mu)).abs() < 1e-15);
    }
}

#[test]
fn critical_residual_rate_empties_the_region() {
    let region = FeasibilityRegion::new(1.0, -3.5, 0.2).unwrap();
    assert_eq!(region.kappa_max(), 0.0);
    for k in [1e-9, 1e-3, 0.1, 0.4] {
        assert!(!region.nonempty_at(k));
        assert!((1..100).all(|i| !region.contains(i as f64 / 100.0, k)));
    }
    assert_eq!(region.kappa_max_direct(), 0.0);
    assert!(region.boundary_table(10).is_empty());
}

#[test]
fn small_kappa_limit() {
    let (mu, delta) = (1.0, 0.2);
    let region = FeasibilityRegion::new(mu, -4.0, delta).unwrap();
    let k = 1e-12;
    let b = region.gamma_lower_bounds(k);
    let want = (7.0 / (7.0 + 2.0 * mu)).max(1.0 / (1.0 + 2.0 * delta));
    let (lo, hi) = region.gamma_interval_direct(k).unwrap();
    assert!((lo - want).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
    // the literal middle bound tends to 1 instead
    assert!((b[1] - 1.0).abs() < 1e-9);
}

#[test]
fn direct_l2_system_is_narrower() {
    let region = FeasibilityRegion::new(1.0, -4.0, 0.2).unwrap();
    assert!((region.kappa_max_direct() - 1.0 / 12.0).abs() < 1e-12);
    assert!(region.contains_direct(0.85, 0.05));
    assert!(!region.contains_direct(0.95, 0.05));
}

#[test]
fn boundary_table_layout() {
    let region = FeasibilityRegion::new(1.0, -4.0, 0.2).unwrap();
    let rows = region.boundary_table(50);
    assert_eq!(rows.len(), 50);
    let top = rows.last().unwrap()[0];
    assert!(top < 0.2 && top > 0.19);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
}

#[test]
fn l2_dominance_on_grid() {
    for (mu, nu, delta) in [(1.0, -4.0, 0.2), (0.5, -4.0, 0.1), (2.0, -5.0, 0.6), (0.3, -3.6, 1.0)] {
        let region = FeasibilityRegion::new(mu, nu, delta).unwrap();
        let rep = l2_dominance(&region, 100, 0.5);
        assert_eq!(rep.points, 10_000);
        assert!(rep.l2_feasible > 0, "{:?}", (mu, nu, delta));
        assert_eq!(rep.violations, 0);
    }
}

fn gate_params() -> GlueParams {
    GlueParams { kappa: 0.05, ..GlueParams::with_rates(2.0, -4.0, 0.5, 2.0 / 3.0) }
}

#[test]
fn joyce_gate_threshold() {
    let p = gate_params();
    let region = FeasibilityRegion::new(p.mu, p.nu_prime, p.delta).unwrap();
    assert!(region.contains_direct(p.gamma, p.kappa));
    let c = JoyceConstants::default();
    let v = joyce_gate_at(&p, 1e-12, &c).unwrap();
    assert!(v.c0 && v.l14 && !v.l2, "{v:?}");
    let s0 = joyce_threshold(&p, &c, 1e-24).unwrap().expect("passes at small s");
    assert!(s0 > 0.0 && s0 < p.max_admissible_s());
    for f in [1e-6, 1e-3, 0.5, 0.99] {
        let v = joyce_gate_at(&p, s0 * f, &c).unwrap();
        assert!(v.all_pass(), "{v:?}");
        assert_eq!(v.injectivity_dominant, Region::Outer);
        assert_eq!(v.curvature_dominant, Region::Outer);
    }
    let above = s0 * 1.01;
    if p.is_admissible(above) {
        assert!(!joyce_gate_at(&p, above, &c).unwrap().all_pass());
    }
}

#[test]
fn joyce_gate_rejects_infeasible_kappa() {
    let p = GlueParams { kappa: 0.5, ..gate_params() };
    let c = JoyceConstants::default();
    let v = joyce_gate_at(&p, 1e-10, &c).unwrap();
    assert!(v.c0 && v.l14 && !v.l2);
    assert_eq!(joyce_threshold(&p, &c, 1e-24).unwrap(), None);
}

#[test]
fn joyce_gate_geometry_models() {
    let p = gate_params();
    let n = Norms::ZERO;
    let c = JoyceConstants { d2: 2.0, ..Default::default() };
    assert!(!joyce_gate(&p, 1e-3, &c, &n).injectivity);
    let c = JoyceConstants { curvature: [1.0, 1.0, 2.0], ..Default::default() };
    assert!(!joyce_gate(&p, 1e-3, &c, &n).curvature);
    let v = joyce_gate(&p, 1e-3, &JoyceConstants::default(), &n);
    assert!(v.all_pass());
    assert!((v.injectivity_radius - 1e-3).abs() < 1e-18);
    assert!((v.curvature_norm - 1e6).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cutoff_is_monotone_and_bounded(t0 in 0.0f64..3.0, dt in 0.0f64..1.0, s in 1e-6f64..0.1, g in 0.05f64..0.95) {
        let sg = s.powf(g);
        let a = cutoff_u(t0 * sg, s, g);
        let b = cutoff_u((t0 + dt) * sg, s, g);
        prop_assert!(a.value <= b.value + 1e-15);
        prop_assert!((0.0..=1.0).contains(&a.value));
        prop_assert!(a.d_dr >= 0.0);
        prop_assert!(a.d_dr * sg <= 15.0 / 8.0 + 1e-12);
    }

    #[test]
    fn fit_recovers_exact_slopes(a in -5.0f64..5.0, c in 0.01f64..100.0, hi in -8.0f64..-1.0) {
        let grid = geometric_grid(10f64.powf(hi - 3.0), 10f64.powf(hi), 12);
        let pts: Vec<(f64, f64)> = grid.iter().map(|&s| (s, c * s.powf(a))).collect();
        let f = fit_exponent(&pts).unwrap();
        prop_assert!((f.slope - a).abs() < 1e-10);
    }

    #[test]
    fn boundary_curves_match_closed_forms(mu in 0.05f64..3.0, nu in -8.0f64..-3.55, delta in 0.01f64..2.0, frac in 0.01f64..0.99) {
        let region = FeasibilityRegion::new(mu, nu, delta).unwrap();
        let k = frac * region.kappa_max();
        let closed = region.gamma_lower_bounds(k);
        for i in 0..3 {
            if let Some(g) = region.boundary_by_bisection(i, k) {
                prop_assert!((g - closed[i]).abs() < 1e-9, "{i}: {g} vs {}", closed[i]);
            } else {
                prop_assert!(closed[i] <= 0.0 || closed[i] >= 1.0);
            }
        }
    }

    #[test]
    fn l2_inequalities_imply_the_others(mu in 0.01f64..4.0, nu in -8.0f64..-3.0, delta in 0.01f64..2.0,
                                         g in 0.001f64..0.999, k in 0.0f64..1.0) {
        let region = FeasibilityRegion::new(mu, nu, delta).unwrap();
        if region.l2_margins(g, k).iter().all(|&m| m >= 0.0) {
            prop_assert!(region.c0_margins(g, k).iter().all(|&m| m >= 0.0));
            prop_assert!(region.l14_margins(g, k).iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn combined_norms_dominate_parts(v in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 1..6)) {
        let parts: Vec<Norms> = v.iter().map(|&(a, b, c)| Norms { c0: a, l2: b, l14: c }).collect();
        let t = Norms::combine(parts.iter());
        for n in &parts {
            prop_assert!(t.c0 >= n.c0 && t.l2 >= n.l2 - 1e-12 && t.l14 >= n.l14 - 1e-12);
        }
        prop_assert!(t.l2 <= parts.iter().map(|n| n.l2).sum::<f64>() + 1e-12);
        prop_assert!(t.l14 <= t.l2.max(parts.iter().map(|n| n.l14).sum::<f64>()) + 1e-12);
    }
}

//! Verification suites. Each returns named checks tagged with the acceptance
//! criterion they belong to, plus the numeric tables behind them.

use g2kit::cone_calculus::{build_cone_g2, cone_d, cone_star, ConeForm, ConeG2, ConeTerm, Order};
use g2kit::exterior::Form;
use g2kit::g2_pointwise::{metric_from_3form, phi0, standard_g2, theta};
use g2kit::glue_sim::{
    fit_scan, joyce_gate_at, joyce_threshold, l2_dominance, FeasibilityRegion, GlueParams, JoyceConstants, NormKind,
};
use g2kit::link_algebra::{solve_nk, LinkAlgebra, NkSolution};
use g2kit::rate_analysis::*;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::output::{Cell, Table};
use crate::Tolerances;

#[derive(Clone, Debug)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl SuiteReport {
    fn check(&mut self, criterion: u8, name: impl Into<String>, value: f64, tolerance: f64, pass: bool) {
        self.checks.push(Check { criterion, name: name.into(), pass, value, tolerance });
    }

    /// Pass when `value < tolerance`.
    fn below(&mut self, criterion: u8, name: impl Into<String>, value: f64, tolerance: f64) {
        self.check(criterion, name, value, tolerance, value < tolerance);
    }

    fn holds(&mut self, criterion: u8, name: impl Into<String>, ok: bool) {
        self.check(criterion, name, ok as u8 as f64, 1.0, ok);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
        self.tables.extend(other.tables);
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["criterion", "check", "pass", "value", "tolerance"]);
        for c in &self.checks {
            t.push(vec![
                Cell::Int(c.criterion as i64),
                Cell::Text(c.name.clone()),
                Cell::Text(if c.pass { "PASS" } else { "FAIL" }.into()),
                Cell::Num(c.value),
                Cell::Num(c.tolerance),
            ]);
        }
        t
    }
}

fn unit(f: Form) -> Form {
    let n = f.coeff_norm();
    f * (1.0 / n)
}

/// Pointwise G2 algebra and the quadratic remainder estimates.
pub fn pointwise(seed: u64, tol: &Tolerances) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g2 = standard_g2();

    let g = metric_from_3form(&phi0()).map(|m| (m.matrix() - DMatrix::identity(7, 7)).amax());
    rep.below(1, "metric(phi0) = identity", g.unwrap_or(f64::INFINITY), tol.pointwise);
    let ranks: Vec<i64> = g2.projector_matrices().iter().map(|p| p.trace().round() as i64).collect();
    rep.holds(1, format!("projection ranks {ranks:?} = [1, 7, 27]"), ranks == [1, 7, 27]);

    let (mut sum_err, mut orth_err) = (0.0f64, 0.0f64);
    for i in 0..400 {
        let four = i >= 200;
        let x = Form::random(7, if four { 4 } else { 3 }, &mut rng);
        let s = if four { g2.project4(&x) } else { g2.project3(&x) };
        let total = &(&s.one + &s.seven) + &s.twenty_seven;
        sum_err = sum_err.max((&total - &x).max_abs());
        let m = g2.metric();
        let parts = [&s.one, &s.seven, &s.twenty_seven];
        for a in 0..3 {
            for b in (a + 1)..3 {
                orth_err = orth_err.max(m.inner(parts[a], parts[b]).abs());
            }
        }
    }
    rep.below(1, "pi1 + pi7 + pi27 = id on 200 random 3- and 4-forms each", sum_err, tol.pointwise);
    rep.below(1, "type components mutually orthogonal", orth_err, tol.pointwise);
    let jpsi = (&g2.j_map(g2.psi()) - &(phi0() * 0.75)).max_abs();
    rep.below(1, "J(psi0) = (3/4) phi0", jpsi, tol.pointwise);
    let mut j_err = 0.0f64;
    for _ in 0..50 {
        let xi = g2.project3(&Form::random(7, 3, &mut rng)).twenty_seven;
        j_err = j_err.max((&g2.j_map(&g2.metric().star(&xi)) + &xi).max_abs());
    }
    rep.below(1, "J(*xi) = -xi on 50 random xi in type 27", j_err, tol.type_split);

    let f0 = g2.remainder_f(&Form::zero(7, 3)).map(|f| f.max_abs()).unwrap_or(f64::INFINITY);
    let g0 = g2.remainder_g(&Form::zero(7, 4)).map(|f| f.max_abs()).unwrap_or(f64::INFINITY);
    rep.check(2, "F(0) = 0 exactly", f0, 0.0, f0 == 0.0);
    rep.check(2, "G(0) = 0 exactly", g0, 0.0, g0 == 0.0);
    let ts = [1e-4, 1e-3, 1e-2];
    let (mut f_var, mut g_var) = (0.0f64, 0.0f64);
    let spread = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        (hi - lo) / lo
    };
    for _ in 0..100 {
        let xi = unit(Form::random(7, 3, &mut rng));
        let eta = unit(Form::random(7, 4, &mut rng));
        let fv: Vec<f64> = ts
            .iter()
            .map(|&t| g2.remainder_f(&(&xi * t)).map(|f| f.coeff_norm() / (t * t)).unwrap_or(f64::NAN))
            .collect();
        let gv: Vec<f64> = ts
            .iter()
            .map(|&t| g2.remainder_g(&(&eta * t)).map(|f| f.coeff_norm() / (t * t)).unwrap_or(f64::NAN))
            .collect();
        f_var = f_var.max(spread(&fv));
        g_var = g_var.max(spread(&gv));
    }
    rep.below(2, "|F(t xi)|/t^2 spread over t in [1e-4, 1e-2]", f_var, tol.quadratic_spread);
    rep.below(2, "|G(t eta)|/t^2 spread over t in [1e-4, 1e-2]", g_var, tol.quadratic_spread);
    let mut fd_err = 0.0f64;
    for _ in 0..20 {
        let xi = unit(Form::random(7, 3, &mut rng));
        let h = 1e-4;
        let plus = theta(&(g2.phi() + &(&xi * h)));
        let minus = theta(&(g2.phi() - &(&xi * h)));
        let err = match (plus, minus) {
            (Ok(p), Ok(m)) => (&(&(&p - &m) * (0.5 / h)) - &g2.theta_derivative(&xi)).max_abs(),
            _ => f64::INFINITY,
        };
        fd_err = fd_err.max(err);
    }
    rep.below(2, "finite-difference derivative of Theta at phi0", fd_err, tol.finite_difference);
    rep
}

/// Nearly Kähler solve on the link and its invariant spectrum.
pub fn link(alg: &LinkAlgebra, tol: &Tolerances) -> (SuiteReport, Option<NkSolution>) {
    let mut rep = SuiteReport::default();
    let sol = match solve_nk(alg) {
        Ok(s) => s,
        Err(e) => {
            rep.check(3, format!("nearly Kahler solve on {}: {e}", alg.name()), f64::INFINITY, tol.nk, false);
            return (rep, None);
        }
    };
    rep.below(3, "nearly Kahler residual", sol.residuals.max(), tol.nk);
    let h1 = sol.algebra.harmonic_representatives(1).len();
    rep.check(3, "invariant harmonic 1-forms", h1 as f64, 0.0, h1 == 0);
    let mut t = Table::new("spectrum", &["degree", "eigenvalue", "multiplicity"]);
    for k in 0..=6 {
        for e in sol.algebra.invariant_spectrum(k) {
            t.push(vec![Cell::Int(k as i64), Cell::Num(e.value), Cell::Int(e.multiplicity as i64)]);
        }
    }
    rep.tables.push(t);
    (rep, Some(sol))
}

/// Cone structure, exactness and the pointwise cross-check.
pub fn cone(sol: &NkSolution, tol: &Tolerances) -> (SuiteReport, Option<ConeG2>) {
    let mut rep = SuiteReport::default();
    let cone = match build_cone_g2(&sol.algebra, &sol.structure) {
        Ok(c) => c,
        Err(e) => {
            rep.holds(4, format!("cone G2 structure: {e}"), false);
            return (rep, None);
        }
    };
    let alg = &cone.link;
    let exact_zero = |w: &ConeForm| if w.is_zero() { 0.0 } else { w.max_abs() };
    rep.check(4, "d(phi_C) = 0", exact_zero(&cone_d(alg, &cone.phi_c)), 0.0, cone_d(alg, &cone.phi_c).is_zero());
    rep.check(4, "d(psi_C) = 0", exact_zero(&cone_d(alg, &cone.psi_c)), 0.0, cone_d(alg, &cone.psi_c).is_zero());
    let star = &cone_star(alg, &cone.phi_c) - &cone.psi_c;
    rep.check(4, "*phi_C = psi_C", exact_zero(&star), 0.0, star.is_zero());
    let p = &cone_d(alg, &cone.phi_potential()) - &cone.phi_c;
    rep.check(4, "phi_C = d(-r^3 omega/3)", exact_zero(&p), 0.0, p.is_zero());
    let q = &cone_d(alg, &cone.psi_potential()) - &cone.psi_c;
    rep.check(4, "psi_C = d(-r^4 Im Omega/4)", exact_zero(&q), 0.0, q.is_zero());
    let theta_res = cone.theta_residual().unwrap_or(f64::INFINITY);
    rep.below(4, "Theta(phi_C) = psi_C at r = 1", theta_res, tol.theta);
    (rep, Some(cone))
}

#[derive(Clone, Copy, Debug)]
pub struct RateScan {
    pub parity: Parity,
    pub from: f64,
    pub to: f64,
}

impl Default for RateScan {
    fn default() -> Self {
        RateScan { parity: Parity::Even, from: -3.5, to: -2.5 }
    }
}

/// Critical rates on a requested interval, plus excluded ranges, the order
/// −3/−4 kernels and the eigenvalue identity.
pub fn rates(cone: &ConeG2, scan: &RateScan, tol: &Tolerances) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let alg = &cone.link;
    let complex = LinkComplex::from_algebra(alg);

    let requested = assemble_dirac_pencil(&complex, scan.parity);
    match critical_rates(&requested, scan.from, scan.to) {
        Ok(set) => {
            let mut t = Table::new("critical_rates", &["lambda", "sigma_min", "kernel_dim", "log_chain"]);
            for r in &set.rates {
                t.push(vec![Cell::Num(r.lambda), Cell::Num(r.sigma_min), Cell::Int(r.kernel_dim as i64), Cell::Int(r.log_chain as i64)]);
            }
            rep.tables.push(t);
            let mut s = Table::new("rate_scan", &["lambda", "sigma_min"]);
            for row in &set.scan {
                s.push(vec![Cell::Num(row.lambda), Cell::Num(row.sigma_min)]);
            }
            rep.tables.push(s);
        }
        Err(e) => rep.holds(5, format!("requested scan [{}, {}]: {e}", scan.from, scan.to), false),
    }

    let mut ex = Table::new("excluded_ranges", &["operator", "degree", "lo", "hi", "min_sigma", "argmin"]);
    let mut run = |op: Operator, k: usize, rep: &mut SuiteReport| match excluded_range_report(&complex, op, k) {
        Ok(r) => {
            ex.push(vec![
                Cell::Text(format!("{op:?}")),
                Cell::Int(k as i64),
                Cell::Num(r.interval.0),
                Cell::Num(r.interval.1),
                Cell::Num(r.min_sigma),
                Cell::Num(r.argmin),
            ]);
            rep.check(5, format!("{op:?} k={k}: no kernel on ({}, {})", r.interval.0, r.interval.1), r.min_sigma, ROOT_TOL, r.min_sigma >= ROOT_TOL);
        }
        Err(e) => rep.holds(5, format!("{op:?} k={k}: {e}"), false),
    };
    for k in (0..=7).filter(|&k| excluded_interval(Operator::Laplacian, k).is_some()) {
        run(Operator::Laplacian, k, &mut rep);
    }
    for k in 0..=7 {
        run(Operator::ClosedCoclosed, k, &mut rep);
    }
    rep.tables.push(ex);
    let lap0 = assemble_laplacian_pencil(&complex, 0);
    for l in [0.0, -5.0] {
        let s = lap0.sigma_min(l);
        rep.below(5, format!("Laplacian on functions has kernel at {l}"), s, ROOT_TOL);
    }

    let even = assemble_dirac_pencil(&complex, Parity::Even);
    match critical_rates(&even, -3.5, -2.5) {
        Ok(set) => {
            rep.check(6, "single even critical rate in (-3.5, -2.5)", set.rates.len() as f64, 1.0, set.rates.len() == 1);
            if let Some(r) = set.rates.first() {
                rep.below(6, "critical rate at -3", (r.lambda + 3.0).abs(), tol.rate);
                rep.check(6, "kernel at -3 is 2-dimensional", r.kernel_dim as f64, 2.0, r.kernel_dim == 2);
                rep.check(6, "log chain at -3", r.log_chain as f64, 0.0, r.log_chain == 0);
                let harmonic = alg.harmonic_representatives(3);
                let mut off = 0.0f64;
                for w in &r.kernel {
                    for t in w.terms() {
                        if t.degree() != 4 {
                            off = off.max(t.max_abs());
                            continue;
                        }
                        off = off.max(t.beta().amax());
                        if let Some(a) = t.alpha_form() {
                            let proj: f64 = harmonic.iter().map(|h| alg.inner(&a, h).powi(2)).sum();
                            off = off.max((proj - alg.inner(&a, &a)).abs());
                        }
                    }
                }
                rep.below(6, "kernel at -3 = dr ^ harmonic 3-forms", off, tol.identity);
            }
        }
        Err(e) => rep.holds(6, format!("even scan near -3: {e}"), false),
    }
    let four = assemble_closed_coclosed_pencil(&complex, 4);
    let kd = four.kernel_dim(-4.0, KERNEL_TOL);
    rep.check(6, "pure 4-form kernel at -4", kd as f64, 0.0, kd == 0);
    let chain = log_chain_check(&four, -4.0);
    rep.check(6, "pure 4-form log chain at -4", chain as f64, 0.0, chain == 0);
    for (i, h) in alg.harmonic_representatives(3).iter().enumerate() {
        let xi = ConeForm::from_term(ConeTerm::link_slot(Order::int(-3), 0, h));
        match type27_report(cone, &xi) {
            Ok(r) => rep.below(6, format!("harmonic 3-form {i} is type 27"), r.pi1.max(r.pi7), tol.type_split),
            Err(e) => rep.holds(6, format!("harmonic 3-form {i}: {e}"), false),
        }
    }

    let mut id = Table::new("eigenvalue_identity", &["degree", "lambda", "factor", "kernel_dim", "residual"]);
    for k in 0..=7 {
        match eigenvalue_identity_check(&complex, k, -10.005, 3.005) {
            Ok(rows) => {
                let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
                for r in &rows {
                    id.push(vec![Cell::Int(k as i64), Cell::Num(r.lambda), Cell::Num(r.factor), Cell::Int(r.kernel_dim as i64), Cell::Num(r.residual)]);
                }
                rep.below(7, format!("eigenvalue identity k={k} ({} rates)", rows.len()), worst, tol.identity);
            }
            Err(e) => rep.holds(7, format!("eigenvalue identity k={k}: {e}"), false),
        }
    }
    rep.tables.push(id);
    rep
}

pub const FIT_SETS: [(f64, f64, f64, f64); 3] = [(1.0, -4.0, 0.2, 0.8), (0.5, -4.0, 0.1, 0.9), (2.0, -4.0, 0.3, 0.7)];

/// Norm scans and exponent fits for each parameter set.
pub fn glue_scan(sets: &[GlueParams], tol: &Tolerances) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let mut fits = Table::new(
        "glue_fits",
        &["mu", "nu_prime", "delta", "gamma", "norm", "slope", "predicted", "width", "window_lo", "window_hi"],
    );
    for (i, p) in sets.iter().enumerate() {
        let label = format!("(mu, nu', delta, gamma) = ({}, {}, {}, {})", p.mu, p.nu_prime, p.delta, p.gamma);
        let fit = match fit_scan(p) {
            Ok(f) => f,
            Err(e) => {
                rep.holds(8, format!("{label}: {e}"), false);
                continue;
            }
        };
        for k in NormKind::ALL {
            let f = fit.fit(k);
            let want = fit.predicted.get(k);
            fits.push(vec![
                Cell::Num(p.mu),
                Cell::Num(p.nu_prime),
                Cell::Num(p.delta),
                Cell::Num(p.gamma),
                Cell::Text(k.name().into()),
                Cell::Num(f.slope),
                Cell::Num(want),
                Cell::Num(f.width),
                Cell::Num(fit.window.0),
                Cell::Num(fit.window.1),
            ]);
            rep.below(8, format!("{label} {} slope {:.4} vs {:.4}", k.name(), f.slope, want), (f.slope - want).abs(), tol.slope);
        }
        let mut monotone = true;
        for k in NormKind::ALL {
            let dir = fit.predicted.get(k).signum();
            monotone &= fit.scan.windows(2).all(|w| dir * (w[1].total.get(k) - w[0].total.get(k)) >= 0.0);
        }
        rep.holds(8, format!("{label} norms monotone in s along predicted direction"), monotone);
        let name = if sets.len() == 1 { "glue_scan".to_string() } else { format!("glue_scan_{}", i + 1) };
        let mut t = Table::new(&name, &["s", "region", "c0", "l2", "l14"]);
        for r in &fit.scan {
            for reg in &r.regions {
                t.push(vec![Cell::Num(r.s), Cell::Text(reg.region.name().into()), Cell::Num(reg.c0_norm), Cell::Num(reg.l2_norm), Cell::Num(reg.l14_dstar_norm)]);
            }
            t.push(vec![Cell::Num(r.s), Cell::Text("total".into()), Cell::Num(r.total.c0), Cell::Num(r.total.l2), Cell::Num(r.total.l14)]);
        }
        rep.tables.push(t);
    }
    rep.tables.push(fits);
    rep
}

/// Feasibility region, its boundary curves and L²-dominance.
pub fn feasibility(mu: f64, nu_prime: f64, delta: f64, rows: usize, tol: &Tolerances) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let region = match FeasibilityRegion::new(mu, nu_prime, delta) {
        Ok(r) => r,
        Err(e) => {
            rep.holds(9, e.to_string(), false);
            return rep;
        }
    };
    let expected = if nu_prime < -3.5 { delta.min(mu).min(-(3.5 + nu_prime)) } else { 0.0 };
    let located = {
        let (mut lo, mut hi) = (0.0, 10.0 * (mu + delta + 1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if region.nonempty_at(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    rep.below(9, format!("kappa supremum {located:.9} vs min(delta, -(7/2+nu'), mu) = {expected}"), (located - expected).abs(), tol.kappa);
    let critical = FeasibilityRegion::new(mu, -3.5, delta).expect("validated above");
    let any = (1..=1000).any(|i| critical.nonempty_at(i as f64 * 1e-3));
    rep.holds(9, "nu' = -7/2: region empty for every kappa > 0", !any && critical.kappa_max() == 0.0);

    let table = region.boundary_table(rows);
    let mut worst = 0.0f64;
    for row in &table {
        let closed = region.gamma_lower_bounds(row[0]);
        for (i, c) in closed.iter().enumerate() {
            if let Some(g) = region.boundary_by_bisection(i, row[0]) {
                worst = worst.max((g - c).abs());
            } else if *c > 0.0 && *c < 1.0 {
                worst = f64::INFINITY;
            }
        }
    }
    rep.below(9, "boundary curves match closed forms", worst, tol.boundary);
    let dom = l2_dominance(&region, 100, 0.5);
    rep.check(
        9,
        format!("L2 dominance on 100x100 grid ({} L2-feasible points)", dom.l2_feasible),
        dom.violations as f64,
        0.0,
        dom.violations == 0,
    );

    let mut t = Table::new("feasibility", &["kappa", "gamma_lb_mu", "gamma_lb_nu", "gamma_lb_delta"]);
    for row in table {
        t.push(row.iter().map(|&x| Cell::Num(x)).collect());
    }
    rep.tables.push(t);
    rep
}

/// Joyce hypotheses with unit constants below a located threshold.
pub fn joyce(p: &GlueParams, c: &JoyceConstants) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let s0 = match joyce_threshold(p, c, 1e-24) {
        Ok(Some(s0)) => s0,
        Ok(None) => {
            rep.holds(10, "gate passes at s = 1e-24", false);
            return rep;
        }
        Err(e) => {
            rep.holds(10, e.to_string(), false);
            return rep;
        }
    };
    rep.check(10, format!("threshold s0 = {s0:.6e} > 0"), s0, 0.0, s0 > 0.0);
    let mut t = Table::new(
        "joyce_gate",
        &["s", "c0_ok", "l2_ok", "l14_ok", "injectivity_radius", "injectivity_ok", "curvature_norm", "curvature_ok"],
    );
    let mut all = true;
    let mut outer = true;
    for f in [1e-8, 1e-6, 1e-4, 1e-2, 0.5, 0.99] {
        let s = s0 * f;
        match joyce_gate_at(p, s, c) {
            Ok(v) => {
                all &= v.all_pass();
                outer &= v.injectivity_dominant == g2kit::glue_sim::Region::Outer
                    && v.curvature_dominant == g2kit::glue_sim::Region::Outer;
                t.push(vec![
                    Cell::Num(s),
                    Cell::Int(v.c0 as i64),
                    Cell::Int(v.l2 as i64),
                    Cell::Int(v.l14 as i64),
                    Cell::Num(v.injectivity_radius),
                    Cell::Int(v.injectivity as i64),
                    Cell::Num(v.curvature_norm),
                    Cell::Int(v.curvature as i64),
                ]);
            }
            Err(e) => {
                all = false;
                rep.holds(10, format!("gate at s = {s:e}: {e}"), false);
            }
        }
    }
    rep.holds(10, "torsion, injectivity and curvature hypotheses hold below s0", all);
    rep.holds(10, "injectivity and curvature dominated by the outer region", outer);
    rep.tables.push(t);
    rep
}

/// Parameters of the default gate run: inside the L² feasibility region.
pub fn default_gate_params() -> GlueParams {
    GlueParams { kappa: 0.05, ..GlueParams::with_rates(2.0, -4.0, 0.5, 2.0 / 3.0) }
}

//! Scaling of the torsion of the glued G2 structure. Every interpolation term
//! is replaced by a power-law magnitude envelope with unit constant, the
//! torsion measure `χ_s` is assembled region by region from those envelopes,
//! and the resulting C⁰ / L² / L¹⁴ norms are fitted against their predicted
//! exponents in `s`. Also: the (γ, κ) feasibility system and a check of the
//! three Joyce hypotheses.
//!
//! One singular point is simulated; several points with rates `μ_i` reduce to
//! this case with `mu = min μ_i`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::par;

/// Relative error target for the radial integrals.
pub const QUAD_REL_TOL: f64 = 1e-8;
pub const FIT_WIDTH_TOL: f64 = 0.05;
/// Largest allowed slope change between the two halves of a fit window.
pub const FIT_DRIFT_TOL: f64 = 0.01;
pub const POINTS_PER_DECADE: usize = 12;
pub const WINDOW_DECADES: f64 = 3.0;
pub const MIN_FIT_POINTS: usize = 8;
/// Relative slack for the equality cases of the Joyce gate.
pub const GATE_REL_TOL: f64 = 1e-12;
const C0_SAMPLES: usize = 256;
const MAX_WINDOW_SHIFTS: usize = 12;
const L14: i32 = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlueError {
    #[error("s = {s} violates s R' < s^γ < 2 s^γ < ε")]
    InadmissibleScale { s: f64 },
    #[error("value {value} at index {index} is not positive")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("need at least {MIN_FIT_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Rates and neck parameters for a single conical singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueParams {
    pub mu: f64,
    pub nu: f64,
    pub nu_prime: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub r_cap: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl Default for GlueParams {
    fn default() -> Self {
        GlueParams {
            mu: 1.0,
            nu: -3.0,
            nu_prime: -4.0,
            delta: 0.2,
            epsilon: 0.5,
            r_cap: 1.1,
            gamma: 0.8,
            kappa: 0.0,
        }
    }
}

impl GlueParams {
    /// `(μ, ν′, δ, γ)` with the other fields at their defaults.
    pub fn with_rates(mu: f64, nu_prime: f64, delta: f64, gamma: f64) -> Self {
        GlueParams { mu, nu_prime, delta, gamma, ..Default::default() }
    }

    /// Domain checks. The strict inequalities `δ < μ` and `δ < (1−γ)/γ` are
    /// reported separately by [`GlueParams::constraint_violations`] so that
    /// the absorption branches can be run deliberately outside them.
    pub fn validate(&self) -> Result<(), GlueError> {
        let bad = |m: &str| Err(GlueError::InvalidParams(m.to_string()));
        let finite = [self.mu, self.nu, self.nu_prime, self.delta, self.epsilon, self.r_cap, self.gamma, self.kappa];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("non-finite field");
        }
        if self.mu <= 0.0 {
            return bad("mu must be positive");
        }
        if self.delta <= 0.0 {
            return bad("delta must be positive");
        }
        if self.nu > -3.0 {
            return bad("nu must be <= -3");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.r_cap <= 1.0 {
            return bad("R must exceed 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.kappa < 0.0 {
            return bad("kappa must be nonnegative");
        }
        Ok(())
    }

    pub fn constraint_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.delta >= self.mu {
            out.push(format!("delta {} >= mu {}", self.delta, self.mu));
        }
        let cap = (1.0 - self.gamma) / self.gamma;
        if self.delta >= cap {
            out.push(format!("delta {} >= (1-gamma)/gamma = {cap}", self.delta));
        }
        out
    }

    pub fn r_prime(&self) -> f64 {
        2.0 * self.r_cap
    }

    pub fn is_admissible(&self, s: f64) -> bool {
        let sg = s.powf(self.gamma);
        s > 0.0 && s < 1.0 && s * self.r_prime() < sg && 2.0 * sg < self.epsilon
    }

    /// Supremum of admissible scales: both neck inequalities must hold.
    pub fn max_admissible_s(&self) -> f64 {
        let a = (self.epsilon / 2.0).powf(1.0 / self.gamma);
        let b = (1.0 / self.r_prime()).powf(1.0 / (1.0 - self.gamma));
        a.min(b)
    }

    /// Largest `s` at which the cross term `s³|ξ| ≤ s^{3(1−γ)}` at the neck
    /// stays below 1/2, the uniform-equivalence margin.
    pub fn uniform_equivalence_threshold(&self) -> f64 {
        0.5f64.powf(1.0 / (3.0 * (1.0 - self.gamma)))
    }

    fn check(&self, s: f64) -> Result<(), GlueError> {
        if self.is_admissible(s) {
            Ok(())
        } else {
            Err(GlueError::InadmissibleScale { s })
        }
    }
}

/// Quintic smoothstep `u_s(r) = u(s^{−γ} r)` and its first two r-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub value: f64,
    pub d_dr: f64,
    pub d2_dr2: f64,
}

pub fn cutoff_u(r: f64, s: f64, gamma: f64) -> Cutoff {
    let scale = s.powf(-gamma);
    let t = r * scale;
    let (v, d1, d2) = smoothstep(t);
    Cutoff { value: v, d_dr: d1 * scale, d2_dr2: d2 * scale * scale }
}

fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 2.0 {
        return (1.0, 0.0, 0.0);
    }
    let x = t - 1.0;
    let v = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let d1 = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let d2 = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (v, d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Alpha,
    A,
    Beta,
    B,
    E,
    Zeta,
    Theta,
    Xi,
    Eta,
}

impl Label {
    pub const ALL: [Label; 9] = [
        Label::Alpha,
        Label::A,
        Label::Beta,
        Label::B,
        Label::E,
        Label::Zeta,
        Label::Theta,
        Label::Xi,
        Label::Eta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::Alpha => "alpha",
            Label::A => "A",
            Label::Beta => "beta",
            Label::B => "B",
            Label::E => "E",
            Label::Zeta => "zeta_s",
            Label::Theta => "theta_s",
            Label::Xi => "xi_i",
            Label::Eta => "eta_i",
        }
    }
}

/// `|∇^j T| ≤ coeff · r^{exponent − j}` on `segment`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub label: Label,
    pub coeff: f64,
    pub exponent: f64,
    pub segment: (f64, f64),
}

impl Envelope {
    pub fn eval(&self, r: f64, derivatives: u32) -> f64 {
        self.coeff * r.powf(self.exponent - derivatives as f64)
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.segment.0 && r < self.segment.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub s: f64,
    map: BTreeMap<Label, Envelope>,
}

impl Envelopes {
    pub fn get(&self, label: Label) -> &Envelope {
        &self.map[&label]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Envelope> {
        self.map.values()
    }

    fn at(&self, label: Label, r: f64, j: u32) -> f64 {
        self.map[&label].eval(r, j)
    }
}

pub fn build_envelopes(p: &GlueParams, s: f64) -> Result<Envelopes, GlueError> {
    p.check(s)?;
    let singular = (0.0, p.epsilon);
    let conical = (s * p.r_prime(), f64::INFINITY);
    let scaled = s.powf(-p.nu_prime);
    let rows = [
        (Label::Alpha, 1.0, p.mu + 1.0, singular),
        (Label::A, 1.0, -2.0 + p.delta, singular),
        (Label::Beta, 1.0, p.mu + 1.0, singular),
        (Label::B, 1.0, -3.0 + p.delta, singular),
        (Label::E, 1.0, -2.0 + p.delta, singular),
        (Label::Zeta, scaled, p.nu_prime + 1.0, conical),
        (Label::Theta, scaled, p.nu_prime + 1.0, conical),
        (Label::Xi, 1.0, -3.0, singular),
        (Label::Eta, 1.0, -4.0, singular),
    ];
    let map = rows
        .into_iter()
        .map(|(label, coeff, exponent, segment)| (label, Envelope { label, coeff, exponent, segment }))
        .collect();
    Ok(Envelopes { s, map })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    InnerK,
    InnerAnnulus,
    Overlap,
    Outer,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::InnerK, Region::InnerAnnulus, Region::Overlap, Region::Outer];

    pub fn name(self) -> &'static str {
        match self {
            Region::InnerK => "inner_K",
            Region::InnerAnnulus => "inner_annulus",
            Region::Overlap => "overlap",
            Region::Outer => "outer",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub c0: f64,
    pub l2: f64,
    pub l14: f64,
}

impl Norms {
    pub const ZERO: Norms = Norms { c0: 0.0, l2: 0.0, l14: 0.0 };

    /// Combine disjoint regions: max for C⁰, ℓ² for L², ℓ¹⁴ for L¹⁴.
    pub fn combine<'a>(parts: impl IntoIterator<Item = &'a Norms>) -> Norms {
        let mut c0 = 0.0f64;
        let mut l2 = 0.0;
        let mut l14_max = 0.0f64;
        let parts: Vec<&Norms> = parts.into_iter().collect();
        for n in &parts {
            c0 = c0.max(n.c0);
            l2 += n.l2 * n.l2;
            l14_max = l14_max.max(n.l14);
        }
        let l14 = if l14_max > 0.0 {
            let sum: f64 = parts.iter().map(|n| (n.l14 / l14_max).powi(L14)).sum();
            l14_max * sum.powf(1.0 / L14 as f64)
        } else {
            0.0
        };
        Norms { c0, l2: l2.sqrt(), l14 }
    }

    pub fn get(&self, which: NormKind) -> f64 {
        match which {
            NormKind::C0 => self.c0,
            NormKind::L2 => self.l2,
            NormKind::L14 => self.l14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    C0,
    L2,
    L14,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::C0, NormKind::L2, NormKind::L14];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::C0 => "c0",
            NormKind::L2 => "l2",
            NormKind::L14 => "l14",
        }
    }
}

/// Norms of `χ_s` (C⁰, L²) and of `∇χ_s` (L¹⁴, bounding `d*χ_s`) on one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub s: f64,
    pub region: Region,
    pub c0_norm: f64,
    pub l2_norm: f64,
    pub l14_dstar_norm: f64,
}

impl NormReport {
    pub fn norms(&self) -> Norms {
        Norms { c0: self.c0_norm, l2: self.l2_norm, l14: self.l14_dstar_norm }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleReport {
    pub s: f64,
    pub regions: Vec<NormReport>,
    pub total: Norms,
}

impl ScaleReport {
    pub fn region(&self, region: Region) -> &NormReport {
        self.regions.iter().find(|r| r.region == region).expect("all regions present")
    }
}

/// Magnitude of `χ_s` and `∇χ_s` at radius `r` on the neck `[s^γ, 2s^γ]`.
pub fn overlap_chi(p: &GlueParams, env: &Envelopes, r: f64) -> (f64, f64) {
    let s = env.s;
    let (s3, s4) = (s.powi(3), s.powi(4));
    let c = cutoff_u(r, s, p.gamma);
    let (u, du, d2u) = (c.value, c.d_dr.abs(), c.d2_dr2.abs());
    let e = |l: Label, j: u32| env.at(l, r, j);

    let a = |j| e(Label::Alpha, j) + s3 * e(Label::A, j);
    let z = |j| e(Label::Zeta, j);
    let drho = du * a(0) + u * a(1) + du * z(0) + (1.0 - u) * z(1);
    let grad_drho = d2u * a(0) + 2.0 * du * a(1) + u * a(2) + d2u * z(0) + 2.0 * du * z(1) + (1.0 - u) * z(2);

    let b = |j| e(Label::Beta, j) + s4 * e(Label::B, j) + s3 * e(Label::E, j);
    let th = |j| e(Label::Theta, j);
    let dtau = du * b(0) + u * b(1) + du * th(0) + (1.0 - u) * th(1);
    let grad_dtau = d2u * b(0) + 2.0 * du * b(1) + u * b(2) + d2u * th(0) + 2.0 * du * th(1) + (1.0 - u) * th(2);

    let q = s4 * e(Label::Eta, 0) + s3 * e(Label::Xi, 0) + dtau;
    let grad_q = s4 * e(Label::Eta, 1) + s3 * e(Label::Xi, 1) + grad_dtau;
    let chi = drho + dtau + s4 * e(Label::Eta, 0) + q * q;
    let grad = grad_drho + grad_dtau + s4 * e(Label::Eta, 1) + 2.0 * q * grad_q;
    (chi, grad)
}

/// Magnitude of `χ_s` and `∇χ_s` on the inner annulus `(2s^γ, ε)`.
pub fn annulus_chi(env: &Envelopes, r: f64) -> (f64, f64) {
    let s = env.s;
    let (s3, s4) = (s.powi(3), s.powi(4));
    let eta = env.at(Label::Eta, r, 0);
    let q = s4 * eta + s3 * env.at(Label::Xi, r, 0);
    let grad_q = s4 * env.at(Label::Eta, r, 1) + s3 * env.at(Label::Xi, r, 1);
    (s4 * eta + q * q, s4 * env.at(Label::Eta, r, 1) + 2.0 * q * grad_q)
}

/// `∫_a^b f` to relative accuracy [`QUAD_REL_TOL`].
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rough = quadrature::integrate(&f, a, b, 1e-6).integral.abs();
    if rough == 0.0 {
        return 0.0;
    }
    quadrature::integrate(&f, a, b, QUAD_REL_TOL * 1e-2 * rough).integral
}

/// Supremum of `f` on `[a, b]`: dense sampling then golden-section refinement.
fn supremum(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = (b - a) / (C0_SAMPLES - 1) as f64;
    let (mut best_i, mut best) = (0, f(a));
    for i in 1..C0_SAMPLES {
        let v = f(a + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x0, mut x1) = (lo, hi);
    for _ in 0..80 {
        let m0 = x1 - g * (x1 - x0);
        let m1 = x0 + g * (x1 - x0);
        if f(m0) >= f(m1) {
            x1 = m1;
        } else {
            x0 = m0;
        }
    }
    best.max(f(0.5 * (x0 + x1)))
}

/// `(∫ f(r)^p r⁶ dr)^{1/p}` over `[s^γ t0, s^γ t1]`, computed in the
/// rescaled variable `t = r s^{−γ}` with `f` normalized by `scale`.
fn radial_norm(f: &dyn Fn(f64) -> f64, sg: f64, t0: f64, t1: f64, p: i32, scale: f64, log_var: bool) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let integral = if log_var {
        let g = |x: f64| {
            let t = x.exp();
            (f(sg * t) / scale).powi(p) * t.powi(7)
        };
        integrate(g, t0.ln(), t1.ln())
    } else {
        let g = |t: f64| (f(sg * t) / scale).powi(p) * t.powi(6);
        integrate(&g, t0, 1.5f64.max(t0)) + integrate(&g, 1.5f64.max(t0), t1)
    };
    scale * sg.powf(7.0 / p as f64) * integral.powf(1.0 / p as f64)
}

/// Region-wise norms of `χ_s` at one admissible scale.
pub fn chi_norms_at(p: &GlueParams, s: f64) -> Result<ScaleReport, GlueError> {
    let env = build_envelopes(p, s)?;
    let sg = s.powf(p.gamma);
    let mut regions = Vec::with_capacity(4);

    let s4 = s.powi(4);
    regions.push(NormReport { s, region: Region::InnerK, c0_norm: s4, l2_norm: s4, l14_dstar_norm: s4 });

    let chi = |r: f64| annulus_chi(&env, r).0;
    let grad = |r: f64| annulus_chi(&env, r).1;
    let t_end = p.epsilon / sg;
    let c0 = supremum(chi, 2.0 * sg, p.epsilon);
    let g0 = supremum(grad, 2.0 * sg, p.epsilon);
    regions.push(NormReport {
        s,
        region: Region::InnerAnnulus,
        c0_norm: c0,
        l2_norm: radial_norm(&chi, sg, 2.0, t_end, 2, c0, true),
        l14_dstar_norm: radial_norm(&grad, sg, 2.0, t_end, L14, g0, true),
    });

    let chi = |r: f64| overlap_chi(p, &env, r).0;
    let grad = |r: f64| overlap_chi(p, &env, r).1;
    let c0 = supremum(chi, sg, 2.0 * sg);
    let g0 = supremum(grad, sg, 2.0 * sg);
    regions.push(NormReport {
        s,
        region: Region::Overlap,
        c0_norm: c0,
        l2_norm: radial_norm(&chi, sg, 1.0, 2.0, 2, c0, false),
        l14_dstar_norm: radial_norm(&grad, sg, 1.0, 2.0, L14, g0, false),
    });

    regions.push(NormReport { s, region: Region::Outer, c0_norm: 0.0, l2_norm: 0.0, l14_dstar_norm: 0.0 });

    let total = Norms::combine(regions.iter().map(|r| r.norms()).collect::<Vec<_>>().iter());
    Ok(ScaleReport { s, regions, total })
}

/// Norm reports for every scale, in ascending `s`.
pub fn chi_norm_scan(p: &GlueParams, s_list: &[f64]) -> Result<Vec<ScaleReport>, GlueError> {
    p.validate()?;
    if let Some(&s) = s_list.iter().find(|&&s| !p.is_admissible(s)) {
        return Err(GlueError::InadmissibleScale { s });
    }
    let mut sorted = s_list.to_vec();
    sorted.sort_by(f64::total_cmp);
    par::map(&sorted, |&s| chi_norms_at(p, s)).into_iter().collect()
}

/// Geometric grid from `lo` to `hi` with `per_decade` points per decade,
/// both ends included.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

/// Default fitting window: three decades ending at `min(0.1, 0.9 s_max)`.
pub fn default_window(p: &GlueParams) -> (f64, f64) {
    let hi = 0.1f64.min(0.9 * p.max_admissible_s());
    (hi * 10f64.powf(-WINDOW_DECADES), hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the log-log line.
    pub width: f64,
}

/// Least-squares slope of `log value` against `log s`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<Fit, GlueError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(GlueError::TooFewPoints(points.len()));
    }
    for (i, &(s, v)) in points.iter().enumerate() {
        if !(v > 0.0) {
            return Err(GlueError::NonPositiveValue { index: i, value: v });
        }
        if !(s > 0.0) {
            return Err(GlueError::NonPositiveValue { index: i, value: s });
        }
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(s, v)| (s.ln(), v.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let width = xy.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Ok(Fit { slope, intercept, width })
}

/// Predicted exponents of `||χ_s||_{C⁰}`, `||χ_s||_{L²}`, `||d*χ_s||_{L¹⁴}`.
pub fn predicted_exponents(p: &GlueParams) -> Norms {
    let g = p.gamma;
    let c0 = (g * p.mu).min(-p.nu_prime * (1.0 - g)).min(3.0 * (1.0 - g) + p.delta * g);
    Norms { c0, l2: c0 + 3.5 * g, l14: c0 - 0.5 * g }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub params: GlueParams,
    pub window: (f64, f64),
    pub scan: Vec<ScaleReport>,
    pub c0: Fit,
    pub l2: Fit,
    pub l14: Fit,
    pub predicted: Norms,
}

impl ExponentFit {
    pub fn fit(&self, which: NormKind) -> &Fit {
        match which {
            NormKind::C0 => &self.c0,
            NormKind::L2 => &self.l2,
            NormKind::L14 => &self.l14,
        }
    }

    pub fn max_width(&self) -> f64 {
        self.c0.width.max(self.l2.width).max(self.l14.width)
    }

    /// Largest change of fitted slope between the lower and upper halves of
    /// the window, over the three norms. Measures mixed-power contamination.
    pub fn max_drift(&self) -> f64 {
        let half = self.scan.len() / 2;
        let (lo, hi) = (&self.scan[..=half], &self.scan[half..]);
        NormKind::ALL
            .iter()
            .map(|&k| {
                let series = |part: &[ScaleReport]| -> Vec<(f64, f64)> { part.iter().map(|r| (r.s, r.total.get(k))).collect() };
                match (fit_exponent(&series(lo)), fit_exponent(&series(hi))) {
                    (Ok(a), Ok(b)) => (a.slope - b.slope).abs(),
                    _ => f64::INFINITY,
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Fit the three total-norm slopes on one window.
pub fn fit_window(p: &GlueParams, lo: f64, hi: f64) -> Result<ExponentFit, GlueError> {
    let grid = geometric_grid(lo, hi, POINTS_PER_DECADE);
    let scan = chi_norm_scan(p, &grid)?;
    let series = |k: NormKind| -> Vec<(f64, f64)> { scan.iter().map(|r| (r.s, r.total.get(k))).collect() };
    Ok(ExponentFit {
        params: *p,
        window: (lo, hi),
        c0: fit_exponent(&series(NormKind::C0))?,
        l2: fit_exponent(&series(NormKind::L2))?,
        l14: fit_exponent(&series(NormKind::L14))?,
        predicted: predicted_exponents(p),
        scan,
    })
}

/// Fit on the default window, moving it a decade toward 0 while mixed powers
/// keep the residual above [`FIT_WIDTH_TOL`] or the half-window slope drift
/// above [`FIT_DRIFT_TOL`].
pub fn fit_scan(p: &GlueParams) -> Result<ExponentFit, GlueError> {
    let (mut lo, mut hi) = default_window(p);
    let mut fit = fit_window(p, lo, hi)?;
    for _ in 0..MAX_WINDOW_SHIFTS {
        if fit.max_width() <= FIT_WIDTH_TOL && fit.max_drift() <= FIT_DRIFT_TOL {
            break;
        }
        lo /= 10.0;
        hi /= 10.0;
        fit = fit_window(p, lo, hi)?;
    }
    Ok(fit)
}

/// The (γ, κ) system for a given `(μ_min, ν′, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityRegion {
    pub mu: f64,
    pub nu_prime: f64,
    pub delta: f64,
}

impl FeasibilityRegion {
    pub fn new(mu: f64, nu_prime: f64, delta: f64) -> Result<Self, GlueError> {
        if !(mu > 0.0) || !(delta > 0.0) || !nu_prime.is_finite() {
            return Err(GlueError::InvalidParams(format!("mu={mu}, nu'={nu_prime}, delta={delta}")));
        }
        Ok(FeasibilityRegion { mu, nu_prime, delta })
    }

    /// The three γ lower bounds `(7/2+κ)/(7/2+μ)`, `1 + κ/(7/2+ν′)`,
    /// `(1+2κ)/(1+2δ)`. The middle one is `+∞` when `ν′ = −7/2` and κ > 0.
    pub fn gamma_lower_bounds(&self, kappa: f64) -> [f64; 3] {
        let c = 3.5 + self.nu_prime;
        let nu = if c == 0.0 {
            if kappa > 0.0 {
                f64::INFINITY
            } else {
                1.0
            }
        } else {
            1.0 + kappa / c
        };
        [(3.5 + kappa) / (3.5 + self.mu), nu, (1.0 + 2.0 * kappa) / (1.0 + 2.0 * self.delta)]
    }

    /// `(γ, κ)` is in the region when κ > 0, every bound lies in (0, 1), and
    /// `max bound ≤ γ < 1`.
    pub fn contains(&self, gamma: f64, kappa: f64) -> bool {
        if !(kappa > 0.0) || !(gamma < 1.0) {
            return false;
        }
        let b = self.gamma_lower_bounds(kappa);
        b.iter().all(|&x| x > 0.0 && x < 1.0) && b.iter().all(|&x| gamma >= x)
    }

    pub fn nonempty_at(&self, kappa: f64) -> bool {
        let b = self.gamma_lower_bounds(kappa);
        kappa > 0.0 && b.iter().all(|&x| x > 0.0 && x < 1.0)
    }

    /// Supremum of feasible κ (0 when the region is empty).
    pub fn kappa_max(&self) -> f64 {
        let c = -(3.5 + self.nu_prime);
        if c <= 0.0 {
            return 0.0;
        }
        self.delta.min(self.mu).min(c)
    }

    /// The three L²-exponent inequalities, as margins `exponent − (7/2 + κ)`.
    pub fn l2_margins(&self, gamma: f64, kappa: f64) -> [f64; 3] {
        let a = self.c0_terms(gamma);
        a.map(|x| x + 3.5 * gamma - 3.5 - kappa)
    }

    pub fn c0_margins(&self, gamma: f64, kappa: f64) -> [f64; 3] {
        self.c0_terms(gamma).map(|x| x - kappa)
    }

    pub fn l14_margins(&self, gamma: f64, kappa: f64) -> [f64; 3] {
        self.c0_terms(gamma).map(|x| x - 0.5 * gamma + 0.5 - kappa)
    }

    fn c0_terms(&self, gamma: f64) -> [f64; 3] {
        [gamma * self.mu, -self.nu_prime * (1.0 - gamma), 3.0 * (1.0 - gamma) + self.delta * gamma]
    }

    /// `(γ, κ)` satisfies the L² inequalities themselves, with γ ∈ (0, 1).
    pub fn contains_direct(&self, gamma: f64, kappa: f64) -> bool {
        kappa > 0.0 && gamma > 0.0 && gamma < 1.0 && self.l2_margins(gamma, kappa).iter().all(|&m| m >= 0.0)
    }

    /// γ-interval satisfying the L² inequalities directly at `kappa`: the μ
    /// and δ bounds from below, the ν′ bound from above (for `ν′ < −7/2`).
    pub fn gamma_interval_direct(&self, kappa: f64) -> Option<(f64, f64)> {
        let c = 3.5 + self.nu_prime;
        if c >= 0.0 || !(kappa > 0.0) {
            return None;
        }
        let b = self.gamma_lower_bounds(kappa);
        let lo = b[0].max(b[2]).max(0.0);
        let hi = b[1].min(1.0);
        (lo <= hi).then_some((lo, hi))
    }

    /// Supremum of κ for which some γ ∈ (0, 1) satisfies the L² inequalities
    /// directly. The `ν′` inequality bounds γ from above when `ν′ < −7/2`.
    pub fn kappa_max_direct(&self) -> f64 {
        let c = -(3.5 + self.nu_prime);
        if c <= 0.0 {
            return 0.0;
        }
        // γ_lo(κ) = max(μ-bound, δ-bound) rises in κ, γ_hi(κ) = 1 − κ/c falls.
        let gap = |k: f64| {
            let b = self.gamma_lower_bounds(k);
            (1.0 - k / c) - b[0].max(b[2])
        };
        let (mut lo, mut hi) = (0.0, c);
        if gap(lo) <= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Boundary γ of the `i`-th L² inequality at `kappa`, located by
    /// bisection on `γ ∈ [0, 1]`. `None` when the equality has no root there.
    pub fn boundary_by_bisection(&self, i: usize, kappa: f64) -> Option<f64> {
        let f = |g: f64| self.l2_margins(g, kappa)[i];
        let (mut lo, mut hi) = (0.0, 1.0);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() == fhi.signum() {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Boundary table with `n` samples at `κ_i = κ_max · i/(n+1)`; empty
    /// when the region is.
    pub fn boundary_table(&self, n: usize) -> Vec<[f64; 4]> {
        let km = self.kappa_max();
        if km <= 0.0 {
            return Vec::new();
        }
        let rows: Vec<usize> = (1..=n).collect();
        par::map(&rows, |&i| {
            let k = km * i as f64 / (n + 1) as f64;
            let b = self.gamma_lower_bounds(k);
            [k, b[0], b[1], b[2]]
        })
    }
}

/// Result of checking L²-dominance over a (γ, κ) grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    pub points: usize,
    pub l2_feasible: usize,
    pub violations: usize,
}

/// On an `n × n` grid of `γ ∈ (0,1)`, `κ ∈ (0, kappa_hi)`: wherever the L²
/// inequalities hold, the C⁰ and L¹⁴ ones must too.
pub fn l2_dominance(region: &FeasibilityRegion, n: usize, kappa_hi: f64) -> DominanceReport {
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let verdicts = par::map(&cells, |&(i, j)| {
        let g = (i as f64 + 0.5) / n as f64;
        let k = kappa_hi * (j as f64 + 0.5) / n as f64;
        let l2 = region.l2_margins(g, k).iter().all(|&m| m >= 0.0);
        let rest = region.c0_margins(g, k).iter().chain(region.l14_margins(g, k).iter()).all(|&m| m >= 0.0);
        (l2, l2 && !rest)
    });
    DominanceReport {
        points: cells.len(),
        l2_feasible: verdicts.iter().filter(|v| v.0).count(),
        violations: verdicts.iter().filter(|v| v.1).count(),
    }
}

/// Constants for the Joyce check. Region constants are ordered
/// (inner, overlap, outer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoyceConstants {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub injectivity: [f64; 3],
    pub curvature: [f64; 3],
}

impl Default for JoyceConstants {
    fn default() -> Self {
        JoyceConstants { d1: 1.0, d2: 1.0, d3: 1.0, injectivity: [1.0; 3], curvature: [1.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoyceVerdict {
    pub s: f64,
    pub c0: bool,
    pub l2: bool,
    pub l14: bool,
    pub injectivity_radius: f64,
    pub injectivity: bool,
    pub injectivity_dominant: Region,
    pub curvature_norm: f64,
    pub curvature: bool,
    pub curvature_dominant: Region,
}

impl JoyceVerdict {
    pub fn torsion_ok(&self) -> bool {
        self.c0 && self.l2 && self.l14
    }

    pub fn all_pass(&self) -> bool {
        self.torsion_ok() && self.injectivity && self.curvature
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + GATE_REL_TOL)
}

/// Check the torsion, injectivity-radius and curvature hypotheses at `s`
/// against the supplied total norms.
pub fn joyce_gate(p: &GlueParams, s: f64, c: &JoyceConstants, norms: &Norms) -> JoyceVerdict {
    let k = p.kappa;
    let inj = [c.injectivity[0], c.injectivity[1] * s.powf(p.gamma), c.injectivity[2] * s];
    let curv = [c.curvature[0], c.curvature[1] * s.powf(-2.0 * p.gamma), c.curvature[2] * s.powi(-2)];
    let regions = [Region::InnerK, Region::Overlap, Region::Outer];
    let (imin, &ival) = inj.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let (cmax, &cval) = curv.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    JoyceVerdict {
        s,
        c0: le(norms.c0, c.d1 * s.powf(k)),
        l2: le(norms.l2, c.d1 * s.powf(3.5 + k)),
        l14: le(norms.l14, c.d1 * s.powf(-0.5 + k)),
        injectivity_radius: ival,
        injectivity: le(c.d2 * s, ival),
        injectivity_dominant: regions[imin],
        curvature_norm: cval,
        curvature: le(cval, c.d3 * s.powi(-2)),
        curvature_dominant: regions[cmax],
    }
}

pub fn joyce_gate_at(p: &GlueParams, s: f64, c: &JoyceConstants) -> Result<JoyceVerdict, GlueError> {
    let report = chi_norms_at(p, s)?;
    Ok(joyce_gate(p, s, c, &report.total))
}

/// Largest `s` below which the gate passes, by bisection in `log s` between
/// `s_lo` (must pass) and the admissible supremum. `None` if `s_lo` fails.
pub fn joyce_threshold(p: &GlueParams, c: &JoyceConstants, s_lo: f64) -> Result<Option<f64>, GlueError> {
    p.validate()?;
    let pass = |s: f64| joyce_gate_at(p, s, c).map(|v| v.all_pass());
    if !pass(s_lo)? {
        return Ok(None);
    }
    let hi_s = p.max_admissible_s() * (1.0 - 1e-9);
    if pass(hi_s)? {
        return Ok(Some(hi_s));
    }
    let (mut lo, mut hi) = (s_lo.ln(), hi_s.ln());
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if pass(mid.exp())? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_matches_at_the_joints() {
        for t in [1.0, 2.0] {
            let a = smoothstep(t - 1e-7);
            let b = smoothstep(t + 1e-7);
            assert!((a.0 - b.0).abs() < 1e-12);
            assert!((a.1 - b.1).abs() < 1e-9);
            assert!((a.2 - b.2).abs() < 1e-5);
        }
        assert_eq!(smoothstep(1.5).1, 15.0 / 8.0);
    }

    #[test]
    fn admissibility_edges() {
        let p = GlueParams::default();
        let s = p.max_admissible_s();
        assert!(p.is_admissible(0.999 * s));
        assert!(!p.is_admissible(1.001 * s));
        assert!(matches!(build_envelopes(&p, 0.5), Err(GlueError::InadmissibleScale { .. })));
    }

    #[test]
    fn combine_is_max_and_p_sums() {
        let a = Norms { c0: 1.0, l2: 3.0, l14: 1.0 };
        let b = Norms { c0: 2.0, l2: 4.0, l14: 1.0 };
        let c = Norms::combine([&a, &b]);
        assert_eq!(c.c0, 2.0);
        assert!((c.l2 - 5.0).abs() < 1e-15);
        assert!((c.l14 - 2f64.powf(1.0 / 14.0)).abs() < 1e-15);
    }

    #[test]
    fn radial_norm_of_a_power() {
        // ∫_{s^γ}^{2s^γ} r^6 dr = (2^7 − 1) s^{7γ}/7
        let sg = 1e-3f64;
        let one = |_r: f64| 1.0;
        let got = radial_norm(&one, sg, 1.0, 2.0, 2, 1.0, false);
        let want = (127.0 / 7.0 * sg.powi(7)).sqrt();
        assert!((got / want - 1.0).abs() < 1e-10);
        let got = radial_norm(&one, sg, 1.0, 2.0, 2, 1.0, true);
        assert!((got / want - 1.0).abs() < 1e-10);
    }
}

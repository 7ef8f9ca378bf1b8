//! Exterior calculus on the cone `(0,∞)×Σ` with metric `dr² + r²g_Σ`, for
//! forms whose radial dependence is `r^λ (log r)^m`.
//!
//! A term of degree k is stored as `r^λ (log r)^m (r^{k-1} dr∧α + r^k β)`
//! with invariant link forms `α ∈ Λ^{k-1}`, `β ∈ Λ^k`. In this shape every
//! operator acts on `(α, β)` by a matrix polynomial in λ, and `log r` powers
//! arise as λ-derivatives of that polynomial.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::exterior::{dim_forms, Form, FormMetric};
use crate::g2_pointwise::{theta, G2Error};
use crate::link_algebra::{nk_residuals, LinkAlgebra, SU3Structure, N, NK_TOL};

pub const MAX_LOG_POWER: u32 = 4;
/// Orders closer than this are the same rate.
pub const ORDER_TOL: f64 = 1e-12;
/// Coefficients at or below this magnitude are dropped in normal form.
pub const PRUNE_TOL: f64 = 1e-13;
/// Residual allowed when certifying closedness and the cone identities.
pub const CERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("form is not closed (|dw| = {0:e})")]
    NotClosed(f64),
    #[error("order {order} on degree {degree} cannot be integrated from the requested end")]
    RateOutOfRange { order: f64, degree: usize },
    #[error("log obstruction at order {order}, degree {degree}, log power {log_power}")]
    LogObstruction { order: f64, degree: usize, log_power: u32 },
    #[error("link structure is not nearly Kähler (residual {0:e})")]
    NKViolation(f64),
    #[error("slot sizes do not match degree {0}")]
    Shape(usize),
}

/// Order of homogeneity: exact when rational input was given.
#[derive(Clone, Copy, Debug)]
pub enum Order {
    Exact(Rational64),
    Approx(f64),
}

impl Order {
    pub fn int(n: i64) -> Self {
        Order::Exact(Rational64::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Order::Exact(Rational64::new(num, den))
    }

    pub fn value(&self) -> f64 {
        match self {
            Order::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Order::Approx(x) => *x,
        }
    }

    pub fn shift(self, n: i64) -> Self {
        match self {
            Order::Exact(r) => Order::Exact(r + Rational64::from_integer(n)),
            Order::Approx(x) => Order::Approx(x + n as f64),
        }
    }

    pub fn same(&self, other: &Order) -> bool {
        match (self, other) {
            (Order::Exact(a), Order::Exact(b)) => a == b,
            _ => (self.value() - other.value()).abs() <= ORDER_TOL,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Order::Exact(_))
    }
}

impl From<f64> for Order {
    fn from(x: f64) -> Self {
        Order::Approx(x)
    }
}

impl From<i64> for Order {
    fn from(n: i64) -> Self {
        Order::int(n)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Exact(r) => write!(f, "{r}"),
            Order::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// `r^λ (log r)^m (r^{k-1} dr∧α + r^k β)`.
#[derive(Clone, Debug)]
pub struct ConeTerm {
    degree: usize,
    order: Order,
    log_power: u32,
    alpha: DVector<f64>,
    beta: DVector<f64>,
}

fn slot_dim(k: isize) -> usize {
    dim_forms(N, k)
}

impl ConeTerm {
    pub fn new(
        degree: usize,
        order: Order,
        log_power: u32,
        alpha: DVector<f64>,
        beta: DVector<f64>,
    ) -> Result<Self, ConeError> {
        if degree > 7 || alpha.len() != slot_dim(degree as isize - 1) || beta.len() != slot_dim(degree as isize) {
            return Err(ConeError::Shape(degree));
        }
        if log_power > MAX_LOG_POWER {
            return Err(ConeError::LogObstruction { order: order.value(), degree, log_power });
        }
        Ok(ConeTerm { degree, order, log_power, alpha, beta })
    }

    fn raw(degree: usize, order: Order, log_power: u32, alpha: DVector<f64>, beta: DVector<f64>) -> Self {
        debug_assert_eq!(alpha.len(), slot_dim(degree as isize - 1));
        debug_assert_eq!(beta.len(), slot_dim(degree as isize));
        ConeTerm { degree, order, log_power, alpha, beta }
    }

    pub fn zero(degree: usize, order: Order, log_power: u32) -> Self {
        let a = DVector::zeros(slot_dim(degree as isize - 1));
        let b = DVector::zeros(slot_dim(degree as isize));
        ConeTerm::raw(degree, order, log_power, a, b)
    }

    /// `r^λ (log r)^m r^k dr∧α` with α of degree k.
    pub fn dr_slot(order: impl Into<Order>, log_power: u32, alpha: &Form) -> Self {
        let k = alpha.degree() + 1;
        let mut t = ConeTerm::zero(k, order.into(), log_power);
        t.alpha = alpha.to_vector();
        t
    }

    /// `r^λ (log r)^m r^k β` with β of degree k.
    pub fn link_slot(order: impl Into<Order>, log_power: u32, beta: &Form) -> Self {
        let k = beta.degree();
        let mut t = ConeTerm::zero(k, order.into(), log_power);
        t.beta = beta.to_vector();
        t
    }

    /// Both slots, α of degree k-1 and β of degree k.
    pub fn pair(order: impl Into<Order>, log_power: u32, alpha: &Form, beta: &Form) -> Self {
        assert_eq!(alpha.degree() + 1, beta.degree());
        let mut t = ConeTerm::link_slot(order, log_power, beta);
        t.alpha = alpha.to_vector();
        t
    }

    pub fn random<R: Rng + ?Sized>(degree: usize, order: Order, log_power: u32, rng: &mut R) -> Self {
        let mut t = ConeTerm::zero(degree, order, log_power);
        t.alpha.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        t.beta.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        t
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn log_power(&self) -> u32 {
        self.log_power
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn alpha_form(&self) -> Option<Form> {
        (self.degree >= 1).then(|| Form::from_vector(N, self.degree - 1, &self.alpha))
    }

    pub fn beta_form(&self) -> Option<Form> {
        (self.degree <= N).then(|| Form::from_vector(N, self.degree, &self.beta))
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha.amax().max(self.beta.amax())
    }

    fn matches(&self, other: &ConeTerm) -> bool {
        self.degree == other.degree && self.log_power == other.log_power && self.order.same(&other.order)
    }

    fn scaled(mut self, c: f64) -> Self {
        self.alpha *= c;
        self.beta *= c;
        self
    }

    /// `r^λ (log r)^m`.
    fn radial(&self, r: f64) -> f64 {
        r.powf(self.order.value()) * r.ln().powi(self.log_power as i32)
    }
}

/// A finite sum of cone terms, kept sorted by (degree, order, log power) with
/// like terms merged and zero terms removed.
#[derive(Clone, Debug, Default)]
pub struct ConeForm {
    terms: Vec<ConeTerm>,
}

impl ConeForm {
    pub fn zero() -> Self {
        ConeForm::default()
    }

    pub fn new(terms: impl IntoIterator<Item = ConeTerm>) -> Self {
        let mut merged: Vec<ConeTerm> = Vec::new();
        for t in terms {
            match merged.iter_mut().find(|m| m.matches(&t)) {
                Some(m) => {
                    m.alpha += &t.alpha;
                    m.beta += &t.beta;
                    if !m.order.is_exact() && t.order.is_exact() {
                        m.order = t.order;
                    }
                }
                None => merged.push(t),
            }
        }
        for t in &mut merged {
            t.alpha.iter_mut().chain(t.beta.iter_mut()).for_each(|x| {
                if x.abs() <= PRUNE_TOL {
                    *x = 0.0;
                }
            });
        }
        merged.retain(|t| t.max_abs() > 0.0);
        merged.sort_by(|a, b| {
            a.degree
                .cmp(&b.degree)
                .then(a.order.value().partial_cmp(&b.order.value()).unwrap_or(Ordering::Equal))
                .then(a.log_power.cmp(&b.log_power))
        });
        ConeForm { terms: merged }
    }

    pub fn from_term(t: ConeTerm) -> Self {
        ConeForm::new([t])
    }

    pub fn terms(&self) -> &[ConeTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(ConeTerm::max_abs).fold(0.0, f64::max)
    }

    /// All terms agree up to `tol` in every coefficient.
    pub fn approx_eq(&self, other: &ConeForm, tol: f64) -> bool {
        (self - other).max_abs() <= tol
    }

    /// Distinct (degree, order) pairs, for order bookkeeping.
    pub fn orders(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self.terms.iter().map(|t| (t.degree, t.order.value())).collect();
        out.dedup_by(|a, b| a.0 == b.0 && (a.1 - b.1).abs() <= ORDER_TOL);
        out
    }

    /// Keep only terms of degree k.
    pub fn degree_part(&self, k: usize) -> ConeForm {
        ConeForm { terms: self.terms.iter().filter(|t| t.degree == k).cloned().collect() }
    }

    fn map_terms(&self, f: impl Fn(&ConeTerm, &mut Vec<ConeTerm>)) -> ConeForm {
        let mut out = Vec::new();
        for t in &self.terms {
            f(t, &mut out);
        }
        ConeForm::new(out)
    }
}

impl Add for &ConeForm {
    type Output = ConeForm;
    fn add(self, rhs: &ConeForm) -> ConeForm {
        ConeForm::new(self.terms.iter().chain(&rhs.terms).cloned())
    }
}

impl Sub for &ConeForm {
    type Output = ConeForm;
    fn sub(self, rhs: &ConeForm) -> ConeForm {
        self + &(-rhs)
    }
}

impl Neg for &ConeForm {
    type Output = ConeForm;
    fn neg(self) -> ConeForm {
        self * -1.0
    }
}

impl Mul<f64> for &ConeForm {
    type Output = ConeForm;
    fn mul(self, c: f64) -> ConeForm {
        ConeForm::new(self.terms.iter().map(|t| t.clone().scaled(c)))
    }
}

fn binomial(m: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Exterior derivative on the cone.
pub fn cone_d(alg: &LinkAlgebra, w: &ConeForm) -> ConeForm {
    w.map_terms(|t, out| {
        let k = t.degree as isize;
        if k == 7 {
            return;
        }
        let lam = t.order.value();
        let order = t.order.shift(-1);
        let a = &t.beta * (lam + k as f64) - alg.d_block(k - 1).as_ref() * &t.alpha;
        let b = alg.d_block(k).as_ref() * &t.beta;
        out.push(ConeTerm::raw(t.degree + 1, order, t.log_power, a, b));
        if t.log_power > 0 {
            let a = &t.beta * t.log_power as f64;
            let b = DVector::zeros(slot_dim(k + 1));
            out.push(ConeTerm::raw(t.degree + 1, order, t.log_power - 1, a, b));
        }
    })
}

/// Codifferential of the cone metric.
pub fn cone_codiff(alg: &LinkAlgebra, w: &ConeForm) -> ConeForm {
    w.map_terms(|t, out| {
        let k = t.degree as isize;
        if k == 0 {
            return;
        }
        let lam = t.order.value();
        let order = t.order.shift(-1);
        let a = -(alg.codiff_block(k - 1).as_ref() * &t.alpha);
        let b = alg.codiff_block(k).as_ref() * &t.beta - &t.alpha * (lam - k as f64 + 7.0);
        out.push(ConeTerm::raw(t.degree - 1, order, t.log_power, a, b));
        if t.log_power > 0 {
            let a = DVector::zeros(slot_dim(k - 2));
            let b = &t.alpha * -(t.log_power as f64);
            out.push(ConeTerm::raw(t.degree - 1, order, t.log_power - 1, a, b));
        }
    })
}

/// Hodge star of the cone metric; preserves order and log power.
pub fn cone_star(alg: &LinkAlgebra, w: &ConeForm) -> ConeForm {
    w.map_terms(|t, out| {
        let k = t.degree as isize;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let a = alg.star_block(k).as_ref() * &t.beta * sign;
        let b = alg.star_block(k - 1).as_ref() * &t.alpha;
        out.push(ConeTerm::raw(7 - t.degree, t.order, t.log_power, a, b));
    })
}

/// Hodge Laplacian of the cone metric, computed directly from the slot formulas.
pub fn cone_laplacian(alg: &LinkAlgebra, w: &ConeForm) -> ConeForm {
    w.map_terms(|t, out| {
        let k = t.degree as isize;
        let kf = k as f64;
        let lam = t.order.value();
        let order = t.order.shift(-2);
        let m = t.log_power;
        let q_alpha = (lam + kf - 2.0) * (lam - kf + 7.0);
        let q_beta = (lam + kf) * (lam - kf + 5.0);
        let a = alg.laplacian_block(k - 1).as_ref() * &t.alpha
            - &t.alpha * q_alpha
            - alg.codiff_block(k).as_ref() * &t.beta * 2.0;
        let b = alg.laplacian_block(k).as_ref() * &t.beta
            - &t.beta * q_beta
            - alg.d_block(k - 1).as_ref() * &t.alpha * 2.0;
        out.push(ConeTerm::raw(t.degree, order, m, a, b));
        // λ-derivatives of the two quadratics: 2λ+5, then 2.
        if m >= 1 {
            let c = -(m as f64) * (2.0 * lam + 5.0);
            out.push(ConeTerm::raw(t.degree, order, m - 1, &t.alpha * c, &t.beta * c));
        }
        if m >= 2 {
            let c = -2.0 * binomial(m, 2);
            out.push(ConeTerm::raw(t.degree, order, m - 2, &t.alpha * c, &t.beta * c));
        }
    })
}

/// Pullback under `(r, σ) ↦ (tr, σ)`.
pub fn dilate(t: f64, w: &ConeForm) -> ConeForm {
    assert!(t > 0.0, "dilation factor must be positive");
    let lt = t.ln();
    w.map_terms(|term, out| {
        let m = term.log_power;
        let scale = t.powf(term.order.value() + term.degree as f64);
        for j in 0..=m {
            let c = scale * binomial(m, j) * lt.powi((m - j) as i32);
            let mut piece = term.clone().scaled(c);
            piece.log_power = j;
            out.push(piece);
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Zero,
    Infinity,
}

/// A primitive Ω with `dΩ = w` for closed w, built by integrating the
/// dr-slots radially from the chosen end. Each output term has order λ+1.
pub fn radial_primitive(alg: &LinkAlgebra, w: &ConeForm, end: End) -> Result<ConeForm, ConeError> {
    let dw = cone_d(alg, w).max_abs();
    if dw > CERT_TOL * w.max_abs().max(1.0) {
        return Err(ConeError::NotClosed(dw));
    }
    let mut out = Vec::new();
    for t in w.terms() {
        let exponent = t.order.value() + t.degree as f64;
        if exponent.abs() <= ORDER_TOL {
            return Err(ConeError::LogObstruction {
                order: t.order.value(),
                degree: t.degree,
                log_power: t.log_power + 1,
            });
        }
        let ok = match end {
            End::Zero => exponent > 0.0,
            End::Infinity => exponent < 0.0,
        };
        if !ok {
            return Err(ConeError::RateOutOfRange { order: t.order.value(), degree: t.degree });
        }
        if t.degree == 0 {
            continue;
        }
        // ∫ r^{a} (log r)^m dr with a+1 = exponent.
        let m = t.log_power;
        let mut falling = 1.0;
        for j in 0..=m {
            if j > 0 {
                falling *= (m - j + 1) as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * falling / exponent.powi(j as i32 + 1);
            let a = DVector::zeros(slot_dim(t.degree as isize - 2));
            out.push(ConeTerm::raw(t.degree - 1, t.order.shift(1), m - j, a, &t.alpha * c));
        }
    }
    Ok(ConeForm::new(out))
}

/// Pointwise norm at radius r from the slot formula
/// `|w|² = Σ_k |Σ f α|²_Σ + |Σ f β|²_Σ` with `f = r^λ (log r)^m`.
pub fn cone_norm(alg: &LinkAlgebra, w: &ConeForm, r: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=7usize {
        let mut a = DVector::zeros(slot_dim(k as isize - 1));
        let mut b = DVector::zeros(slot_dim(k as isize));
        let mut any = false;
        for t in w.terms().iter().filter(|t| t.degree == k) {
            let f = t.radial(r);
            a += &t.alpha * f;
            b += &t.beta * f;
            any = true;
        }
        if !any {
            continue;
        }
        if k >= 1 {
            total += a.dot(&(alg.metric().gram(k - 1) * &a));
        }
        if k <= N {
            total += b.dot(&(alg.metric().gram(k) * &b));
        }
    }
    total.sqrt()
}

/// The form at radius r as 7-dimensional forms in the coframe `(dr, e¹..e⁶)`,
/// one per degree present.
pub fn to_ambient(w: &ConeForm, r: f64) -> Vec<Form> {
    let mut out: Vec<Form> = Vec::new();
    let dr = Form::basis(7, &[0]);
    for t in w.terms() {
        let f = t.radial(r);
        let k = t.degree;
        let mut piece = Form::zero(7, k);
        if let Some(a) = t.alpha_form() {
            piece += &(dr.wedge(&a.embed(7, 1)) * (f * r.powi(k as i32 - 1)));
        }
        if let Some(b) = t.beta_form() {
            piece += &(b.embed(7, 1) * (f * r.powi(k as i32)));
        }
        match out.iter_mut().find(|p| p.degree() == k) {
            Some(p) => *p += &piece,
            None => out.push(piece),
        }
    }
    out
}

/// Cone metric `dr² + r² g_Σ` at radius r.
pub fn cone_metric(alg: &LinkAlgebra, r: f64) -> FormMetric {
    let mut g = DMatrix::zeros(7, 7);
    g[(0, 0)] = 1.0;
    g.view_mut((1, 1), (N, N)).copy_from(&(alg.metric().matrix() * (r * r)));
    FormMetric::new(g, alg.orientation()).expect("cone metric is positive")
}

/// Pointwise norm evaluated on the ambient 7-dimensional form.
pub fn cone_norm_ambient(alg: &LinkAlgebra, w: &ConeForm, r: f64) -> f64 {
    let m = cone_metric(alg, r);
    to_ambient(w, r).iter().map(|p| m.norm(p).powi(2)).sum::<f64>().sqrt()
}

/// Change of coframe A with `Aᵀ g_C A = I` at r = 1, orientation preserving.
pub fn orthonormal_frame(alg: &LinkAlgebra) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(alg.metric().matrix().clone());
    let mut v = eig.eigenvectors.clone();
    if v.determinant() < 0.0 {
        v.column_mut(0).neg_mut();
    }
    let scaled = DMatrix::from_fn(N, N, |i, j| v[(i, j)] / eig.eigenvalues[j].sqrt());
    let mut a = DMatrix::zeros(7, 7);
    a[(0, 0)] = 1.0;
    a.view_mut((1, 1), (N, N)).copy_from(&scaled);
    a
}

/// The degree-k part of `w` at r = 1, written in an orthonormal coframe.
pub fn orthonormal_at_unit_radius(alg: &LinkAlgebra, w: &ConeForm, k: usize) -> Form {
    let a = orthonormal_frame(alg);
    to_ambient(&w.degree_part(k), 1.0)
        .into_iter()
        .next()
        .unwrap_or_else(|| Form::zero(7, k))
        .pullback(&a)
}

/// The conical G2 structure over a nearly Kähler link.
#[derive(Clone, Debug)]
pub struct ConeG2 {
    pub link: LinkAlgebra,
    pub nk: SU3Structure,
    /// `r³ReΩ - r²dr∧ω`
    pub phi_c: ConeForm,
    /// `-r³dr∧ImΩ - r⁴ω²/2`
    pub psi_c: ConeForm,
}

pub fn build_cone_g2(alg: &LinkAlgebra, nk: &SU3Structure) -> Result<ConeG2, ConeError> {
    let res = nk_residuals(alg, nk).max();
    if res > NK_TOL {
        return Err(ConeError::NKViolation(res));
    }
    let phi_c = ConeForm::from_term(ConeTerm::pair(0, 0, &(&nk.omega * -1.0), &nk.re_omega3));
    let w2 = nk.omega.wedge(&nk.omega);
    let psi_c = ConeForm::from_term(ConeTerm::pair(0, 0, &(&nk.im_omega3 * -1.0), &(w2 * -0.5)));
    let cone = ConeG2 { link: alg.clone(), nk: nk.clone(), phi_c, psi_c };
    let worst = [
        cone_d(alg, &cone.phi_c).max_abs(),
        cone_d(alg, &cone.psi_c).max_abs(),
        (&cone_star(alg, &cone.phi_c) - &cone.psi_c).max_abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if worst > CERT_TOL {
        return Err(ConeError::NKViolation(worst));
    }
    Ok(cone)
}

impl ConeG2 {
    /// `-r³ω/3`, whose derivative is φ_C.
    pub fn phi_potential(&self) -> ConeForm {
        ConeForm::from_term(ConeTerm::link_slot(1, 0, &(&self.nk.omega * (-1.0 / 3.0))))
    }

    /// `-r⁴ImΩ/4`, whose derivative is ψ_C.
    pub fn psi_potential(&self) -> ConeForm {
        ConeForm::from_term(ConeTerm::link_slot(1, 0, &(&self.nk.im_omega3 * -0.25)))
    }

    /// φ_C and ψ_C at r = 1 in an orthonormal coframe.
    pub fn pointwise_unit(&self) -> (Form, Form) {
        (
            orthonormal_at_unit_radius(&self.link, &self.phi_c, 3),
            orthonormal_at_unit_radius(&self.link, &self.psi_c, 4),
        )
    }

    /// `max |Θ(φ_C) - ψ_C|` at r = 1 in an orthonormal coframe.
    pub fn theta_residual(&self) -> Result<f64, G2Error> {
        let (phi, psi) = self.pointwise_unit();
        Ok((&theta(&phi)? - &psi).max_abs())
    }
}

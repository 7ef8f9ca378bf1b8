//! Critical rates of homogeneous kernels on the cone, as λ-pencils acting on
//! the slot coordinates `(α_k, β_k)` of invariant link forms.
//!
//! Pencils are stored in coordinates orthonormal for the cone norm, so that
//! `σ_min(M(λ))` is comparable across degrees. Everything here is a statement
//! about the invariant slice of the link complex only.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cone_calculus::{cone_codiff, cone_d, orthonormal_at_unit_radius, ConeForm, ConeG2, ConeTerm, Order};
use crate::exterior::dim_forms;
use crate::g2_pointwise::{sqrt_and_inverse, G2Error, G2Structure};
use crate::link_algebra::{LinkAlgebra, N};
use crate::par;

pub const SCAN_STEP: f64 = 0.01;
/// `σ_min` below this is a kernel.
pub const ROOT_TOL: f64 = 1e-8;
/// Singular values below this count towards the kernel at a refined root.
pub const KERNEL_TOL: f64 = 1e-7;
pub const REFINE_TOL: f64 = 1e-12;
pub const TYPE_TOL: f64 = 1e-10;
pub const IDENTITY_TOL: f64 = 1e-9;
const MAX_CHAIN: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("interval endpoint {0} is itself critical")]
    EndpointCritical(f64),
    #[error("kernel found at λ = {lambda} (σ_min = {sigma:e}) inside the excluded range")]
    UnexpectedKernel { lambda: f64, sigma: f64 },
    #[error("no excluded range is claimed for {0}")]
    NoClaimedRange(String),
    #[error("empty interval [{0}, {1}]")]
    BadInterval(f64, f64),
}

/// The part of a 6-dimensional link complex the pencils need: d, d*, Δ and
/// the pointwise Gram matrices on each degree.
#[derive(Clone, Debug)]
pub struct LinkComplex {
    pub name: String,
    dims: [usize; 7],
    d: Vec<DMatrix<f64>>,
    codiff: Vec<DMatrix<f64>>,
    laplacian: Vec<DMatrix<f64>>,
    gram: Vec<DMatrix<f64>>,
}

impl LinkComplex {
    pub fn from_algebra(alg: &LinkAlgebra) -> Self {
        let dims = std::array::from_fn(|k| dim_forms(N, k as isize));
        LinkComplex {
            name: alg.name().to_string(),
            dims,
            d: (0..=N).map(|k| alg.d_matrix(k).clone()).collect(),
            codiff: (0..=N).map(|k| alg.codiff_matrix(k).clone()).collect(),
            laplacian: (0..=N).map(|k| alg.laplacian_matrix(k).clone()).collect(),
            gram: (0..=N).map(|k| alg.metric().gram(k).clone()).collect(),
        }
    }

    /// One-dimensional `Λ^{k-1}` and `Λ^k` joined by `d = √μ`, all other
    /// degrees empty: the eigenvalue μ planted on k-forms.
    pub fn planted(k: usize, mu: f64) -> Self {
        assert!((1..=N).contains(&k) && mu >= 0.0);
        let mut dims = [0usize; 7];
        dims[k - 1] = 1;
        dims[k] = 1;
        let dim = |j: isize| if (0..=N as isize).contains(&j) { dims[j as usize] } else { 0 };
        let mut d: Vec<DMatrix<f64>> = (0..=N as isize).map(|j| DMatrix::zeros(dim(j + 1), dim(j))).collect();
        let mut codiff: Vec<DMatrix<f64>> = (0..=N as isize).map(|j| DMatrix::zeros(dim(j - 1), dim(j))).collect();
        d[k - 1][(0, 0)] = mu.sqrt();
        codiff[k][(0, 0)] = mu.sqrt();
        let laplacian = (0..=N).map(|j| DMatrix::identity(dims[j], dims[j]) * if dims[j] > 0 { mu } else { 0.0 }).collect();
        let gram = (0..=N).map(|j| DMatrix::identity(dims[j], dims[j])).collect();
        LinkComplex { name: format!("planted(k={k}, mu={mu})"), dims, d, codiff, laplacian, gram }
    }

    pub fn dim(&self, j: isize) -> usize {
        if (0..=N as isize).contains(&j) {
            self.dims[j as usize]
        } else {
            0
        }
    }

    fn block(&self, v: &[DMatrix<f64>], j: isize, rows: isize) -> DMatrix<f64> {
        if (0..=N as isize).contains(&j) {
            v[j as usize].clone()
        } else {
            DMatrix::zeros(self.dim(rows), self.dim(j))
        }
    }

    pub fn d(&self, j: isize) -> DMatrix<f64> {
        self.block(&self.d, j, j + 1)
    }

    pub fn codiff(&self, j: isize) -> DMatrix<f64> {
        self.block(&self.codiff, j, j - 1)
    }

    pub fn laplacian(&self, j: isize) -> DMatrix<f64> {
        self.block(&self.laplacian, j, j)
    }

    pub fn gram(&self, j: isize) -> DMatrix<f64> {
        self.block(&self.gram, j, j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn contains(self, k: usize) -> bool {
        (k % 2 == 0) == (self == Parity::Even)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PencilKind {
    /// `d + d*` on all degrees of one parity.
    Dirac(Parity),
    /// `(d, d*)` on a single degree.
    ClosedCoclosed(usize),
    /// Δ on a single degree.
    Laplacian(usize),
    Custom,
}

/// One slot of a coordinate stack: α (`Λ^{k-1}`) or β (`Λ^k`) of degree k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub degree: usize,
    pub alpha: bool,
    pub offset: usize,
    pub len: usize,
}

fn layout(degrees: &[isize], complex: &LinkComplex) -> Vec<Slot> {
    let mut out = Vec::new();
    let mut offset = 0;
    for &k in degrees.iter().filter(|k| (0..=7).contains(*k)) {
        for alpha in [true, false] {
            let len = complex.dim(if alpha { k - 1 } else { k });
            out.push(Slot { degree: k as usize, alpha, offset, len });
            offset += len;
        }
    }
    out
}

fn stack_len(slots: &[Slot]) -> usize {
    slots.last().map_or(0, |s| s.offset + s.len)
}

/// Block-diagonal `(G^{1/2}, G^{-1/2})` over a slot layout.
fn slot_metric(slots: &[Slot], complex: &LinkComplex) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = stack_len(slots);
    let mut half = DMatrix::zeros(n, n);
    let mut inv = DMatrix::zeros(n, n);
    for s in slots.iter().filter(|s| s.len > 0) {
        let j = s.degree as isize - s.alpha as isize;
        let (h, i) = sqrt_and_inverse(&complex.gram(j));
        half.view_mut((s.offset, s.offset), (s.len, s.len)).copy_from(&h);
        inv.view_mut((s.offset, s.offset), (s.len, s.len)).copy_from(&i);
    }
    (half, inv)
}

/// A matrix polynomial `M(λ) = Σ λ^p M_p` between slot stacks.
#[derive(Clone, Debug)]
pub struct RatePencil {
    pub kind: PencilKind,
    input: Vec<Slot>,
    output: Vec<Slot>,
    raw: Vec<DMatrix<f64>>,
    ortho: Vec<DMatrix<f64>>,
    in_inv_half: DMatrix<f64>,
    /// Slots have the dimensions of invariant forms on a 6-dimensional link.
    full: bool,
}

struct Builder<'a> {
    input: &'a [Slot],
    output: &'a [Slot],
    coeffs: Vec<DMatrix<f64>>,
}

impl Builder<'_> {
    fn new<'a>(input: &'a [Slot], output: &'a [Slot], degree: usize) -> Builder<'a> {
        let coeffs = vec![DMatrix::zeros(stack_len(output), stack_len(input)); degree + 1];
        Builder { input, output, coeffs }
    }

    fn slot(slots: &[Slot], degree: isize, alpha: bool) -> Option<Slot> {
        slots.iter().copied().find(|s| s.degree as isize == degree && s.alpha == alpha)
    }

    /// Add `m` times λ^power from input slot to output slot, when both exist.
    fn add(&mut self, out: (isize, bool), inp: (isize, bool), power: usize, m: &DMatrix<f64>) {
        let (Some(o), Some(i)) = (Self::slot(self.output, out.0, out.1), Self::slot(self.input, inp.0, inp.1)) else {
            return;
        };
        if o.len == 0 || i.len == 0 {
            return;
        }
        let mut view = self.coeffs[power].view_mut((o.offset, i.offset), (o.len, i.len));
        view += m;
    }

    fn add_scalar(&mut self, out: (isize, bool), inp: (isize, bool), power: usize, c: f64, dim: usize) {
        if c != 0.0 {
            self.add(out, inp, power, &(DMatrix::identity(dim, dim) * c));
        }
    }
}

const A: bool = true;
const B: bool = false;

impl RatePencil {
    fn finish(kind: PencilKind, complex: &LinkComplex, input: Vec<Slot>, output: Vec<Slot>, raw: Vec<DMatrix<f64>>) -> Self {
        let (_, in_inv_half) = slot_metric(&input, complex);
        let (out_half, _) = slot_metric(&output, complex);
        let ortho = raw.iter().map(|m| &out_half * m * &in_inv_half).collect();
        let full = (0..=N as isize).all(|j| complex.dim(j) == dim_forms(N, j));
        RatePencil { kind, input, output, raw, ortho, in_inv_half, full }
    }

    /// Pencil with identity metrics from explicit coefficients, for testing the
    /// root and chain machinery on hand-made examples.
    pub fn custom(coeffs: Vec<DMatrix<f64>>) -> Self {
        let (r, c) = coeffs[0].shape();
        let input = vec![Slot { degree: 0, alpha: false, offset: 0, len: c }];
        let output = vec![Slot { degree: 0, alpha: false, offset: 0, len: r }];
        let in_inv_half = DMatrix::identity(c, c);
        RatePencil { kind: PencilKind::Custom, input, output, ortho: coeffs.clone(), raw: coeffs, in_inv_half, full: false }
    }

    pub fn input_slots(&self) -> &[Slot] {
        &self.input
    }

    pub fn output_slots(&self) -> &[Slot] {
        &self.output
    }

    pub fn shape(&self) -> (usize, usize) {
        self.raw[0].shape()
    }

    /// Polynomial coefficients in raw (link coframe) coordinates.
    pub fn raw_coefficients(&self) -> &[DMatrix<f64>] {
        &self.raw
    }

    fn eval(coeffs: &[DMatrix<f64>], lambda: f64, deriv: usize) -> DMatrix<f64> {
        // M^{(deriv)}(λ) / deriv!
        let mut out = DMatrix::zeros(coeffs[0].nrows(), coeffs[0].ncols());
        for (p, c) in coeffs.iter().enumerate().skip(deriv) {
            let binom = (0..deriv).fold(1.0, |acc, i| acc * (p - i) as f64 / (i + 1) as f64);
            out += c * (binom * lambda.powi((p - deriv) as i32));
        }
        out
    }

    /// `M(λ)` in orthonormal coordinates.
    pub fn matrix(&self, lambda: f64) -> DMatrix<f64> {
        Self::eval(&self.ortho, lambda, 0)
    }

    /// `M(λ)` in raw coordinates.
    pub fn raw_matrix(&self, lambda: f64) -> DMatrix<f64> {
        Self::eval(&self.raw, lambda, 0)
    }

    /// Taylor block `M^{(j)}(λ)/j!` in orthonormal coordinates.
    pub fn taylor_block(&self, lambda: f64, j: usize) -> DMatrix<f64> {
        if j >= self.ortho.len() {
            let (r, c) = self.shape();
            return DMatrix::zeros(r, c);
        }
        Self::eval(&self.ortho, lambda, j)
    }

    /// Taylor block `M^{(j)}(λ)/j!` in raw coordinates.
    pub fn raw_taylor_block(&self, lambda: f64, j: usize) -> DMatrix<f64> {
        if j >= self.raw.len() {
            let (r, c) = self.shape();
            return DMatrix::zeros(r, c);
        }
        Self::eval(&self.raw, lambda, j)
    }

    pub fn singular_values(&self, lambda: f64) -> Vec<f64> {
        let (r, c) = self.shape();
        if c == 0 {
            return Vec::new();
        }
        let m = self.matrix(lambda);
        if r < c {
            // Wide: pad so the missing singular values show up as zeros.
            let mut padded = DMatrix::zeros(c, c);
            padded.view_mut((0, 0), (r, c)).copy_from(&m);
            return padded.singular_values().iter().copied().collect();
        }
        m.singular_values().iter().copied().collect()
    }

    pub fn sigma_min(&self, lambda: f64) -> f64 {
        self.singular_values(lambda).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn kernel_dim(&self, lambda: f64, tol: f64) -> usize {
        self.singular_values(lambda).iter().filter(|s| **s < tol).count()
    }

    /// Orthonormal (cone norm) kernel basis at λ, in raw coordinates.
    pub fn kernel(&self, lambda: f64, tol: f64) -> Vec<DVector<f64>> {
        let (r, c) = self.shape();
        if c == 0 {
            return Vec::new();
        }
        let mut m = self.matrix(lambda);
        if r < c {
            let mut padded = DMatrix::zeros(c, c);
            padded.view_mut((0, 0), (r, c)).copy_from(&m);
            m = padded;
        }
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("requested V");
        svd.singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < tol)
            .map(|(i, _)| &self.in_inv_half * vt.row(i).transpose())
            .collect()
    }

    /// Raw input coordinates of the order-λ, log-free part of `w`.
    pub fn stack_input(&self, w: &ConeForm) -> DVector<f64> {
        stack(&self.input, w)
    }

    /// Raw output coordinates of `w`.
    pub fn stack_output(&self, w: &ConeForm) -> DVector<f64> {
        stack(&self.output, w)
    }

    /// Homogeneous cone form of order λ from raw input coordinates.
    pub fn unstack_input(&self, v: &DVector<f64>, order: Order) -> ConeForm {
        assert!(self.full, "cone forms need a complex with full invariant dimensions");
        unstack(&self.input, v, order)
    }
}

fn stack(slots: &[Slot], w: &ConeForm) -> DVector<f64> {
    let mut out = DVector::zeros(stack_len(slots));
    for t in w.terms() {
        for s in slots.iter().filter(|s| s.degree == t.degree() && s.len > 0) {
            let src = if s.alpha { t.alpha() } else { t.beta() };
            let mut view = out.rows_mut(s.offset, s.len);
            view += src;
        }
    }
    out
}

fn unstack(slots: &[Slot], v: &DVector<f64>, order: Order) -> ConeForm {
    let mut terms = Vec::new();
    let mut degrees: Vec<usize> = slots.iter().map(|s| s.degree).collect();
    degrees.dedup();
    for k in degrees {
        if k > 7 {
            continue;
        }
        let mut t = ConeTerm::zero(k, order, 0);
        let mut a = t.alpha().clone();
        let mut b = t.beta().clone();
        for s in slots.iter().filter(|s| s.degree == k && s.len > 0) {
            let src = v.rows(s.offset, s.len);
            if s.alpha {
                a.copy_from(&src);
            } else {
                b.copy_from(&src);
            }
        }
        t = ConeTerm::new(k, order, 0, a, b).expect("slot shapes follow the degree");
        terms.push(t);
    }
    ConeForm::new(terms)
}

/// `d + d*` on homogeneous forms of one parity, mapping order λ to order λ-1:
///
/// ```text
/// α'_j = (λ+j-1) β_{j-1} - d α_{j-1} - d* α_{j+1}
/// β'_j = d β_{j-1} - (λ-j+6) α_{j+1} + d* β_{j+1}
/// ```
pub fn assemble_dirac_pencil(complex: &LinkComplex, parity: Parity) -> RatePencil {
    let ins: Vec<isize> = (0..=7).filter(|k| parity.contains(*k as usize)).collect();
    let outs: Vec<isize> = (0..=7).filter(|k| !parity.contains(*k as usize)).collect();
    let input = layout(&ins, complex);
    let output = layout(&outs, complex);
    let mut b = Builder::new(&input, &output, 1);
    for &j in &outs {
        let jf = j as f64;
        // from degree j-1 via d
        b.add_scalar((j, A), (j - 1, B), 1, 1.0, complex.dim(j - 1));
        b.add_scalar((j, A), (j - 1, B), 0, jf - 1.0, complex.dim(j - 1));
        b.add((j, A), (j - 1, A), 0, &-complex.d(j - 2));
        b.add((j, B), (j - 1, B), 0, &complex.d(j - 1));
        // from degree j+1 via d*
        b.add((j, A), (j + 1, A), 0, &-complex.codiff(j));
        b.add_scalar((j, B), (j + 1, A), 1, -1.0, complex.dim(j));
        b.add_scalar((j, B), (j + 1, A), 0, jf - 6.0, complex.dim(j));
        b.add((j, B), (j + 1, B), 0, &complex.codiff(j + 1));
    }
    let coeffs = b.coeffs;
    RatePencil::finish(PencilKind::Dirac(parity), complex, input, output, coeffs)
}

/// `(d ω, d* ω)` for homogeneous k-forms; a tall pencil whose kernel is the
/// closed and coclosed forms of order λ.
pub fn assemble_closed_coclosed_pencil(complex: &LinkComplex, k: usize) -> RatePencil {
    let k = k as isize;
    let input = layout(&[k], complex);
    let output = layout(&[k + 1, k - 1], complex);
    let mut b = Builder::new(&input, &output, 1);
    let kf = k as f64;
    b.add_scalar((k + 1, A), (k, B), 1, 1.0, complex.dim(k));
    b.add_scalar((k + 1, A), (k, B), 0, kf, complex.dim(k));
    b.add((k + 1, A), (k, A), 0, &-complex.d(k - 1));
    b.add((k + 1, B), (k, B), 0, &complex.d(k));
    b.add((k - 1, A), (k, A), 0, &-complex.codiff(k - 1));
    b.add_scalar((k - 1, B), (k, A), 1, -1.0, complex.dim(k - 1));
    b.add_scalar((k - 1, B), (k, A), 0, kf - 7.0, complex.dim(k - 1));
    b.add((k - 1, B), (k, B), 0, &complex.codiff(k));
    let coeffs = b.coeffs;
    RatePencil::finish(PencilKind::ClosedCoclosed(k as usize), complex, input, output, coeffs)
}

/// Δ on homogeneous k-forms, mapping order λ to λ-2:
///
/// ```text
/// α' = Δα - (λ+k-2)(λ-k+7) α - 2 d*β
/// β' = Δβ - (λ+k)(λ-k+5) β - 2 dα
/// ```
pub fn assemble_laplacian_pencil(complex: &LinkComplex, k: usize) -> RatePencil {
    let k = k as isize;
    let input = layout(&[k], complex);
    let output = input.clone();
    let mut b = Builder::new(&input, &output, 2);
    let kf = k as f64;
    let (da, db) = (complex.dim(k - 1), complex.dim(k));
    b.add((k, A), (k, A), 0, &complex.laplacian(k - 1));
    b.add_scalar((k, A), (k, A), 0, -(kf - 2.0) * (7.0 - kf), da);
    b.add_scalar((k, A), (k, A), 1, -5.0, da);
    b.add_scalar((k, A), (k, A), 2, -1.0, da);
    b.add((k, A), (k, B), 0, &(complex.codiff(k) * -2.0));
    b.add((k, B), (k, B), 0, &complex.laplacian(k));
    b.add_scalar((k, B), (k, B), 0, -kf * (5.0 - kf), db);
    b.add_scalar((k, B), (k, B), 1, -5.0, db);
    b.add_scalar((k, B), (k, B), 2, -1.0, db);
    b.add((k, B), (k, A), 0, &(complex.d(k - 1) * -2.0));
    let coeffs = b.coeffs;
    RatePencil::finish(PencilKind::Laplacian(k as usize), complex, input, output, coeffs)
}

/// One row of a λ-scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub sigma_min: f64,
    pub kernel_dim: usize,
}

/// Grid from a to b (inclusive, up to rounding) with the given step.
pub fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

pub fn sigma_scan(pencil: &RatePencil, a: f64, b: f64, step: f64) -> Vec<ScanRow> {
    let lambdas = grid(a, b, step);
    par::map(&lambdas, |&lambda| {
        let sv = pencil.singular_values(lambda);
        ScanRow {
            lambda,
            sigma_min: sv.iter().copied().fold(f64::INFINITY, f64::min),
            kernel_dim: sv.iter().filter(|s| **s < ROOT_TOL).count(),
        }
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[derive(Clone, Debug)]
pub struct CriticalRate {
    pub lambda: f64,
    pub sigma_min: f64,
    pub kernel_dim: usize,
    /// Kernel basis in raw slot coordinates, orthonormal for the cone norm.
    pub kernel_vectors: Vec<DVector<f64>>,
    /// The same basis as homogeneous cone forms of order λ; empty unless the
    /// complex has the full invariant dimensions.
    pub kernel: Vec<ConeForm>,
    /// Largest log power carried by a generalized solution (0: none).
    pub log_chain: usize,
}

#[derive(Clone, Debug, Default)]
pub struct CriticalRateSet {
    pub interval: (f64, f64),
    pub rates: Vec<CriticalRate>,
    pub scan: Vec<ScanRow>,
}

impl CriticalRateSet {
    pub fn lambdas(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.lambda).collect()
    }
}

pub fn critical_rates(pencil: &RatePencil, a: f64, b: f64) -> Result<CriticalRateSet, RateError> {
    critical_rates_with_step(pencil, a, b, SCAN_STEP)
}

/// Roots of `σ_min(M(λ))` in [a, b]: grid scan, golden-section refinement of
/// each local minimum, then acceptance below [`ROOT_TOL`].
pub fn critical_rates_with_step(pencil: &RatePencil, a: f64, b: f64, step: f64) -> Result<CriticalRateSet, RateError> {
    if !(a < b) {
        return Err(RateError::BadInterval(a, b));
    }
    for end in [a, b] {
        if pencil.sigma_min(end) < ROOT_TOL {
            return Err(RateError::EndpointCritical(end));
        }
    }
    let mut scan = sigma_scan(pencil, a, b, step);
    if scan.last().is_some_and(|r| r.lambda < b - 1e-12) {
        scan.push(ScanRow { lambda: b, sigma_min: pencil.sigma_min(b), kernel_dim: 0 });
    }
    let candidates: Vec<(f64, f64)> = (1..scan.len().saturating_sub(1))
        .filter(|&i| scan[i].sigma_min <= scan[i - 1].sigma_min && scan[i].sigma_min <= scan[i + 1].sigma_min)
        .map(|i| (scan[i - 1].lambda, scan[i + 1].lambda))
        .collect();
    let refined: Vec<(f64, f64)> = par::map(&candidates, |&(lo, hi)| {
        let l = golden_min(|x| pencil.sigma_min(x), lo, hi, REFINE_TOL);
        (l, pencil.sigma_min(l))
    });
    let mut rates: Vec<CriticalRate> = Vec::new();
    for (lambda, sigma) in refined {
        if sigma >= ROOT_TOL || rates.iter().any(|r| (r.lambda - lambda).abs() < 1e-6) {
            continue;
        }
        let basis = pencil.kernel(lambda, KERNEL_TOL);
        let kernel = if pencil.full {
            basis.iter().map(|v| pencil.unstack_input(v, Order::Approx(lambda))).collect()
        } else {
            Vec::new()
        };
        rates.push(CriticalRate {
            lambda,
            sigma_min: sigma,
            kernel_dim: basis.len(),
            kernel_vectors: basis,
            kernel,
            log_chain: log_chain_check(pencil, lambda),
        });
    }
    rates.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    Ok(CriticalRateSet { interval: (a, b), rates, scan })
}

/// Block upper-triangular Toeplitz matrix of Taylor blocks for chains of length ℓ.
fn chain_matrix(pencil: &RatePencil, lambda: f64, len: usize) -> DMatrix<f64> {
    let (r, c) = pencil.shape();
    let blocks: Vec<DMatrix<f64>> = (0..len).map(|j| pencil.taylor_block(lambda, j)).collect();
    let mut t = DMatrix::zeros(r * len, c * len);
    for q in 0..len {
        for p in q..len {
            t.view_mut((q * r, p * c), (r, c)).copy_from(&blocks[p - q]);
        }
    }
    t
}

fn kernel_dimension(m: &DMatrix<f64>, tol: f64) -> usize {
    let (r, c) = m.shape();
    if c == 0 {
        return 0;
    }
    let sv = m.singular_values();
    c - sv.iter().filter(|s| **s >= tol).count().min(r)
}

/// Largest m such that a solution `Σ_{p≤m} (log r)^p r^λ x_p` with `x_m ≠ 0`
/// exists. Writing `y_p = p! x_p`, the log powers decouple into the block
/// Toeplitz system `Σ_i M^{(i)}(λ)/i! · y_{q+i} = 0`; a chain of length ℓ
/// exists iff its kernel grows from ℓ-1 to ℓ.
pub fn log_chain_check(pencil: &RatePencil, lambda: f64) -> usize {
    let mut prev = kernel_dimension(&chain_matrix(pencil, lambda, 1), KERNEL_TOL);
    if prev == 0 {
        return 0;
    }
    let mut longest = 0;
    for len in 2..=MAX_CHAIN {
        let dim = kernel_dimension(&chain_matrix(pencil, lambda, len), KERNEL_TOL);
        if dim <= prev {
            break;
        }
        longest = len - 1;
        prev = dim;
    }
    longest
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    Laplacian,
    ClosedCoclosed,
}

/// The open interval of orders claimed to carry no homogeneous kernel.
pub fn excluded_interval(op: Operator, k: usize) -> Option<(f64, f64)> {
    let k = k.min(7);
    let low = k.min(7 - k) as f64;
    match op {
        Operator::Laplacian => match low as usize {
            0 => Some((-5.0, 0.0)),
            1 => Some((-4.0, -1.0)),
            2 => Some((-3.0, -2.0)),
            _ => None,
        },
        Operator::ClosedCoclosed => Some((low - 7.0, -low)),
    }
}

#[derive(Clone, Debug)]
pub struct ExcludedRangeReport {
    pub operator: Operator,
    pub degree: usize,
    pub interval: (f64, f64),
    pub min_sigma: f64,
    pub argmin: f64,
    pub points: usize,
    pub scan: Vec<ScanRow>,
}

/// Scan the open excluded interval at [`SCAN_STEP`] and confirm the pencil
/// restricted to degree k has trivial kernel throughout (invariant slice).
pub fn excluded_range_report(complex: &LinkComplex, op: Operator, k: usize) -> Result<ExcludedRangeReport, RateError> {
    let (a, b) = excluded_interval(op, k).ok_or_else(|| RateError::NoClaimedRange(format!("{op:?} on degree {k}")))?;
    let pencil = match op {
        Operator::Laplacian => assemble_laplacian_pencil(complex, k),
        Operator::ClosedCoclosed => assemble_closed_coclosed_pencil(complex, k),
    };
    let scan = sigma_scan(&pencil, a + SCAN_STEP, b - SCAN_STEP, SCAN_STEP);
    let worst = scan
        .iter()
        .min_by(|x, y| x.sigma_min.total_cmp(&y.sigma_min))
        .copied()
        .expect("interval wider than two steps");
    if worst.sigma_min < ROOT_TOL {
        return Err(RateError::UnexpectedKernel { lambda: worst.lambda, sigma: worst.sigma_min });
    }
    Ok(ExcludedRangeReport {
        operator: op,
        degree: k,
        interval: (a, b),
        min_sigma: worst.sigma_min,
        argmin: worst.lambda,
        points: scan.len(),
        scan,
    })
}

#[derive(Clone, Debug)]
pub struct EigenIdentityRow {
    pub lambda: f64,
    /// `(λ+k)(λ-k+7)`
    pub factor: f64,
    pub kernel_dim: usize,
    /// Largest cone-norm residual of `Δγ - factor·γ` over α and β of the
    /// kernel basis.
    pub residual: f64,
}

impl EigenIdentityRow {
    pub fn passes(&self) -> bool {
        self.residual < IDENTITY_TOL
    }
}

/// At every critical rate of the single-degree closed and coclosed system in
/// [a, b], check that both slots are Δ-eigenforms with eigenvalue
/// `(λ+k)(λ-k+7)`.
pub fn eigenvalue_identity_check(
    complex: &LinkComplex,
    k: usize,
    a: f64,
    b: f64,
) -> Result<Vec<EigenIdentityRow>, RateError> {
    let pencil = assemble_closed_coclosed_pencil(complex, k);
    let set = critical_rates(&pencil, a, b)?;
    let ki = k as isize;
    let slots = pencil.input_slots().to_vec();
    let mut rows = Vec::new();
    for rate in &set.rates {
        let lambda = rate.lambda;
        let factor = (lambda + k as f64) * (lambda - k as f64 + 7.0);
        let mut residual = 0.0f64;
        for v in pencil.kernel(lambda, KERNEL_TOL) {
            for s in slots.iter().filter(|s| s.len > 0) {
                let j = if s.alpha { ki - 1 } else { ki };
                let gamma = v.rows(s.offset, s.len).into_owned();
                let r = complex.laplacian(j) * &gamma - &gamma * factor;
                let (half, _) = sqrt_and_inverse(&complex.gram(j));
                residual = residual.max((half * r).norm());
            }
        }
        rows.push(EigenIdentityRow { lambda, factor, kernel_dim: rate.kernel_dim, residual });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct Type27Report {
    pub pi1: f64,
    pub pi7: f64,
    pub pi27: f64,
}

impl Type27Report {
    pub fn passes(&self) -> bool {
        self.pi1 < TYPE_TOL && self.pi7 < TYPE_TOL
    }
}

/// Type decomposition of the degree-3 part of `xi` at r = 1, with respect to
/// φ_C there, in an orthonormal coframe.
pub fn type27_report(cone: &ConeG2, xi: &ConeForm) -> Result<Type27Report, G2Error> {
    let (phi, _) = cone.pointwise_unit();
    let g2 = G2Structure::new(phi)?;
    let x = orthonormal_at_unit_radius(&cone.link, xi, 3);
    let split = g2.project3(&x);
    Ok(Type27Report {
        pi1: split.one.coeff_norm(),
        pi7: split.seven.coeff_norm(),
        pi27: split.twenty_seven.coeff_norm(),
    })
}

pub fn check_type27(cone: &ConeG2, xi: &ConeForm) -> bool {
    type27_report(cone, xi).is_ok_and(|r| r.passes())
}

#[derive(Clone, Debug)]
pub struct OrderMinusKReport {
    pub degree: usize,
    pub kernel_dim: usize,
    /// Largest α-slot coefficient over the kernel basis.
    pub max_alpha: f64,
    /// Largest `|Δβ|` over the kernel basis.
    pub max_laplacian_beta: f64,
}

impl OrderMinusKReport {
    pub fn passes(&self) -> bool {
        self.max_alpha < IDENTITY_TOL && self.max_laplacian_beta < IDENTITY_TOL
    }
}

/// Closed and coclosed homogeneous k-forms of order -k: α vanishes and β is
/// harmonic on the link.
pub fn order_minus_k_classification(complex: &LinkComplex, k: usize) -> OrderMinusKReport {
    let pencil = assemble_closed_coclosed_pencil(complex, k);
    let lambda = -(k as f64);
    let kernel = pencil.kernel(lambda, KERNEL_TOL);
    let mut max_alpha = 0.0f64;
    let mut max_laplacian_beta = 0.0f64;
    for v in &kernel {
        for s in pencil.input_slots().iter().filter(|s| s.len > 0) {
            let part = v.rows(s.offset, s.len).into_owned();
            if s.alpha {
                max_alpha = max_alpha.max(part.amax());
            } else {
                max_laplacian_beta = max_laplacian_beta.max((complex.laplacian(k as isize) * part).amax());
            }
        }
    }
    OrderMinusKReport { degree: k, kernel_dim: kernel.len(), max_alpha, max_laplacian_beta }
}

/// Largest `|dω|`, `|d*ω|` over the forms, for certifying that kernel
/// elements are individually closed and coclosed.
pub fn closed_coclosed_residual(alg: &LinkAlgebra, forms: &[ConeForm]) -> f64 {
    forms
        .iter()
        .map(|w| cone_d(alg, w).max_abs().max(cone_codiff(alg, w).max_abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_algebra::preset;

    #[test]
    fn dirac_pencil_is_square() {
        let c = LinkComplex::from_algebra(&preset("s3xs3").unwrap());
        for p in [Parity::Even, Parity::Odd] {
            assert_eq!(assemble_dirac_pencil(&c, p).shape(), (64, 64));
        }
    }

    #[test]
    fn laplacian_on_flat_functions() {
        let c = LinkComplex::from_algebra(&preset("abelian6").unwrap());
        let p = assemble_laplacian_pencil(&c, 0);
        assert_eq!(p.shape(), (1, 1));
        for l in [0.0, -5.0] {
            assert!(p.sigma_min(l) < 1e-14);
            assert_eq!(log_chain_check(&p, l), 0);
        }
        assert!((p.sigma_min(1.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn double_root_has_a_chain() {
        // (λ-1)² on a 1×1 block, and λ(λ-1) for contrast.
        let m = |c: [f64; 3]| c.iter().map(|v| DMatrix::from_element(1, 1, *v)).collect::<Vec<_>>();
        assert_eq!(log_chain_check(&RatePencil::custom(m([1.0, -2.0, 1.0])), 1.0), 1);
        assert_eq!(log_chain_check(&RatePencil::custom(m([0.0, -1.0, 1.0])), 1.0), 0);
    }

    #[test]
    fn planted_rates_solve_the_quadratic() {
        let c = LinkComplex::planted(1, 7.0);
        let p = assemble_closed_coclosed_pencil(&c, 1);
        let set = critical_rates(&p, -8.0, 1.0).unwrap();
        let disc = 53f64.sqrt();
        let expect = [(-7.0 - disc) / 2.0, (-7.0 + disc) / 2.0];
        assert_eq!(set.rates.len(), 2);
        for (r, e) in set.rates.iter().zip(expect) {
            assert!((r.lambda - e).abs() < 1e-9, "{} vs {e}", r.lambda);
        }
    }

    #[test]
    fn endpoint_detection() {
        let c = LinkComplex::from_algebra(&preset("abelian6").unwrap());
        let p = assemble_laplacian_pencil(&c, 0);
        assert_eq!(critical_rates(&p, 0.0, 1.0).unwrap_err(), RateError::EndpointCritical(0.0));
    }
}

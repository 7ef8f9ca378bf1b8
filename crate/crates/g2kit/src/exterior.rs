//! Constant-coefficient exterior algebra on `R^n`.
//!
//! A k-form is stored as `C(n,k)` coefficients against the lexicographically
//! ordered basis `e^{i1} ∧ ... ∧ e^{ik}`, `i1 < ... < ik`. Indices are 0-based.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Largest ambient dimension supported by the basis tables.
pub const MAX_DIM: usize = 8;

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of `Λ^k(R^n)` with the convention that out-of-range degrees are 0.
pub fn dim_forms(n: usize, k: isize) -> usize {
    if k < 0 {
        0
    } else {
        binom(n, k as usize)
    }
}

struct Table {
    by_degree: Vec<Vec<u32>>,
    rank: Vec<usize>,
}

fn table(n: usize) -> &'static Table {
    static TABLES: [OnceLock<Table>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
    assert!(n <= MAX_DIM, "dimension {n} exceeds {MAX_DIM}");
    TABLES[n].get_or_init(|| {
        let mut by_degree = vec![Vec::new(); n + 1];
        for k in 0..=n {
            combos(n, k, 0, 0, &mut by_degree[k]);
        }
        let mut rank = vec![usize::MAX; 1 << n];
        for list in &by_degree {
            for (i, &m) in list.iter().enumerate() {
                rank[m as usize] = i;
            }
        }
        Table { by_degree, rank }
    })
}

fn combos(n: usize, k: usize, start: usize, acc: u32, out: &mut Vec<u32>) {
    if k == 0 {
        out.push(acc);
        return;
    }
    for i in start..=n - k {
        combos(n, k - 1, i + 1, acc | (1 << i), out);
    }
}

/// Bitmasks of the degree-k basis elements in lexicographic order.
pub fn masks(n: usize, k: usize) -> &'static [u32] {
    &table(n).by_degree[k]
}

/// Position of a basis mask within its degree.
pub fn rank(n: usize, mask: u32) -> usize {
    table(n).rank[mask as usize]
}

pub fn indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of `e^A ∧ e^B` relative to `e^{A∪B}` for disjoint masks.
pub fn wedge_sign(a: u32, b: u32) -> f64 {
    let mut swaps = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Determinant of a small dense matrix by partial-pivot elimination.
pub fn small_det(m: &mut [[f64; MAX_DIM]; MAX_DIM], size: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..size {
        let mut piv = col;
        for row in col + 1..size {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..size {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for c in col..size {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    det
}

/// `det(A[rows, cols])` for index masks of equal popcount.
pub fn minor(a: &DMatrix<f64>, rows: u32, cols: u32) -> f64 {
    let r = indices(rows);
    let c = indices(cols);
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, &ri) in r.iter().enumerate() {
        for (j, &cj) in c.iter().enumerate() {
            m[i][j] = a[(ri, cj)];
        }
    }
    small_det(&mut m, r.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    n: usize,
    k: usize,
    c: Vec<f64>,
}

impl Form {
    /// Degrees above `n` are allowed and carry no coefficients.
    pub fn zero(n: usize, k: usize) -> Self {
        Form { n, k, c: vec![0.0; binom(n, k)] }
    }

    pub fn from_coeffs(n: usize, k: usize, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), binom(n, k), "coefficient count must be C({n},{k})");
        Form { n, k, c }
    }

    pub fn from_vector(n: usize, k: usize, v: &DVector<f64>) -> Self {
        Self::from_coeffs(n, k, v.iter().copied().collect())
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Form { n, k: 0, c: vec![value] }
    }

    /// `e^{i1} ∧ ... ∧ e^{ik}` for an arbitrary index order; zero on repeats.
    pub fn basis(n: usize, idx: &[usize]) -> Self {
        let mut out = Form::zero(n, idx.len());
        let mut mask = 0u32;
        let mut sign = 1.0;
        for &i in idx {
            assert!(i < n);
            if mask & (1 << i) != 0 {
                return out;
            }
            sign *= wedge_sign(mask, 1 << i);
            mask |= 1 << i;
        }
        out.c[rank(n, mask)] = sign;
        out
    }

    /// Sum of `coeff · e^{idx}` over the given terms.
    pub fn from_terms(n: usize, k: usize, terms: &[(&[usize], f64)]) -> Self {
        let mut out = Form::zero(n, k);
        for (idx, v) in terms {
            assert_eq!(idx.len(), k);
            out += &(Form::basis(n, idx) * *v);
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Self {
        let c = (0..binom(n, k)).map(|_| rng.sample(StandardNormal)).collect();
        Form { n, k, c }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.c
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.c)
    }

    /// Coefficient of `e^{0..n-1}` (the form must be top degree).
    pub fn top(&self) -> f64 {
        assert_eq!(self.k, self.n);
        self.c[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Form::zero(n, self.k + other.k);
        if self.k + other.k > n {
            return out;
        }
        let ma = masks(n, self.k);
        let mb = masks(n, other.k);
        for (i, &a) in ma.iter().enumerate() {
            let x = self.c[i];
            if x == 0.0 {
                continue;
            }
            for (j, &b) in mb.iter().enumerate() {
                let y = other.c[j];
                if y == 0.0 || a & b != 0 {
                    continue;
                }
                out.c[rank(n, a | b)] += wedge_sign(a, b) * x * y;
            }
        }
        out
    }

    /// Contraction with the i-th dual basis vector.
    pub fn interior(&self, i: usize) -> Form {
        assert!(self.k >= 1 && i < self.n);
        let n = self.n;
        let mut out = Form::zero(n, self.k - 1);
        for (j, &m) in masks(n, self.k).iter().enumerate() {
            if m & (1 << i) == 0 || self.c[j] == 0.0 {
                continue;
            }
            let below = (m & ((1 << i) - 1)).count_ones();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            out.c[rank(n, m & !(1 << i))] += sign * self.c[j];
        }
        out
    }

    /// Pullback by the linear map `a` acting on vectors: `(a^*w)(v..) = w(a v, ..)`.
    pub fn pullback(&self, a: &DMatrix<f64>) -> Form {
        let n = self.n;
        assert_eq!(a.nrows(), n);
        assert_eq!(a.ncols(), n);
        let ms = masks(n, self.k);
        let mut out = Form::zero(n, self.k);
        for (i, &mi) in ms.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            for (j, &mj) in ms.iter().enumerate() {
                out.c[j] += self.c[i] * minor(a, mi, mj);
            }
        }
        out
    }

    /// Embed a form on `R^m` into `R^n` (n ≥ m) by shifting indices by `offset`.
    pub fn embed(&self, n: usize, offset: usize) -> Form {
        assert!(self.n + offset <= n);
        let mut out = Form::zero(n, self.k);
        for (i, &m) in masks(self.n, self.k).iter().enumerate() {
            out.c[rank(n, m << offset)] += self.c[i];
        }
        out
    }
}

impl Add<&Form> for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Form> for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Form> for Form {
    fn add_assign(&mut self, rhs: &Form) {
        assert_eq!((self.n, self.k), (rhs.n, rhs.k), "degree mismatch");
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
    }
}

impl SubAssign<&Form> for Form {
    fn sub_assign(&mut self, rhs: &Form) {
        assert_eq!((self.n, self.k), (rhs.n, rhs.k), "degree mismatch");
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
    }
}

impl Mul<f64> for Form {
    type Output = Form;
    fn mul(mut self, s: f64) -> Form {
        self.c.iter_mut().for_each(|x| *x *= s);
        self
    }
}

impl Mul<f64> for &Form {
    type Output = Form;
    fn mul(self, s: f64) -> Form {
        self.clone() * s
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        self * -1.0
    }
}

/// A constant inner product on `R^n` together with an orientation, acting on
/// forms through the induced Gram matrices and the Hodge star.
#[derive(Clone, Debug)]
pub struct FormMetric {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    vol: f64,
    grams: Vec<OnceLock<DMatrix<f64>>>,
}

impl FormMetric {
    /// `g[(i,j)] = g(e_i, e_j)` on vectors; `orientation` is ±1.
    /// Returns `None` when `g` is not positive definite.
    pub fn new(g: DMatrix<f64>, orientation: f64) -> Option<Self> {
        let n = g.nrows();
        let chol = g.clone().cholesky()?;
        let ginv = chol.inverse();
        let det = chol.l().diagonal().iter().map(|x| x * x).product::<f64>();
        Some(FormMetric {
            g,
            ginv,
            vol: orientation.signum() * det.sqrt(),
            grams: (0..=n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), 1.0).expect("identity is positive")
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.ginv
    }

    /// Signed coefficient of the Riemannian volume form on `e^{0..n-1}`.
    pub fn volume(&self) -> f64 {
        self.vol
    }

    /// Gram matrix of the induced inner product on k-forms.
    pub fn gram(&self, k: usize) -> &DMatrix<f64> {
        self.grams[k].get_or_init(|| {
            let n = self.dim();
            let ms = masks(n, k);
            let mut out = DMatrix::zeros(ms.len(), ms.len());
            for (i, &a) in ms.iter().enumerate() {
                for (j, &b) in ms.iter().enumerate().skip(i) {
                    let v = if k == 0 { 1.0 } else { minor(&self.ginv, a, b) };
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
            out
        })
    }

    pub fn inner(&self, a: &Form, b: &Form) -> f64 {
        assert_eq!(a.k, b.k);
        let g = self.gram(a.k);
        let mut s = 0.0;
        for i in 0..a.c.len() {
            if a.c[i] == 0.0 {
                continue;
            }
            for j in 0..b.c.len() {
                s += a.c[i] * g[(i, j)] * b.c[j];
            }
        }
        s
    }

    pub fn norm(&self, a: &Form) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Hodge star defined by `a ∧ *b = <a, b> vol`.
    pub fn star(&self, b: &Form) -> Form {
        let n = self.dim();
        let k = b.k;
        let gb = self.gram(k) * b.to_vector();
        let full = (1u32 << n) - 1;
        let mut out = Form::zero(n, n - k);
        for (i, &m) in masks(n, k).iter().enumerate() {
            let comp = full & !m;
            out.c[rank(n, comp)] += wedge_sign(m, comp) * gb[i] * self.vol;
        }
        out
    }

    /// Matrix of the star on k-forms (columns are images of basis forms).
    pub fn star_matrix(&self, k: usize) -> DMatrix<f64> {
        let n = self.dim();
        let cols = binom(n, k);
        let mut out = DMatrix::zeros(binom(n, n - k), cols);
        for j in 0..cols {
            let mut e = Form::zero(n, k);
            e.c[j] = 1.0;
            out.set_column(j, &self.star(&e).to_vector());
        }
        out
    }
}

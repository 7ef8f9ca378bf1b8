//! Left-invariant exterior calculus on a 6-dimensional Lie group presented by
//! structure constants, and the nearly Kähler structure on S³×S³.
//!
//! Only constant-coefficient (invariant) forms are represented. Δ preserves
//! this 64-dimensional subcomplex, so every spectral statement made here is a
//! statement about that slice and not about all forms on the link.

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::Rational64;
use thiserror::Error;

use crate::exterior::{binom, dim_forms, Form, FormMetric};
use crate::g2_pointwise::{metric_from_3form, sqrt_and_inverse};

pub const N: usize = 6;
pub const JACOBI_TOL: f64 = 1e-12;
pub const NK_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as zero in spectra.
pub const ZERO_EIG_TOL: f64 = 1e-8;

const S3XS3: &str = include_str!("../presets/s3xs3.link");
const ABELIAN6: &str = include_str!("../presets/abelian6.link");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("structure constants violate the Jacobi identity (max defect {0:e})")]
    JacobiViolation(f64),
    #[error("structure constants are not antisymmetric in the lower indices (max defect {0:e})")]
    NotAntisymmetric(f64),
    #[error("metric is not positive definite")]
    MetricNotPositive,
    #[error("no nearly Kähler structure in the ansatz (best residual {0:e})")]
    NoSolution(f64),
    #[error("link file: {0}")]
    Parse(String),
}

/// `c[i][j][k] = c^i_{jk}`, so that `de^i = -½ c^i_{jk} e^j∧e^k`.
pub type StructureConstants = [[[f64; N]; N]; N];

#[derive(Clone, Debug)]
pub struct LinkAlgebra {
    name: String,
    c: StructureConstants,
    metric: FormMetric,
    orientation: f64,
    d: Vec<DMatrix<f64>>,
    codiff: Vec<DMatrix<f64>>,
    stars: Vec<DMatrix<f64>>,
    laplacians: Vec<DMatrix<f64>>,
}

pub fn make_algebra(
    c: StructureConstants,
    g: DMatrix<f64>,
    orientation: f64,
) -> Result<LinkAlgebra, LinkError> {
    let mut asym = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                asym = asym.max((c[i][j][k] + c[i][k][j]).abs());
            }
        }
    }
    if asym > JACOBI_TOL {
        return Err(LinkError::NotAntisymmetric(asym));
    }
    let jac = jacobi_defect(&c);
    if jac > JACOBI_TOL {
        return Err(LinkError::JacobiViolation(jac));
    }
    let orientation = if orientation < 0.0 { -1.0 } else { 1.0 };
    let metric = FormMetric::new(g, orientation).ok_or(LinkError::MetricNotPositive)?;
    let d: Vec<DMatrix<f64>> = (0..=N).map(|k| d_matrix(&c, k)).collect();
    for k in 0..N - 1 {
        let dd = (&d[k + 1] * &d[k]).amax();
        if dd > JACOBI_TOL {
            return Err(LinkError::JacobiViolation(dd));
        }
    }
    let stars: Vec<DMatrix<f64>> = (0..=N).map(|k| metric.star_matrix(k)).collect();
    let codiff: Vec<DMatrix<f64>> = (0..=N)
        .map(|k| {
            if k == 0 {
                DMatrix::zeros(0, 1)
            } else {
                -(&stars[N + 1 - k] * &d[N - k] * &stars[k])
            }
        })
        .collect();
    let laplacians = (0..=N)
        .map(|k| {
            let n = binom(N, k);
            let mut out = DMatrix::zeros(n, n);
            if k > 0 {
                out += &d[k - 1] * &codiff[k];
            }
            if k < N {
                out += &codiff[k + 1] * &d[k];
            }
            out
        })
        .collect();
    Ok(LinkAlgebra { name: String::new(), c, metric, orientation, d, codiff, stars, laplacians })
}

fn jacobi_defect(c: &StructureConstants) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                for l in 0..N {
                    let mut s = 0.0;
                    for m in 0..N {
                        s += c[i][j][m] * c[m][k][l] + c[i][k][m] * c[m][l][j] + c[i][l][m] * c[m][j][k];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

fn d_of_coframe(c: &StructureConstants, i: usize) -> Form {
    let mut out = Form::zero(N, 2);
    for j in 0..N {
        for k in j + 1..N {
            if c[i][j][k] != 0.0 {
                out += &(Form::basis(N, &[j, k]) * -c[i][j][k]);
            }
        }
    }
    out
}

fn d_matrix(c: &StructureConstants, k: usize) -> DMatrix<f64> {
    let de: Vec<Form> = (0..N).map(|i| d_of_coframe(c, i)).collect();
    let cols = binom(N, k);
    let mut out = DMatrix::zeros(binom(N, k + 1), cols);
    if k == N {
        return out;
    }
    for (col, &mask) in crate::exterior::masks(N, k).iter().enumerate() {
        let idx = crate::exterior::indices(mask);
        let mut acc = Form::zero(N, k + 1);
        for p in 0..idx.len() {
            let head = Form::basis(N, &idx[..p]);
            let tail = Form::basis(N, &idx[p + 1..]);
            let term = head.wedge(&de[idx[p]]).wedge(&tail);
            if p % 2 == 0 {
                acc += &term;
            } else {
                acc -= &term;
            }
        }
        out.set_column(col, &acc.to_vector());
    }
    out
}

fn zero_block(rows: isize, cols: isize) -> DMatrix<f64> {
    DMatrix::zeros(dim_forms(N, rows), dim_forms(N, cols))
}

/// One eigenvalue of Δ on invariant k-forms with an orthonormal eigenbasis.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub value: f64,
    pub multiplicity: usize,
    pub basis: Vec<Form>,
}

impl LinkAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.c
    }

    pub fn metric(&self) -> &FormMetric {
        &self.metric
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Same structure constants with a different metric.
    pub fn with_metric(&self, g: DMatrix<f64>) -> Result<LinkAlgebra, LinkError> {
        let mut out = make_algebra(self.c, g, self.orientation)?;
        out.name = self.name.clone();
        Ok(out)
    }

    /// Matrix of d from k-forms to (k+1)-forms.
    pub fn d_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.d[k]
    }

    /// Matrix of d* from k-forms to (k-1)-forms.
    pub fn codiff_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.codiff[k]
    }

    pub fn laplacian_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.laplacians[k]
    }

    pub fn star_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.stars[k]
    }

    /// d on degree `j`, as a (possibly empty) zero block outside 0..=5.
    pub fn d_block(&self, j: isize) -> Cow<'_, DMatrix<f64>> {
        match j {
            0..=5 => Cow::Borrowed(&self.d[j as usize]),
            _ => Cow::Owned(zero_block(j + 1, j)),
        }
    }

    /// d* on degree `j`, zero outside 1..=6.
    pub fn codiff_block(&self, j: isize) -> Cow<'_, DMatrix<f64>> {
        match j {
            1..=6 => Cow::Borrowed(&self.codiff[j as usize]),
            _ => Cow::Owned(zero_block(j - 1, j)),
        }
    }

    /// * on degree `j`, zero outside 0..=6.
    pub fn star_block(&self, j: isize) -> Cow<'_, DMatrix<f64>> {
        match j {
            0..=6 => Cow::Borrowed(&self.stars[j as usize]),
            _ => Cow::Owned(zero_block(N as isize - j, j)),
        }
    }

    /// Δ on degree `j`, zero outside 0..=6.
    pub fn laplacian_block(&self, j: isize) -> Cow<'_, DMatrix<f64>> {
        match j {
            0..=6 => Cow::Borrowed(&self.laplacians[j as usize]),
            _ => Cow::Owned(zero_block(j, j)),
        }
    }

    pub fn exterior_d(&self, w: &Form) -> Form {
        Form::from_vector(N, w.degree() + 1, &(&self.d[w.degree()] * w.to_vector()))
    }

    pub fn star(&self, w: &Form) -> Form {
        self.metric.star(w)
    }

    /// `d* = -*d*`, the 6-dimensional sign for every degree.
    pub fn codiff(&self, w: &Form) -> Form {
        let k = w.degree();
        assert!(k >= 1, "codifferential of a function is zero-dimensional");
        Form::from_vector(N, k - 1, &(&self.codiff[k] * w.to_vector()))
    }

    pub fn laplacian(&self, w: &Form) -> Form {
        Form::from_vector(N, w.degree(), &(self.laplacian_matrix(w.degree()) * w.to_vector()))
    }

    pub fn inner(&self, a: &Form, b: &Form) -> f64 {
        self.metric.inner(a, b)
    }

    pub fn norm(&self, a: &Form) -> f64 {
        self.metric.norm(a)
    }

    pub fn volume_form(&self) -> Form {
        Form::constant(N, 1.0).wedge(&Form::basis(N, &[0, 1, 2, 3, 4, 5])) * self.metric.volume()
    }

    /// Full eigendecomposition of Δ on invariant k-forms, ascending.
    pub fn invariant_spectrum(&self, k: usize) -> Vec<Eigenspace> {
        let l = self.laplacian_matrix(k).clone();
        let (half, inv) = sqrt_and_inverse(self.metric.gram(k));
        let s = &half * l * &inv;
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut out: Vec<Eigenspace> = Vec::new();
        for &i in &order {
            let value = eig.eigenvalues[i];
            let v = &inv * eig.eigenvectors.column(i);
            let form = Form::from_vector(N, k, &DVector::from_iterator(v.len(), v.iter().copied()));
            match out.last_mut() {
                Some(last) if (value - last.value).abs() <= ZERO_EIG_TOL * last.value.abs().max(1.0) => {
                    last.multiplicity += 1;
                    last.basis.push(form);
                }
                _ => out.push(Eigenspace { value, multiplicity: 1, basis: vec![form] }),
            }
        }
        for e in &mut out {
            if e.value.abs() < ZERO_EIG_TOL {
                e.value = 0.0;
            }
        }
        out
    }

    /// Orthonormal basis of invariant harmonic k-forms (pointwise inner product,
    /// i.e. Σ normalized to unit volume).
    pub fn harmonic_representatives(&self, k: usize) -> Vec<Form> {
        self.invariant_spectrum(k)
            .into_iter()
            .filter(|e| e.value == 0.0)
            .flat_map(|e| e.basis)
            .collect()
    }
}

/// Coefficients of the SU(3)-structure `(ω, ReΩ, ImΩ)` on the link.
#[derive(Clone, Debug)]
pub struct SU3Structure {
    pub omega: Form,
    pub re_omega3: Form,
    pub im_omega3: Form,
}

/// Max-coefficient residuals of the nearly Kähler equations and normalization.
#[derive(Clone, Copy, Debug, Default)]
pub struct NkResiduals {
    /// `dω + 3ReΩ`
    pub d_omega: f64,
    /// `dImΩ - 2ω²`
    pub d_im: f64,
    /// `ω³/6 - ReΩ∧ImΩ/4`
    pub normalization: f64,
    /// `ω³/6 - vol`
    pub volume: f64,
    /// `ω∧ReΩ`, `ω∧ImΩ`
    pub compatibility: f64,
}

impl NkResiduals {
    pub fn max(&self) -> f64 {
        [self.d_omega, self.d_im, self.normalization, self.volume, self.compatibility]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn nk_residuals(alg: &LinkAlgebra, s: &SU3Structure) -> NkResiduals {
    let w2 = s.omega.wedge(&s.omega);
    let w3 = w2.wedge(&s.omega).top() / 6.0;
    let d_omega = (&alg.exterior_d(&s.omega) + &(&s.re_omega3 * 3.0)).max_abs();
    let d_im = (&alg.exterior_d(&s.im_omega3) - &(&w2 * 2.0)).max_abs();
    let normalization = (w3 - s.re_omega3.wedge(&s.im_omega3).top() / 4.0).abs();
    let volume = (w3 - alg.metric.volume()).abs();
    let compatibility = s
        .omega
        .wedge(&s.re_omega3)
        .max_abs()
        .max(s.omega.wedge(&s.im_omega3).max_abs());
    NkResiduals { d_omega, d_im, normalization, volume, compatibility }
}

#[derive(Clone, Debug)]
pub struct NkSolution {
    /// The input algebra carrying the metric determined by the solution.
    pub algebra: LinkAlgebra,
    pub structure: SU3Structure,
    pub residuals: NkResiduals,
    /// Coefficients `x_i` of the ansatz `ω = Σ x_i a^i∧b^i`.
    pub coefficients: [f64; 3],
}

/// Candidate structure for ansatz coefficients, and the full residual vector.
///
/// ReΩ is fixed by `dω = -3ReΩ`. The metric is the one of the 7-dimensional
/// 3-form `ReΩ - e⁰∧ω` restricted to the link, and `ImΩ = *ReΩ` in it; the
/// residual then measures the remaining structure equations and the
/// requirement that the 7-dimensional metric is `dr² + g_Σ`.
fn nk_candidate(alg: &LinkAlgebra, x: &[f64; 3]) -> Option<(LinkAlgebra, SU3Structure, Vec<f64>)> {
    let omega = Form::from_terms(N, 2, &[(&[0, 3], x[0]), (&[1, 4], x[1]), (&[2, 5], x[2])]);
    let re = alg.exterior_d(&omega) * (-1.0 / 3.0);
    let e0 = Form::basis(7, &[0]);
    let phi = &re.embed(7, 1) - &e0.wedge(&omega.embed(7, 1));
    let g7 = metric_from_3form(&phi).ok()?;
    let g7 = g7.matrix();
    let gs = g7.view((1, 1), (N, N)).into_owned();
    let link = alg.with_metric(gs).ok()?;
    let im = link.star(&re);
    let s = SU3Structure { omega, re_omega3: re, im_omega3: im };
    let w2 = s.omega.wedge(&s.omega);
    let w3 = w2.wedge(&s.omega).top() / 6.0;
    let mut r: Vec<f64> = Vec::new();
    r.extend((&link.exterior_d(&s.im_omega3) - &(&w2 * 2.0)).coeffs());
    r.extend(s.omega.wedge(&s.re_omega3).coeffs());
    r.extend(s.omega.wedge(&s.im_omega3).coeffs());
    r.push(w3 - s.re_omega3.wedge(&s.im_omega3).top() / 4.0);
    r.push(w3 - link.metric.volume());
    r.push(g7[(0, 0)] - 1.0);
    r.extend((1..7).map(|i| g7[(0, i)]));
    Some((link, s, r))
}

/// Solve the nearly Kähler equations over the ansatz `ω = Σ x_i a^i∧b^i`,
/// where `a^i = e^i` and `b^i = e^{i+3}`, by Levenberg–Marquardt from a few
/// starting points. The 3-forms range over all of Λ³ (ReΩ from `dω = -3ReΩ`,
/// ImΩ from the metric), so only ω carries an ansatz.
pub fn solve_nk(alg: &LinkAlgebra) -> Result<NkSolution, LinkError> {
    let mut best = f64::INFINITY;
    for start in [-0.1, -1.0, -0.01, 0.1, 1.0] {
        let Some(x) = levenberg_marquardt(alg, [start; 3]) else { continue };
        let Some((link, s, _)) = nk_candidate(alg, &x) else { continue };
        let residuals = nk_residuals(&link, &s);
        if residuals.max() < NK_TOL {
            return Ok(NkSolution { algebra: link, structure: s, residuals, coefficients: x });
        }
        best = best.min(residuals.max());
    }
    Err(LinkError::NoSolution(best))
}

fn residual_norm(alg: &LinkAlgebra, x: &[f64; 3]) -> Option<(Vec<f64>, f64)> {
    let (_, _, r) = nk_candidate(alg, x)?;
    let n = r.iter().map(|v| v * v).sum::<f64>();
    n.is_finite().then_some((r, n))
}

fn levenberg_marquardt(alg: &LinkAlgebra, x0: [f64; 3]) -> Option<[f64; 3]> {
    let mut x = x0;
    let (mut r, mut cost) = residual_norm(alg, &x)?;
    let mut damping = 1e-3;
    for _ in 0..200 {
        if cost.sqrt() < 1e-14 {
            break;
        }
        let m = r.len();
        let mut jac = DMatrix::zeros(m, 3);
        for p in 0..3 {
            let h = 1e-7 * x[p].abs().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[p] += h;
            xm[p] -= h;
            let (rp, _) = residual_norm(alg, &xp)?;
            let (rm, _) = residual_norm(alg, &xm)?;
            for i in 0..m {
                jac[(i, p)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_vec(r.clone());
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..3 {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else { break };
            let cand = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
            match residual_norm(alg, &cand) {
                Some((rc, cc)) if cc < cost => {
                    x = cand;
                    r = rc;
                    cost = cc;
                    damping = (damping * 0.3).max(1e-15);
                    improved = true;
                    break;
                }
                _ => damping *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    Some(x)
}

/// Parse the link-algebra text format:
///
/// ```text
/// name = s3xs3
/// dimension = 6
/// orientation = 1
/// structure = 1 2 3 1; 2 3 1 1      # triples (i, j, k, c^i_jk), 1-based
/// metric = identity                  # or entries "i j g_ij; ..."
/// ```
pub fn parse_link_file(text: &str) -> Result<LinkAlgebra, LinkError> {
    let err = |m: String| LinkError::Parse(m);
    let mut name = String::from("custom");
    let mut dimension = None;
    let mut orientation = 1.0;
    let mut c = [[[0.0; N]; N]; N];
    let mut g = DMatrix::<f64>::identity(N, N);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
        let value = value.trim();
        match key.trim() {
            "name" => name = value.to_string(),
            "dimension" => {
                dimension = Some(value.parse::<usize>().map_err(|e| err(format!("dimension: {e}")))?)
            }
            "orientation" => orientation = parse_number(value).map_err(err)?,
            "structure" => {
                for entry in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    let f: Vec<&str> = entry.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(err(format!("structure entry '{entry}' needs i j k value")));
                    }
                    let (i, j, k) = (index(f[0])?, index(f[1])?, index(f[2])?);
                    let v = parse_number(f[3]).map_err(err)?;
                    if j == k {
                        return Err(err(format!("structure entry '{entry}' has equal lower indices")));
                    }
                    c[i][j][k] = v;
                    c[i][k][j] = -v;
                }
            }
            "metric" => {
                g = DMatrix::identity(N, N);
                if value != "identity" {
                    g.fill(0.0);
                    for entry in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                        let f: Vec<&str> = entry.split_whitespace().collect();
                        if f.len() != 3 {
                            return Err(err(format!("metric entry '{entry}' needs i j value")));
                        }
                        let (i, j) = (index(f[0])?, index(f[1])?);
                        let v = parse_number(f[2]).map_err(err)?;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
            }
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    if dimension != Some(N) {
        return Err(err(format!("dimension must be {N}")));
    }
    let mut alg = make_algebra(c, g, orientation)?;
    alg.name = name;
    Ok(alg)
}

fn index(s: &str) -> Result<usize, LinkError> {
    match s.parse::<usize>() {
        Ok(i) if (1..=N).contains(&i) => Ok(i - 1),
        _ => Err(LinkError::Parse(format!("index '{s}' must be in 1..={N}"))),
    }
}

/// Integers, ratios like `-1/2`, or decimals.
fn parse_number(s: &str) -> Result<f64, String> {
    if let Ok(r) = s.parse::<Rational64>() {
        return Ok(*r.numer() as f64 / *r.denom() as f64);
    }
    s.parse::<f64>().map_err(|_| format!("cannot parse number '{s}'"))
}

/// Shipped presets: `s3xs3` and `abelian6`.
pub fn preset(name: &str) -> Result<LinkAlgebra, LinkError> {
    match name {
        "s3xs3" => parse_link_file(S3XS3),
        "abelian6" => parse_link_file(ABELIAN6),
        other => Err(LinkError::Parse(format!("unknown preset '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        let s = preset("s3xs3").unwrap();
        assert_eq!(s.name(), "s3xs3");
        let de1 = s.exterior_d(&Form::basis(N, &[0]));
        assert_eq!(de1, Form::basis(N, &[1, 2]) * -s.structure_constants()[0][1][2]);
        let a = preset("abelian6").unwrap();
        assert_eq!(a.d_matrix(2).amax(), 0.0);
    }

    #[test]
    fn mixed_bracket_breaks_jacobi() {
        let mut c = *preset("s3xs3").unwrap().structure_constants();
        c[3][1][2] = 1.0;
        c[3][2][1] = -1.0;
        let r = make_algebra(c, DMatrix::identity(N, N), 1.0);
        assert!(matches!(r, Err(LinkError::JacobiViolation(_))));
    }

    #[test]
    fn one_sided_flip_is_not_antisymmetric() {
        let mut c = *preset("s3xs3").unwrap().structure_constants();
        c[0][1][2] = -c[0][1][2];
        let r = make_algebra(c, DMatrix::identity(N, N), 1.0);
        assert!(matches!(r, Err(LinkError::NotAntisymmetric(_))));
    }

    #[test]
    fn indefinite_metric_rejected() {
        let c = *preset("s3xs3").unwrap().structure_constants();
        let mut g = DMatrix::identity(N, N);
        g[(2, 2)] = -1.0;
        assert_eq!(make_algebra(c, g, 1.0).unwrap_err(), LinkError::MetricNotPositive);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_link_file("dimension = 6\nbogus = 1").is_err());
        assert!(parse_link_file("dimension = 5").is_err());
        assert!(parse_link_file("dimension = 6\nstructure = 1 2 3").is_err());
        assert!(parse_link_file("dimension = 6\nstructure = 1 2 9 1").is_err());
        let a = parse_link_file("dimension = 6\nstructure = 1 2 3 1/2; 2 3 1 1/2; 3 1 2 1/2").unwrap();
        assert_eq!(a.structure_constants()[0][1][2], 0.5);
    }

    #[test]
    fn nk_solution_on_s3xs3() {
        let sol = solve_nk(&preset("s3xs3").unwrap()).unwrap();
        assert!(sol.residuals.max() < NK_TOL);
        let expect = -1.0 / (6.0 * 3f64.sqrt());
        assert!(sol.coefficients.iter().all(|x| (x - expect).abs() < 1e-10));
    }

    #[test]
    fn abelian_has_no_nk_structure() {
        assert!(matches!(solve_nk(&preset("abelian6").unwrap()), Err(LinkError::NoSolution(_))));
    }
}

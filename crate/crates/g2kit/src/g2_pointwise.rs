//! G2 linear algebra at a single point of `R^7`.
//!
//! Sign convention: `(u⌟φ)∧(v⌟φ)∧φ = -6 g(u,v) vol`, the one for which the
//! cone `r³ReΩ - r²dr∧ω` over a nearly Kähler link is a positive 3-form.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::exterior::{Form, FormMetric};

/// A 3-form is positive iff every eigenvalue of its bilinear form exceeds this.
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

pub type Metric7 = FormMetric;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum G2Error {
    #[error("3-form is not positive (smallest eigenvalue of its bilinear form is {0:e})")]
    NotPositive(f64),
    #[error("Newton iteration for the inverse of Theta stalled at residual {residual:e} after {iterations} steps")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("type operator split into dimensions {0:?}, expected [1, 7, 27]")]
    DegenerateSplit(Vec<usize>),
}

/// The standard positive 3-form, coframe index 0 playing the role of `dr`.
pub fn phi0() -> Form {
    Form::from_terms(
        7,
        3,
        &[
            (&[0, 1, 2], -1.0),
            (&[0, 3, 4], -1.0),
            (&[0, 5, 6], -1.0),
            (&[1, 3, 5], 1.0),
            (&[1, 4, 6], -1.0),
            (&[2, 3, 6], -1.0),
            (&[2, 4, 5], -1.0),
        ],
    )
}

pub fn standard_g2() -> G2Structure {
    G2Structure::new(phi0()).expect("standard 3-form is positive")
}

/// Symmetric bilinear form `b` with `(e_i⌟φ)∧(e_j⌟φ)∧φ = -6 b_ij e^{0..6}`.
fn bilinear(phi: &Form) -> DMatrix<f64> {
    let contractions: Vec<Form> = (0..7).map(|i| phi.interior(i)).collect();
    let mut b = DMatrix::zeros(7, 7);
    for i in 0..7 {
        for j in i..7 {
            let v = contractions[i].wedge(&contractions[j]).wedge(phi).top() / -6.0;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// Metric and volume determined by a positive 3-form.
pub fn metric_from_3form(phi: &Form) -> Result<Metric7, G2Error> {
    assert_eq!((phi.dim(), phi.degree()), (7, 3));
    let b = bilinear(phi);
    let eig = SymmetricEigen::new(b.clone());
    let min = eig.eigenvalues.min();
    if !(min > POSITIVITY_TOL) {
        return Err(G2Error::NotPositive(min));
    }
    let det: f64 = eig.eigenvalues.iter().product();
    let g = b / det.powf(1.0 / 9.0);
    FormMetric::new(g, 1.0).ok_or(G2Error::NotPositive(min))
}

pub fn hodge_star(m: &Metric7, w: &Form) -> Form {
    m.star(w)
}

/// `Θ(φ) = *_φ φ`.
pub fn theta(phi: &Form) -> Result<Form, G2Error> {
    Ok(metric_from_3form(phi)?.star(phi))
}

/// The three components of a 3- or 4-form under the G2 type decomposition.
#[derive(Clone, Debug)]
pub struct TypeSplit {
    pub one: Form,
    pub seven: Form,
    pub twenty_seven: Form,
}

#[derive(Clone, Debug)]
pub struct G2Structure {
    phi: Form,
    psi: Form,
    metric: Metric7,
    projectors: [DMatrix<f64>; 3],
    eigenvalues: [f64; 3],
}

impl G2Structure {
    pub fn new(phi: Form) -> Result<Self, G2Error> {
        let metric = metric_from_3form(&phi)?;
        let psi = metric.star(&phi);
        let (projectors, eigenvalues) = type_projectors(&phi, &psi, &metric)?;
        Ok(G2Structure { phi, psi, metric, projectors, eigenvalues })
    }

    pub fn phi(&self) -> &Form {
        &self.phi
    }

    pub fn psi(&self) -> &Form {
        &self.psi
    }

    pub fn metric(&self) -> &Metric7 {
        &self.metric
    }

    /// Projection matrices onto Λ³₁, Λ³₇, Λ³₂₇ in the coefficient basis.
    pub fn projector_matrices(&self) -> &[DMatrix<f64>; 3] {
        &self.projectors
    }

    /// Eigenvalues of the type operator on Λ³₁, Λ³₇, Λ³₂₇.
    pub fn type_eigenvalues(&self) -> [f64; 3] {
        self.eigenvalues
    }

    pub fn project3(&self, xi: &Form) -> TypeSplit {
        assert_eq!(xi.degree(), 3);
        let v = xi.to_vector();
        let f = |p: &DMatrix<f64>| Form::from_vector(7, 3, &(p * &v));
        TypeSplit {
            one: f(&self.projectors[0]),
            seven: f(&self.projectors[1]),
            twenty_seven: f(&self.projectors[2]),
        }
    }

    /// Degree-4 projections, `π(η) = *π(*η)`.
    pub fn project4(&self, eta: &Form) -> TypeSplit {
        assert_eq!(eta.degree(), 4);
        let s = self.project3(&self.metric.star(eta));
        TypeSplit {
            one: self.metric.star(&s.one),
            seven: self.metric.star(&s.seven),
            twenty_seven: self.metric.star(&s.twenty_seven),
        }
    }

    /// `J(η) = *((3/4)π₁η + π₇η - π₂₇η)`.
    pub fn j_map(&self, eta: &Form) -> Form {
        let s = self.project4(eta);
        let mut w = s.one * 0.75;
        w += &s.seven;
        w -= &s.twenty_seven;
        self.metric.star(&w)
    }

    /// Derivative of Θ at φ: `ξ ↦ *((4/3)π₁ξ + π₇ξ - π₂₇ξ)`.
    pub fn theta_derivative(&self, xi: &Form) -> Form {
        let s = self.project3(xi);
        let mut w = s.one * (4.0 / 3.0);
        w += &s.seven;
        w -= &s.twenty_seven;
        self.metric.star(&w)
    }

    /// `F(ξ) = Θ(φ+ξ) - ψ - *((4/3)π₁ξ + π₇ξ - π₂₇ξ)`.
    pub fn remainder_f(&self, xi: &Form) -> Result<Form, G2Error> {
        let mut out = theta(&(&self.phi + xi))?;
        out -= &self.psi;
        out -= &self.theta_derivative(xi);
        Ok(out)
    }

    /// `G(η) = Θ⁻¹(ψ+η) - φ - J(η)`.
    pub fn remainder_g(&self, eta: &Form) -> Result<Form, G2Error> {
        let mut out = theta_inverse(self, &(&self.psi + eta))?;
        out -= &self.phi;
        out -= &self.j_map(eta);
        Ok(out)
    }
}

/// Spectral projectors of `T(ξ) = *(φ∧*(φ∧ξ)) + *(ψ∧ξ)φ`.
///
/// The first summand vanishes on Λ³₁ ⊕ Λ³₂₇, the second is `<ξ,φ>φ`, so the
/// three eigenvalues separate the three summands.
fn type_projectors(
    phi: &Form,
    psi: &Form,
    metric: &Metric7,
) -> Result<([DMatrix<f64>; 3], [f64; 3]), G2Error> {
    let n = 35;
    let mut t = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = Form::zero(7, 3);
        e.coeffs_mut()[j] = 1.0;
        let mut col = metric.star(&phi.wedge(&metric.star(&phi.wedge(&e))));
        col += &(phi * metric.star(&psi.wedge(&e)).coeffs()[0]);
        t.set_column(j, &col.to_vector());
    }
    let (half, inv_half) = sqrt_and_inverse(metric.gram(3));
    let s = &half * &t * &inv_half;
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut gaps: Vec<(f64, usize)> = (1..n).map(|i| (sorted[i] - sorted[i - 1], i)).collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cuts = [gaps[0].1, gaps[1].1];
    cuts.sort();
    let groups = [0..cuts[0], cuts[0]..cuts[1], cuts[1]..n];
    let mut out: [Option<(DMatrix<f64>, f64)>; 3] = [None, None, None];
    for g in groups.iter() {
        let slot = match g.len() {
            1 => 0,
            7 => 1,
            27 => 2,
            _ => return Err(G2Error::DegenerateSplit(groups.iter().map(|g| g.len()).collect())),
        };
        let q = DMatrix::from_fn(n, g.len(), |r, c| eig.eigenvectors[(r, order[g.start + c])]);
        let mean = sorted[g.clone()].iter().sum::<f64>() / g.len() as f64;
        out[slot] = Some((&inv_half * &q * q.transpose() * &half, mean));
    }
    let [a, b, c] = out.map(|o| o.expect("each dimension appears once"));
    Ok(([a.0, b.0, c.0], [a.1, b.1, c.1]))
}

/// `(G^{1/2}, G^{-1/2})` for a symmetric positive-definite matrix.
pub fn sqrt_and_inverse(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(g.clone());
    let v = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|x| x.sqrt());
    let half = v * DMatrix::from_diagonal(&d) * v.transpose();
    let inv = v * DMatrix::from_diagonal(&d.map(|x| 1.0 / x)) * v.transpose();
    (half, inv)
}

/// Solve `Θ(φ) = ψ4` by damped Newton iteration seeded at `reference.phi()`.
///
/// The Newton step is `J_φ(ψ4 - Θ(φ))`, since `J_φ` inverts the derivative of Θ.
/// The residual tolerance is relative to `max(1, |ψ4|)`.
pub fn theta_inverse(reference: &G2Structure, psi4: &Form) -> Result<Form, G2Error> {
    let tol = NEWTON_TOL * psi4.coeff_norm().max(1.0);
    let mut current = reference.clone();
    let mut res = psi4 - current.psi();
    let mut rn = res.coeff_norm();
    let mut polished = false;
    for iter in 0..NEWTON_MAX_ITER {
        if rn < tol && polished {
            return Ok(current.phi);
        }
        let step = current.j_map(&res);
        let mut t = 1.0;
        let accepted = loop {
            let cand = &current.phi + &(&step * t);
            if let Ok(s) = G2Structure::new(cand) {
                let r = psi4 - s.psi();
                let n = r.coeff_norm();
                if n < rn {
                    break Some((s, r, n));
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                break None;
            }
        };
        match accepted {
            Some((s, r, n)) => {
                current = s;
                res = r;
                rn = n;
                polished = rn < tol;
            }
            None if rn < tol => return Ok(current.phi),
            None => return Err(G2Error::NoConvergence { residual: rn, iterations: iter }),
        }
    }
    if rn < tol {
        Ok(current.phi)
    } else {
        Err(G2Error::NoConvergence { residual: rn, iterations: NEWTON_MAX_ITER })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Form, b: &Form, tol: f64) -> bool {
        (a - b).max_abs() < tol
    }

    #[test]
    fn standard_metric_is_identity() {
        let g2 = standard_g2();
        let m = g2.metric().matrix();
        assert!((m - DMatrix::<f64>::identity(7, 7)).amax() < 1e-14);
        assert!((g2.metric().volume() - 1.0).abs() < 1e-14);
        assert!(close(&g2.metric().star(g2.psi()), g2.phi(), 1e-14));
    }

    #[test]
    fn scaling_by_eight_doubles_lengths() {
        let m = metric_from_3form(&(phi0() * 8.0)).unwrap();
        assert!((m.matrix() - DMatrix::<f64>::identity(7, 7) * 4.0).amax() < 1e-12);
        assert!((m.volume() - 128.0).abs() < 1e-10);
    }

    #[test]
    fn negative_form_is_rejected() {
        assert!(matches!(metric_from_3form(&(phi0() * -1.0)), Err(G2Error::NotPositive(_))));
        assert!(matches!(metric_from_3form(&Form::basis(7, &[0, 1, 2])), Err(G2Error::NotPositive(_))));
    }

    #[test]
    fn type_dimensions() {
        let g2 = standard_g2();
        let dims: Vec<f64> = g2.projector_matrices().iter().map(|p| p.trace()).collect();
        assert!((dims[0] - 1.0).abs() < 1e-10);
        assert!((dims[1] - 7.0).abs() < 1e-10);
        assert!((dims[2] - 27.0).abs() < 1e-10);
        let s = g2.project3(g2.phi());
        assert!(close(&s.one, g2.phi(), 1e-12));
        assert!(s.seven.max_abs() < 1e-12 && s.twenty_seven.max_abs() < 1e-12);
    }

    #[test]
    fn j_of_psi() {
        let g2 = standard_g2();
        assert!(close(&g2.j_map(g2.psi()), &(g2.phi() * 0.75), 1e-12));
    }

    #[test]
    fn newton_round_trip() {
        let g2 = standard_g2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let xi = Form::random(7, 3, &mut rng);
            let xi = &xi * (0.05 / xi.coeff_norm());
            let phi = g2.phi() + &xi;
            let back = theta_inverse(&g2, &theta(&phi).unwrap()).unwrap();
            assert!(close(&back, &phi, 1e-10));
        }
    }

    #[test]
    fn newton_fails_far_away() {
        let g2 = standard_g2();
        let target = g2.psi() * -1.0;
        assert!(matches!(theta_inverse(&g2, &target), Err(G2Error::NoConvergence { .. })));
    }
}

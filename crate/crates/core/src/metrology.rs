//! Quantum Fisher information of pure Gaussian states under
//! `exp(-iλĜ)`, resource parameters, the quadratic upper bound and the
//! trace inequality behind it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::DisentangledForm;
use crate::generator::{signal_projector, Generator};
use crate::matkernel::{self, CMat, CVec, RVec};

/// Everything the QFI needs, expressed in the squeezing-mode basis.
#[derive(Debug, Clone)]
pub struct QfiWorkspace {
    pub gtilde: CMat,
    pub c: RVec,
    pub s: RVec,
    pub alpha: CVec,
}

impl QfiWorkspace {
    pub fn new(d: &DisentangledForm, gen: &Generator) -> Result<Self> {
        let m = d.n_modes();
        if gen.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: gen.dim() });
        }
        let gt = d.v.adjoint() * &gen.g * &d.v;
        let gtilde = (&gt + gt.adjoint()).scale(0.5);
        Ok(Self {
            gtilde,
            c: d.r.map(f64::cosh),
            s: d.r.map(f64::sinh),
            alpha: d.alpha.clone(),
        })
    }

    /// `𝒜_ij = α_i α_j*`.
    pub fn amat(&self) -> CMat {
        &self.alpha * self.alpha.adjoint()
    }

    /// `ℬ_ij = α_i α_j`.
    pub fn bmat(&self) -> CMat {
        &self.alpha * self.alpha.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceTriple {
    pub n_signal: f64,
    pub g_mean: f64,
    pub g_var: f64,
    /// False when `N_S` vanishes and the mean and variance are undefined.
    pub defined: bool,
}

impl ResourceTriple {
    pub fn new(n_signal: f64, g_mean: f64, g_var: f64) -> Self {
        Self { n_signal, g_mean, g_var, defined: n_signal > N_S_FLOOR }
    }

    pub fn g_std(&self) -> f64 {
        self.g_var.max(0.0).sqrt()
    }

    /// `ḡ² + Δg²`, the second moment of the intensity distribution.
    pub fn second_moment(&self) -> f64 {
        self.g_mean * self.g_mean + self.g_var
    }
}

const N_S_FLOOR: f64 = 1e-14;

pub fn resources(d: &DisentangledForm, gen: &Generator) -> Result<ResourceTriple> {
    let ws = QfiWorkspace::new(d, gen)?;
    let p = signal_projector(gen);
    let pt = d.v.adjoint() * p * &d.v;
    Ok(resources_from_workspace(&ws, &pt))
}

fn resources_from_workspace(ws: &QfiWorkspace, ptilde: &CMat) -> ResourceTriple {
    let s2 = ws.s.map(|x| x * x);
    let g2 = &ws.gtilde * &ws.gtilde;
    let weighted = |a: &CMat| -> f64 {
        let diag: f64 = (0..s2.len()).map(|j| a[(j, j)].re * s2[j]).sum();
        diag + ws.alpha.dotc(&(a * &ws.alpha)).re
    };
    let ns = weighted(ptilde);
    if ns <= N_S_FLOOR {
        return ResourceTriple { n_signal: ns.max(0.0), g_mean: 0.0, g_var: 0.0, defined: false };
    }
    let gbar = weighted(&ws.gtilde) / ns;
    let var = weighted(&g2) / ns - gbar * gbar;
    // Negative variance can only come from rounding.
    let var = if var < 0.0 { 0.0 } else { var };
    ResourceTriple { n_signal: ns, g_mean: gbar, g_var: var, defined: true }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiTerms {
    /// `Tr[G̃CSG̃*CS]`
    pub squeeze_a: f64,
    /// `Tr[G̃S²G̃C²]`
    pub squeeze_b: f64,
    /// `Tr[G̃(S²+C²)G̃𝒜]`
    pub disp: f64,
    /// `2Re Tr[G̃*SCG̃ℬ]`
    pub cross: f64,
}

impl QfiTerms {
    pub fn sum(&self) -> f64 {
        self.squeeze_a + self.squeeze_b + self.disp + self.cross
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub qfi: f64,
    pub terms: QfiTerms,
    pub resources: ResourceTriple,
    pub bound: f64,
    pub bound_satisfied: bool,
}

pub fn qfi_terms(ws: &QfiWorkspace) -> QfiTerms {
    let g = &ws.gtilde;
    let m = g.nrows();
    let cs: Vec<f64> = (0..m).map(|i| ws.c[i] * ws.s[i]).collect();
    let mut squeeze_a = 0.0;
    let mut squeeze_b = 0.0;
    for i in 0..m {
        for j in 0..m {
            let z = g[(i, j)];
            squeeze_a += (z * z).re * cs[i] * cs[j];
            squeeze_b += z.norm_sqr() * ws.s[j] * ws.s[j] * ws.c[i] * ws.c[i];
        }
    }
    let w = g * &ws.alpha;
    let mut disp = 0.0;
    let mut cross = num_complex::Complex64::new(0.0, 0.0);
    for j in 0..m {
        disp += (ws.s[j] * ws.s[j] + ws.c[j] * ws.c[j]) * w[j].norm_sqr();
        cross += w[j] * w[j] * cs[j];
    }
    QfiTerms { squeeze_a, squeeze_b, disp, cross: 2.0 * cross.re }
}

pub fn qfi(d: &DisentangledForm, gen: &Generator) -> Result<QfiReport> {
    let ws = QfiWorkspace::new(d, gen)?;
    let terms = qfi_terms(&ws);
    let value = 4.0 * terms.sum();
    let pt = d.v.adjoint() * signal_projector(gen) * &d.v;
    let res = resources_from_workspace(&ws, &pt);
    let bound = qfi_upper_bound(&res);
    Ok(QfiReport {
        qfi: value,
        terms,
        resources: res,
        bound,
        bound_satisfied: value <= bound + 1e-9 * (1.0 + bound),
    })
}

/// QFI value only.
pub fn qfi_value(d: &DisentangledForm, gen: &Generator) -> Result<f64> {
    let ws = QfiWorkspace::new(d, gen)?;
    Ok(4.0 * qfi_terms(&ws).sum())
}

/// `(8ḡ² + 4Δg²)N_S² + 8(ḡ² + Δg²)N_S`.
pub fn qfi_upper_bound(res: &ResourceTriple) -> f64 {
    if !res.defined {
        return 0.0;
    }
    let n = res.n_signal;
    let (g, v) = (res.g_mean, res.g_var);
    (8.0 * g * g + 4.0 * v) * n * n + 8.0 * (g * g + v) * n
}

/// Bound including the displacement-dependent linear term:
/// `(8ḡ² + 4Δg²)N_S² + 12(ḡ² + Δg²)N_S - 4Tr[G̃²S²]`.
pub fn qfi_upper_bound_displaced(d: &DisentangledForm, gen: &Generator) -> Result<f64> {
    let ws = QfiWorkspace::new(d, gen)?;
    let res = resources(d, gen)?;
    if !res.defined {
        return Ok(0.0);
    }
    let g2 = &ws.gtilde * &ws.gtilde;
    let tr: f64 = (0..ws.s.len()).map(|j| g2[(j, j)].re * ws.s[j] * ws.s[j]).sum();
    let n = res.n_signal;
    let (g, v) = (res.g_mean, res.g_var);
    Ok((8.0 * g * g + 4.0 * v) * n * n + 12.0 * (g * g + v) * n - 4.0 * tr)
}

/// Displaced bound minus `8 Tr[G̃𝒜G̃𝒜] = 8(α†G̃α)²`.
pub fn qfi_upper_bound_displaced_tight(d: &DisentangledForm, gen: &Generator) -> Result<f64> {
    let ws = QfiWorkspace::new(d, gen)?;
    let ag = ws.alpha.dotc(&(&ws.gtilde * &ws.alpha)).re;
    Ok(qfi_upper_bound_displaced(d, gen)? - 8.0 * ag * ag)
}

/// `4Tr[HQ]² + 4Tr[H²Q]Tr[Q] - 8Tr[HQHQ]`, nonnegative for Hermitian `H`
/// and positive semidefinite `Q`.
pub fn lemma2_gap(h: &CMat, q: &CMat) -> Result<f64> {
    matkernel::check_hermitian(h, matkernel::DEFAULT_TOL)?;
    if q.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), got: q.nrows() });
    }
    let eig = matkernel::hermitian_eig(q)?;
    let min_eig = eig.eigvals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * matkernel::max_norm(q).max(1.0) {
        return Err(Error::NotPsd { min_eig });
    }
    let hq = h * q;
    let tr_hq = matkernel::trace(&hq).re;
    let tr_h2q = matkernel::trace(&(h * &hq)).re;
    let tr_q = matkernel::trace(q).re;
    let tr_hqhq = matkernel::trace(&(&hq * &hq)).re;
    Ok(4.0 * tr_hq * tr_hq + 4.0 * tr_h2q * tr_q - 8.0 * tr_hqhq)
}

pub const DEFAULT_NS_VALUES: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

/// Fitted asymptotic coefficients of `F = (c_ḡ ḡ² + c_Δg Δg²) N_S² + O(N_S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFit {
    pub c_gbar: f64,
    pub c_dg: f64,
    /// Extrapolated `F/N_S²` for each probe setting.
    pub quadratic: Vec<f64>,
    /// Achieved `(ḡ², Δg²)` for each probe setting.
    pub moments: Vec<(f64, f64)>,
}

/// Extrapolate `F/N_S²` to `N_S → ∞` by a least-squares quadratic in `1/N_S`
/// (a line when only three points are available).
pub fn quadratic_coefficient(ns: &[f64], qfis: &[f64]) -> Result<f64> {
    if ns.len() != qfis.len() || ns.len() < 3 {
        return Err(Error::FitIllConditioned);
    }
    let degree = if ns.len() >= 4 { 2 } else { 1 };
    let rows = ns.len();
    let cols = degree + 1;
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    for k in 0..rows {
        if !(ns[k] > 0.0) {
            return Err(Error::FitIllConditioned);
        }
        let x = 1.0 / ns[k];
        for p in 0..cols {
            a[(k, p)] = x.powi(p as i32);
        }
        y[k] = qfis[k] / (ns[k] * ns[k]);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::FitIllConditioned);
    }
    let coef = svd.solve(&y, 1e-14 * smax).map_err(|_| Error::FitIllConditioned)?;
    Ok(coef[0])
}

/// Classify a probe family by its asymptotic QFI coefficients.
///
/// `builder(ḡ, Δg, N_S)` must return a probe and the generator it is
/// measured against. It is evaluated at each `(ḡ, Δg)` of `settings` (at
/// least two, with linearly independent `(ḡ², Δg²)`) and each `N_S` of
/// `ns_values`; the achieved resources, not the requested ones, enter the
/// decomposition.
pub fn optimality_coefficients<B>(builder: B, settings: &[(f64, f64)], ns_values: &[f64]) -> Result<CoefficientFit>
where
    B: Fn(f64, f64, f64) -> Result<(DisentangledForm, Generator)>,
{
    let mut distinct: Vec<f64> = ns_values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || settings.len() < 2 {
        return Err(Error::FitIllConditioned);
    }
    let mut quadratic = Vec::new();
    let mut moments = Vec::new();
    for &(gbar, dg) in settings {
        let mut ns_achieved = Vec::new();
        let mut qfis = Vec::new();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for &ns in &distinct {
            let (d, gen) = builder(gbar, dg, ns)?;
            let rep = qfi(&d, &gen)?;
            ns_achieved.push(rep.resources.n_signal);
            qfis.push(rep.qfi);
            m1 += rep.resources.g_mean.powi(2);
            m2 += rep.resources.g_var;
        }
        let k = distinct.len() as f64;
        moments.push((m1 / k, m2 / k));
        quadratic.push(quadratic_coefficient(&ns_achieved, &qfis)?);
    }
    // Least squares over all settings for (c_ḡ, c_Δg).
    let rows = settings.len();
    let a = DMatrix::from_fn(rows, 2, |i, j| if j == 0 { moments[i].0 } else { moments[i].1 });
    let y = DVector::from_vec(quadratic.clone());
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-8 * smax) {
        return Err(Error::FitIllConditioned);
    }
    let c = svd.solve(&y, 1e-14 * smax).map_err(|_| Error::FitIllConditioned)?;
    Ok(CoefficientFit { c_gbar: c[0], c_dg: c[1], quadratic, moments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::c64;
    use approx::assert_relative_eq;

    fn eigen_probe(s2: &[f64], alpha: &[f64]) -> DisentangledForm {
        let r = RVec::from_iterator(s2.len(), s2.iter().map(|x| x.sqrt().asinh()));
        let a = CVec::from_iterator(alpha.len(), alpha.iter().map(|&x| c64(x, 0.0)));
        DisentangledForm::product(a, r).unwrap()
    }

    #[test]
    fn vacuum_has_no_resources() {
        let gen = Generator::diagonal(&[1.0, 3.0]);
        let rep = qfi(&DisentangledForm::vacuum(2), &gen).unwrap();
        assert_eq!(rep.qfi, 0.0);
        assert!(!rep.resources.defined);
        assert_eq!(rep.bound, 0.0);
    }

    #[test]
    fn squeezed_eigenbasis_example() {
        let gen = Generator::diagonal(&[1.0, 3.0]);
        let d = eigen_probe(&[1.0, 1.0], &[0.0, 0.0]);
        let rep = qfi(&d, &gen).unwrap();
        assert_relative_eq!(rep.resources.n_signal, 2.0, epsilon = 1e-12);
        assert_relative_eq!(rep.resources.g_mean, 2.0, epsilon = 1e-12);
        assert_relative_eq!(rep.resources.g_var, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.qfi, 160.0, epsilon = 1e-10);
        assert_relative_eq!(rep.bound, 224.0, epsilon = 1e-10);
        assert!(rep.bound_satisfied);
    }

    #[test]
    fn coherent_example() {
        let gen = Generator::diagonal(&[1.0, 3.0]);
        let d = eigen_probe(&[0.0, 0.0], &[1.0, 1.0]);
        let rep = qfi(&d, &gen).unwrap();
        assert_relative_eq!(rep.qfi, 40.0, epsilon = 1e-12);
        let r = rep.resources;
        assert_relative_eq!(rep.qfi, 4.0 * r.second_moment() * r.n_signal, epsilon = 1e-12);
    }

    #[test]
    fn bound_examples() {
        assert_relative_eq!(qfi_upper_bound(&ResourceTriple::new(2.0, 2.0, 1.0)), 224.0);
        assert_relative_eq!(qfi_upper_bound(&ResourceTriple::new(2.0, 0.0, 1.0)), 32.0);
        assert_eq!(qfi_upper_bound(&ResourceTriple::new(0.0, 5.0, 1.0)), 0.0);
    }

    #[test]
    fn lemma2_equality_case() {
        let h = matkernel::real_diag(&RVec::from_vec(vec![1.0, -1.0]));
        let q = CMat::identity(2, 2);
        assert_relative_eq!(lemma2_gap(&h, &q).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lemma2_rejects_indefinite_q() {
        let h = CMat::identity(2, 2);
        let q = matkernel::real_diag(&RVec::from_vec(vec![1.0, -1.0]));
        assert!(matches!(lemma2_gap(&h, &q), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn quadratic_fit_recovers_polynomial() {
        let ns = [10.0, 20.0, 40.0, 80.0];
        let f: Vec<f64> = ns.iter().map(|n| 12.0 * n * n + 5.0 * n + 3.0).collect();
        assert_relative_eq!(quadratic_coefficient(&ns, &f).unwrap(), 12.0, epsilon = 1e-9);
    }
}

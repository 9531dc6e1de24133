//! Constructors for the named probe families, built in the generator's
//! eigenbasis and returned in the generator's own mode basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::DisentangledForm;
use crate::generator::Generator;
use crate::matkernel::{self, c64, CMat, CVec, RVec};
use crate::metrology::{self, ResourceTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    Optimal,
    VarianceOptimal,
    MeanOptimal,
    DerivativeDisplaced,
    IdlerAssisted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub n_signal: f64,
    #[serde(default)]
    pub target_gmean: f64,
    #[serde(default)]
    pub target_gvar: f64,
    /// Squeezing angles of the two populated eigenmodes.
    #[serde(default)]
    pub squeeze_angles: (f64, f64),
    /// Explicit eigenmode indices: `(i, j)`, or `(i, i_I, j, j_I)` for the
    /// idler-assisted kind; a single index selects the mean-optimal eigenmode
    /// or the derivative kind's base basis mode.
    #[serde(default)]
    pub mode_choice: Option<Vec<usize>>,
    /// Unit vector (generator basis) squeezed by the mean-optimal kind.
    #[serde(skip)]
    pub mode_vector: Option<CVec>,
    /// Largest accepted distance between required and available eigenvalues.
    #[serde(default = "default_spectrum_tol")]
    pub spectrum_tol: f64,
}

fn default_spectrum_tol() -> f64 {
    1e-9
}

impl ProbeSpec {
    pub fn new(kind: ProbeKind, n_signal: f64, target_gmean: f64, target_gvar: f64) -> Self {
        Self {
            kind,
            n_signal,
            target_gmean,
            target_gvar,
            squeeze_angles: (0.0, 0.0),
            mode_choice: None,
            mode_vector: None,
            spectrum_tol: default_spectrum_tol(),
        }
    }

    pub fn with_modes(mut self, modes: &[usize]) -> Self {
        self.mode_choice = Some(modes.to_vec());
        self
    }

    pub fn with_angles(mut self, phi_i: f64, phi_j: f64) -> Self {
        self.squeeze_angles = (phi_i, phi_j);
        self
    }

    pub fn with_spectrum_tol(mut self, tol: f64) -> Self {
        self.spectrum_tol = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub state: DisentangledForm,
    pub achieved: ResourceTriple,
    pub eigen_residual: f64,
    pub predicted_qfi: f64,
    /// Populated eigenmode (or basis-mode) indices.
    pub modes: Vec<usize>,
}

/// Squeezing strengths `s_i² ≤ s_j²` and required eigenvalues `g_i < g_j`
/// of the two-mode optimal probe.
pub fn optimal_parameters(n_signal: f64, gbar: f64, dg: f64) -> ((f64, f64), (f64, f64)) {
    let q = gbar / (gbar * gbar + dg * dg).sqrt();
    let si = n_signal * (1.0 - q) / 2.0;
    let sj = n_signal * (1.0 + q) / 2.0;
    let gi = gbar - dg * (sj / si).sqrt();
    let gj = gbar + dg * (si / sj).sqrt();
    ((si, sj), (gi, gj))
}

/// `8 Σ g² s²(s²+1)`, the QFI of squeezed vacua on eigenmodes.
pub fn eigenmode_squeezing_qfi(g: &[f64], s2: &[f64]) -> f64 {
    g.iter().zip(s2).map(|(g, s)| 8.0 * g * g * s * (s + 1.0)).sum()
}

/// Index of the eigenvalue closest to `target` among `allowed`; ties go to
/// the smaller index.
fn nearest(gen: &Generator, target: f64, exclude: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &g) in gen.eigvals().iter().enumerate() {
        if exclude.contains(&k) {
            continue;
        }
        let d = (g - target).abs();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best
}

fn pick_pair(gen: &Generator, spec: &ProbeSpec, gi: f64, gj: f64) -> Result<((usize, usize), f64)> {
    let eig = gen.eigvals();
    let (i, j) = match &spec.mode_choice {
        Some(m) if m.len() >= 2 => {
            let (i, j) = if m.len() >= 4 { (m[0], m[2]) } else { (m[0], m[1]) };
            if i >= gen.dim() || j >= gen.dim() || i == j {
                return Err(Error::Invalid("invalid mode choice".into()));
            }
            (i, j)
        }
        _ => {
            let idlers = if spec.kind == ProbeKind::IdlerAssisted { gen.idler_indices() } else { Vec::new() };
            let (i, _) = nearest(gen, gi, &idlers).ok_or(Error::SpectrumUnreachable { residual: f64::INFINITY })?;
            let mut excl = idlers.clone();
            excl.push(i);
            let (j, _) = nearest(gen, gj, &excl).ok_or(Error::SpectrumUnreachable { residual: f64::INFINITY })?;
            (i, j)
        }
    };
    let residual = (eig[i] - gi).abs().max((eig[j] - gj).abs());
    Ok(((i, j), residual))
}

/// Eigenbasis with the squeezing phases folded into the columns.
fn phased_eigenbasis(gen: &Generator, phases: &[(usize, f64)]) -> CMat {
    let mut v = gen.eigenvectors().clone();
    for &(k, phi) in phases {
        let ph = Complex64::from_polar(1.0, phi / 2.0);
        for n in 0..v.nrows() {
            v[(n, k)] *= ph;
        }
    }
    v
}

fn r_from_s2(s2: f64) -> f64 {
    s2.max(0.0).sqrt().asinh()
}

pub fn build_probe(spec: &ProbeSpec, gen: &Generator) -> Result<ProbeResult> {
    if !(spec.n_signal > 0.0) || !spec.n_signal.is_finite() {
        return Err(Error::Invalid("n_signal must be positive".into()));
    }
    if !(spec.target_gvar >= 0.0) {
        return Err(Error::Invalid("target_gvar must be nonnegative".into()));
    }
    match spec.kind {
        ProbeKind::Optimal if spec.target_gvar == 0.0 => {
            build_probe(&ProbeSpec { kind: ProbeKind::MeanOptimal, ..spec.clone() }, gen)
        }
        ProbeKind::Optimal => build_two_mode(spec, gen, false),
        ProbeKind::VarianceOptimal => build_two_mode(spec, gen, true),
        ProbeKind::MeanOptimal => build_mean_optimal(spec, gen),
        ProbeKind::DerivativeDisplaced => build_derivative(spec, gen),
        ProbeKind::IdlerAssisted => build_idler(spec, gen),
    }
}

fn finish(state: DisentangledForm, gen: &Generator, residual: f64, predicted: f64, modes: Vec<usize>) -> Result<ProbeResult> {
    let achieved = metrology::resources(&state, gen)?;
    Ok(ProbeResult { state, achieved, eigen_residual: residual, predicted_qfi: predicted, modes })
}

fn build_two_mode(spec: &ProbeSpec, gen: &Generator, equal: bool) -> Result<ProbeResult> {
    let n = gen.dim();
    if n < 2 {
        return Err(Error::Invalid("two-mode probe needs at least two modes".into()));
    }
    let dg = spec.target_gvar.sqrt();
    let (s2, (gi, gj)) = if equal {
        ((spec.n_signal / 2.0, spec.n_signal / 2.0), (spec.target_gmean - dg, spec.target_gmean + dg))
    } else {
        optimal_parameters(spec.n_signal, spec.target_gmean, dg)
    };
    let ((i, j), residual) = pick_pair(gen, spec, gi, gj)?;
    if !equal && residual > spec.spectrum_tol {
        return Err(Error::SpectrumUnreachable { residual });
    }
    let v = phased_eigenbasis(gen, &[(i, spec.squeeze_angles.0), (j, spec.squeeze_angles.1)]);
    let mut r = RVec::zeros(n);
    r[i] = r_from_s2(s2.0);
    r[j] = r_from_s2(s2.1);
    let eig = gen.eigvals();
    let predicted = eigenmode_squeezing_qfi(&[eig[i], eig[j]], &[s2.0, s2.1]);
    finish(DisentangledForm::new(v, CVec::zeros(n), r)?, gen, residual, predicted, vec![i, j])
}

fn build_mean_optimal(spec: &ProbeSpec, gen: &Generator) -> Result<ProbeResult> {
    let n = gen.dim();
    let (u, modes) = match (&spec.mode_vector, &spec.mode_choice) {
        (Some(u), _) => {
            if u.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: u.len() });
            }
            let norm = u.norm();
            if !(norm > 0.0) {
                return Err(Error::Invalid("mode vector must be nonzero".into()));
            }
            (u / c64(norm, 0.0), Vec::new())
        }
        (None, Some(m)) if !m.is_empty() => {
            if m[0] >= n {
                return Err(Error::Invalid("invalid mode choice".into()));
            }
            (gen.eigenvectors().column(m[0]).into_owned(), vec![m[0]])
        }
        _ => {
            let mut best = 0;
            for (k, g) in gen.eigvals().iter().enumerate() {
                if g.abs() > gen.eigvals()[best].abs() {
                    best = k;
                }
            }
            (gen.eigenvectors().column(best).into_owned(), vec![best])
        }
    };
    let u = u * Complex64::from_polar(1.0, spec.squeeze_angles.0 / 2.0);
    let v = matkernel::unitary_with_columns(&[u.clone()], n)?;
    let mut r = RVec::zeros(n);
    r[0] = r_from_s2(spec.n_signal);
    let gu = &gen.g * &u;
    let gbar = u.dotc(&gu).re;
    let second = gu.norm_squared();
    let ns = spec.n_signal;
    let predicted = 8.0 * gbar * gbar * ns * (ns + 1.0) + 4.0 * (second - gbar * gbar) * ns;
    finish(DisentangledForm::new(v, CVec::zeros(n), r)?, gen, 0.0, predicted, modes)
}

fn build_derivative(spec: &ProbeSpec, gen: &Generator) -> Result<ProbeResult> {
    let n = gen.dim();
    if n < 2 {
        return Err(Error::Invalid("derivative probe needs at least two modes".into()));
    }
    let base = spec.mode_choice.as_ref().and_then(|m| m.first().copied()).unwrap_or(0);
    if base >= n {
        return Err(Error::Invalid("invalid mode choice".into()));
    }
    let mut u0 = CVec::zeros(n);
    u0[base] = c64(1.0, 0.0);
    let gu0 = &gen.g * &u0;
    let g00 = u0.dotc(&gu0).re;
    let w = &gu0 - &u0 * c64(g00, 0.0);
    let wn = w.norm();
    let scale = gen.max_abs_eig().max(1.0);
    if wn <= 1e-12 * scale {
        return Err(Error::ConditionViolated("base mode is a generator eigenmode".into()));
    }
    let u1 = w / c64(wn, 0.0);
    let g11 = u1.dotc(&(&gen.g * &u1)).re;
    if (g00 - g11).abs() > 1e-9 * scale {
        return Err(Error::ConditionViolated(format!(
            "diagonal generator elements differ on base and derivative modes ({g00} vs {g11})"
        )));
    }
    let v = matkernel::unitary_with_columns(&[u0, u1], n)?;
    let half = spec.n_signal / 2.0;
    let mut r = RVec::zeros(n);
    r[1] = r_from_s2(half);
    let mut alpha = CVec::zeros(n);
    alpha[0] = c64(half.sqrt(), 0.0);
    let gt = v.adjoint() * &gen.g * &v;
    let (s1, c1) = (r[1].sinh(), r[1].cosh());
    let a2 = half;
    let g01 = gt[(0, 1)].norm_sqr();
    let rest: f64 = (2..n).map(|i| gt[(i, 1)].norm_sqr()).sum();
    let predicted = 4.0
        * (g00 * g00 * a2
            + 2.0 * g11 * g11 * c1 * c1 * s1 * s1
            + g01 * ((2.0 * s1 * s1 + 1.0) * a2 + s1 * s1 + 2.0 * s1 * c1 * a2))
        + 4.0 * rest * s1 * s1;
    finish(DisentangledForm::new(v, alpha, r)?, gen, 0.0, predicted, vec![base])
}

fn build_idler(spec: &ProbeSpec, gen: &Generator) -> Result<ProbeResult> {
    let n = gen.dim();
    let idlers = gen.idler_indices();
    let (ii, ji) = match &spec.mode_choice {
        Some(m) if m.len() >= 4 => (m[1], m[3]),
        _ => {
            if idlers.len() < 2 {
                return Err(Error::NoIdlerModes);
            }
            (idlers[0], idlers[1])
        }
    };
    if !gen.is_idler(ii) || !gen.is_idler(ji) || ii == ji {
        return Err(Error::NoIdlerModes);
    }
    let dg = spec.target_gvar.sqrt();
    let (s2, (gi, gj)) = if dg == 0.0 {
        ((spec.n_signal / 2.0, spec.n_signal / 2.0), (spec.target_gmean, spec.target_gmean))
    } else {
        optimal_parameters(spec.n_signal, spec.target_gmean, dg)
    };
    let ((i, j), residual) = pick_pair(gen, spec, gi, gj)?;
    if residual > spec.spectrum_tol {
        return Err(Error::SpectrumUnreachable { residual });
    }
    if [i, j].iter().any(|k| [ii, ji].contains(k)) {
        return Err(Error::Invalid("signal and idler modes must differ".into()));
    }
    // Balanced beamsplitters (θ = π/4, φ = 0) on (i, i_I) and (j, j_I).
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut mix = CMat::identity(n, n);
    for &(a, b) in &[(i, ii), (j, ji)] {
        mix[(a, a)] = c64(h, 0.0);
        mix[(a, b)] = c64(-h, 0.0);
        mix[(b, a)] = c64(h, 0.0);
        mix[(b, b)] = c64(h, 0.0);
    }
    let v = phased_eigenbasis(gen, &[(i, spec.squeeze_angles.0), (ii, spec.squeeze_angles.0), (j, spec.squeeze_angles.1), (ji, spec.squeeze_angles.1)]) * mix;
    let mut r = RVec::zeros(n);
    r[i] = r_from_s2(s2.0);
    r[ii] = r[i];
    r[j] = r_from_s2(s2.1);
    r[ji] = r[j];
    let eig = gen.eigvals();
    let predicted = eigenmode_squeezing_qfi(&[eig[i], eig[j]], &[s2.0, s2.1]);
    finish(DisentangledForm::new(v, CVec::zeros(n), r)?, gen, residual, predicted, vec![i, ii, j, ji])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn optimal_symmetric_example() {
        let gen = Generator::diagonal(&[-1.0, 1.0]);
        let p = build_probe(&ProbeSpec::new(ProbeKind::Optimal, 2.0, 0.0, 1.0), &gen).unwrap();
        assert_relative_eq!(p.predicted_qfi, 32.0, epsilon = 1e-12);
        assert_eq!(p.eigen_residual, 0.0);
        let q = metrology::qfi(&p.state, &gen).unwrap();
        assert_relative_eq!(q.qfi, 32.0, epsilon = 1e-10);
    }

    #[test]
    fn optimal_asymmetric_example() {
        let s = 2f64.sqrt();
        let gen = Generator::diagonal(&[-s, 0.5, s]);
        let p = build_probe(&ProbeSpec::new(ProbeKind::Optimal, 2.0, 1.0, 1.0), &gen).unwrap();
        assert_eq!(p.modes, vec![0, 2]);
        assert!(p.eigen_residual < 1e-14);
        assert_relative_eq!(p.predicted_qfi, 80.0, epsilon = 1e-10);
        let q = metrology::qfi(&p.state, &gen).unwrap();
        assert_relative_eq!(q.qfi, 80.0, epsilon = 1e-9);
        assert_relative_eq!(q.qfi, q.bound, epsilon = 1e-9);
    }

    #[test]
    fn unreachable_spectrum() {
        let gen = Generator::diagonal(&[-1.0, 1.0]);
        let err = build_probe(&ProbeSpec::new(ProbeKind::Optimal, 2.0, 1.0, 1.0), &gen).unwrap_err();
        assert!(matches!(err, Error::SpectrumUnreachable { .. }));
    }

    #[test]
    fn mean_optimal_single_mode() {
        let gen = Generator::diagonal(&[2.0]);
        let p = build_probe(&ProbeSpec::new(ProbeKind::MeanOptimal, 1.0, 0.0, 0.0), &gen).unwrap();
        let q = metrology::qfi(&p.state, &gen).unwrap().qfi;
        assert_relative_eq!(q, 64.0, epsilon = 1e-12);
        assert_relative_eq!(p.predicted_qfi, 64.0, epsilon = 1e-12);
    }

    #[test]
    fn idler_needs_two_idlers() {
        let gen = Generator::diagonal(&[-1.0, 0.0, 1.0]);
        let err = build_probe(&ProbeSpec::new(ProbeKind::IdlerAssisted, 2.0, 0.0, 1.0), &gen).unwrap_err();
        assert_eq!(err, Error::NoIdlerModes);
    }
}

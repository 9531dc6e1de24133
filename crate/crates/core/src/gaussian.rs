//! Pure multimode Gaussian states.
//!
//! A state is `D(β) exp(½ Σ f_nm a_n† a_m† - h.c.)|0⟩` in some mode basis
//! `{a_n}`. Takagi factorization `f = V diag(r) Vᵀ` defines the squeezing
//! modes `c_k† = Σ_n V_nk a_n†` in which the state is a product of displaced
//! single-mode squeezed vacua with displacements `α = V†β`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{self, c64, CMat, CVec, RVec};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPureState {
    pub n_modes: usize,
    pub beta: CVec,
    pub f: CMat,
    pub basis_label: String,
}

impl GaussianPureState {
    pub fn new(beta: CVec, f: CMat, basis_label: impl Into<String>) -> Result<Self> {
        let n = beta.len();
        if n == 0 {
            return Err(Error::Invalid("state needs at least one mode".into()));
        }
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.nrows().max(f.ncols()) });
        }
        if beta.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        matkernel::check_symmetric(&f, matkernel::DEFAULT_TOL)?;
        Ok(Self { n_modes: n, beta, f, basis_label: basis_label.into() })
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            n_modes: n,
            beta: CVec::zeros(n),
            f: CMat::zeros(n, n),
            basis_label: String::new(),
        }
    }
}

/// Product form: unitary `V`, squeezing-mode displacements `α`, strengths `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisentangledForm {
    pub v: CMat,
    pub alpha: CVec,
    pub r: RVec,
}

impl DisentangledForm {
    pub fn new(v: CMat, alpha: CVec, r: RVec) -> Result<Self> {
        let n = v.nrows();
        if alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
        }
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        matkernel::check_unitary(&v, 1e-9)?;
        if r.iter().any(|x| !x.is_finite()) || alpha.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if r.iter().any(|&x| x < 0.0) {
            return Err(Error::Invalid("squeezing strengths must be nonnegative".into()));
        }
        Ok(Self { v, alpha, r })
    }

    pub fn vacuum(n: usize) -> Self {
        Self { v: CMat::identity(n, n), alpha: CVec::zeros(n), r: RVec::zeros(n) }
    }

    /// Product state in the given basis (`V = I`).
    pub fn product(alpha: CVec, r: RVec) -> Result<Self> {
        let n = r.len();
        Self::new(CMat::identity(n, n), alpha, r)
    }

    pub fn n_modes(&self) -> usize {
        self.r.len()
    }

    /// Total mean photon number `Σ (sinh² r + |α|²)`.
    pub fn mean_photons(&self) -> f64 {
        self.r.iter().map(|r| r.sinh().powi(2)).sum::<f64>() + self.alpha.norm_squared()
    }

    pub fn assemble(&self, basis_label: impl Into<String>) -> GaussianPureState {
        let f = &self.v * matkernel::real_diag(&self.r) * self.v.transpose();
        let f = (&f + f.transpose()).scale(0.5);
        GaussianPureState {
            n_modes: self.n_modes(),
            beta: &self.v * &self.alpha,
            f,
            basis_label: basis_label.into(),
        }
    }

    /// Same physical state described in another mode basis: if the old modes
    /// are `a = U a'`, i.e. `a_n'† = Σ_m U_mn a_m†`, then `V' = U†V`.
    pub fn change_basis(&self, u: &CMat) -> Result<Self> {
        if u.nrows() != self.n_modes() {
            return Err(Error::DimensionMismatch { expected: self.n_modes(), got: u.nrows() });
        }
        Self::new(u.adjoint() * &self.v, self.alpha.clone(), self.r.clone())
    }
}

pub fn disentangle(state: &GaussianPureState) -> Result<DisentangledForm> {
    if state.beta.len() != state.f.nrows() {
        return Err(Error::DimensionMismatch { expected: state.f.nrows(), got: state.beta.len() });
    }
    let tk = matkernel::takagi(&state.f)?;
    let alpha = tk.v.adjoint() * &state.beta;
    DisentangledForm::new(tk.v, alpha, tk.r)
}

/// Quadrature means and covariance (vacuum `Σ = 1`), ordering `(q₁, p₁, q₂, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceForm {
    pub mean: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl CovarianceForm {
    pub fn mean_photons(&self) -> f64 {
        let n = self.sigma.nrows();
        (self.sigma.trace() - n as f64) / 4.0 + self.mean.norm_squared() / 2.0
    }
}

/// Covariance in the squeezing-mode basis `{c_k}`: blocks `diag(e^{2r}, e^{-2r})`.
pub fn to_covariance(d: &DisentangledForm) -> CovarianceForm {
    let m = d.n_modes();
    let mut mean = DVector::zeros(2 * m);
    let mut sigma = DMatrix::zeros(2 * m, 2 * m);
    let s2 = std::f64::consts::SQRT_2;
    for k in 0..m {
        mean[2 * k] = s2 * d.alpha[k].re;
        mean[2 * k + 1] = s2 * d.alpha[k].im;
        sigma[(2 * k, 2 * k)] = (2.0 * d.r[k]).exp();
        sigma[(2 * k + 1, 2 * k + 1)] = (-2.0 * d.r[k]).exp();
    }
    CovarianceForm { mean, sigma }
}

/// Covariance in the original basis `{a_n}`, obtained with the orthogonal
/// map induced by `a_n = Σ_k V_nk c_k`.
pub fn to_covariance_mode_basis(d: &DisentangledForm) -> CovarianceForm {
    let c = to_covariance(d);
    let o = quadrature_rotation(&d.v);
    CovarianceForm { mean: &o * c.mean, sigma: &o * c.sigma * o.transpose() }
}

/// Real `2M×2M` orthogonal matrix acting on interleaved quadratures.
pub fn quadrature_rotation(v: &CMat) -> DMatrix<f64> {
    let m = v.nrows();
    let mut o = DMatrix::zeros(2 * m, 2 * m);
    for n in 0..m {
        for k in 0..m {
            let z = v[(n, k)];
            o[(2 * n, 2 * k)] = z.re;
            o[(2 * n, 2 * k + 1)] = -z.im;
            o[(2 * n + 1, 2 * k)] = z.im;
            o[(2 * n + 1, 2 * k + 1)] = z.re;
        }
    }
    o
}

/// On-disk state format; complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n_modes: usize,
    pub beta: Vec<[f64; 2]>,
    pub f: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub basis_label: String,
}

impl From<&GaussianPureState> for StateFile {
    fn from(s: &GaussianPureState) -> Self {
        StateFile {
            n_modes: s.n_modes,
            beta: s.beta.iter().map(|z| [z.re, z.im]).collect(),
            f: (0..s.n_modes)
                .map(|i| (0..s.n_modes).map(|j| [s.f[(i, j)].re, s.f[(i, j)].im]).collect())
                .collect(),
            basis_label: s.basis_label.clone(),
        }
    }
}

impl TryFrom<StateFile> for GaussianPureState {
    type Error = Error;

    fn try_from(sf: StateFile) -> Result<Self> {
        let n = sf.n_modes;
        if sf.beta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sf.beta.len() });
        }
        let f = complex_matrix_from_rows(&sf.f, n)?;
        let beta = CVec::from_iterator(n, sf.beta.iter().map(|p| c64(p[0], p[1])));
        GaussianPureState::new(beta, f, sf.basis_label)
    }
}

pub(crate) fn complex_matrix_from_rows(rows: &[Vec<[f64; 2]>], n: usize) -> Result<CMat> {
    if rows.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
    }
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    Ok(CMat::from_fn(n, n, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

pub fn state_to_json(s: &GaussianPureState) -> String {
    serde_json::to_string_pretty(&StateFile::from(s)).expect("state serialization")
}

pub fn state_from_json(text: &str) -> Result<GaussianPureState> {
    let sf: StateFile = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
    sf.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_state_is_already_disentangled() {
        let f = matkernel::real_diag(&RVec::from_vec(vec![0.5, 0.1]));
        let s = GaussianPureState::new(CVec::zeros(2), f, "a").unwrap();
        let d = disentangle(&s).unwrap();
        assert!(matkernel::max_norm(&(&d.v - CMat::identity(2, 2))) < 1e-12);
        assert_relative_eq!(d.r[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(d.r[1], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn coherent_state_keeps_identity_frame() {
        let beta = CVec::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let s = GaussianPureState::new(beta.clone(), CMat::zeros(2, 2), "a").unwrap();
        let d = disentangle(&s).unwrap();
        assert_eq!(d.r, RVec::zeros(2));
        assert!((d.alpha - beta).norm() < 1e-15);
    }

    #[test]
    fn off_diagonal_squeezing_round_trip() {
        let f = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.3, 0.0), c64(0.3, 0.0), c64(0.0, 0.0)]);
        let s = GaussianPureState::new(CVec::zeros(2), f.clone(), "a").unwrap();
        let d = disentangle(&s).unwrap();
        assert_relative_eq!(d.r[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(d.r[1], 0.3, epsilon = 1e-12);
        assert!(matkernel::max_norm(&(d.assemble("a").f - f)) < 1e-9);
    }

    #[test]
    fn vacuum_and_squeezed_covariance() {
        let c = to_covariance(&DisentangledForm::vacuum(2));
        assert_eq!(c.sigma, DMatrix::identity(4, 4));
        let d = DisentangledForm::product(CVec::zeros(1), RVec::from_vec(vec![0.5])).unwrap();
        let c = to_covariance(&d);
        assert_relative_eq!(c.sigma[(0, 0)], 1f64.exp(), epsilon = 1e-14);
        assert_relative_eq!(c.sigma[(1, 1)], (-1f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn displaced_mean_quadratures() {
        let a = c64(1.0, 1.0) / std::f64::consts::SQRT_2;
        let d = DisentangledForm::product(CVec::from_vec(vec![a]), RVec::zeros(1)).unwrap();
        let c = to_covariance(&d);
        assert_relative_eq!(c.mean[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.mean[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let f = CMat::from_row_slice(2, 2, &[c64(0.1, 0.2), c64(1.0 / 3.0, -0.7), c64(1.0 / 3.0, -0.7), c64(0.0, 1e-17)]);
        let beta = CVec::from_vec(vec![c64(std::f64::consts::PI, 0.0), c64(-1e-300, 2.5)]);
        let s = GaussianPureState::new(beta, f, "freq-bins").unwrap();
        let back = state_from_json(&state_to_json(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_rejects_asymmetric_f() {
        let text = r#"{"n_modes":2,"beta":[[0,0],[0,0]],"f":[[[0,0],[1,0]],[[0,0],[0,0]]]}"#;
        assert!(matches!(state_from_json(text), Err(Error::NotSymmetric { .. })));
    }
}

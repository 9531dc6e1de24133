//! Generators of passive mode transformations `U(λ) = exp(-iλĜ)` with
//! `Ĝ = Σ G_nm a_n† a_m = Σ g_i b_i† b_i`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{self, c64, CMat, HermitianEig};

pub const DEFAULT_SIGNAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub g: CMat,
    pub eig: HermitianEig,
    /// Relative threshold below which an eigenvalue counts as an idler.
    pub signal_tol: f64,
    pub basis_label: String,
    /// Magnitude of the coupling dropped by truncating an infinite tridiagonal
    /// generator (HG basis), if any.
    pub dropped_coupling: Option<f64>,
}

impl Generator {
    pub fn from_matrix(g: CMat, signal_tol: f64) -> Result<Self> {
        if !(signal_tol >= 0.0) {
            return Err(Error::Invalid("signal_tol must be nonnegative".into()));
        }
        let eig = matkernel::hermitian_eig(&g)?;
        let g = (&g + g.adjoint()).scale(0.5);
        Ok(Self { g, eig, signal_tol, basis_label: String::new(), dropped_coupling: None })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let g = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| c64(x, 0.0)),
        ));
        Self::from_matrix(g, DEFAULT_SIGNAL_TOL).expect("real diagonal matrix is Hermitian")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.basis_label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn eigvals(&self) -> &nalgebra::DVector<f64> {
        &self.eig.eigvals
    }

    /// Columns are eigenmodes `b_i` expressed in the `a` basis.
    pub fn eigenvectors(&self) -> &CMat {
        &self.eig.vectors
    }

    pub fn max_abs_eig(&self) -> f64 {
        self.eig.eigvals.iter().fold(0.0_f64, |m, g| m.max(g.abs()))
    }

    pub fn is_idler(&self, i: usize) -> bool {
        self.eig.eigvals[i].abs() <= self.signal_tol * self.max_abs_eig()
    }

    pub fn idler_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.is_idler(i)).collect()
    }

    pub fn signal_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.is_idler(i)).collect()
    }

    /// Generator expressed in the basis `a' ` with `a = U a'`, i.e. `U†GU`.
    pub fn in_basis(&self, u: &CMat) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.nrows() });
        }
        let mut out = Self::from_matrix(u.adjoint() * &self.g * u, self.signal_tol)?;
        out.dropped_coupling = self.dropped_coupling;
        Ok(out)
    }
}

/// Projector onto the span of the signal eigenmodes.
pub fn signal_projector(gen: &Generator) -> CMat {
    let n = gen.dim();
    let mut p = CMat::zeros(n, n);
    for i in gen.signal_indices() {
        let b = gen.eig.vectors.column(i);
        p += &b * b.adjoint();
    }
    p
}

/// Uniform grid `[z_min, z_max]` split into `n_bins` bins, with its Fourier
/// dual of spacing `2π/(z_max - z_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
}

impl DiscretizationGrid {
    pub fn new(z_min: f64, z_max: f64, n_bins: usize) -> Result<Self> {
        let g = Self { z_min, z_max, n_bins, p_min: None };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.z_min.is_finite() || !self.z_max.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.z_max <= self.z_min || self.n_bins == 0 {
            return Err(Error::Invalid("grid needs z_max > z_min and n_bins >= 1".into()));
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.n_bins as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.z_max - self.z_min)
    }

    pub fn p_min(&self) -> f64 {
        self.p_min.unwrap_or(-std::f64::consts::PI / self.dz() + self.dp() / 2.0)
    }

    pub fn z_point(&self, n: usize) -> f64 {
        self.z_min + n as f64 * self.dz()
    }

    pub fn p_point(&self, k: usize) -> f64 {
        self.p_min() + k as f64 * self.dp()
    }

    /// Trapezoid nodes and weights over `[z_min, z_max]` (`n_bins + 1` nodes).
    pub fn trapezoid(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_bins;
        let h = self.dz();
        let nodes = (0..=n).map(|k| self.z_point(k)).collect();
        let weights = (0..=n).map(|k| if k == 0 || k == n { h / 2.0 } else { h }).collect();
        (nodes, weights)
    }

    pub fn refined(&self) -> Self {
        Self { n_bins: self.n_bins * 2, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftDomain {
    TimeShift,
    FrequencyShift,
    BeamDisplacement,
    BeamTilt,
}

impl ShiftDomain {
    /// Label of the basis in which the generator is diagonal.
    pub fn diagonal_basis(self) -> &'static str {
        match self {
            ShiftDomain::TimeShift => "frequency-bins",
            ShiftDomain::FrequencyShift => "time-bins",
            ShiftDomain::BeamDisplacement => "momentum-bins",
            ShiftDomain::BeamTilt => "position-bins",
        }
    }
}

/// Diagonal generator whose eigenvalues are the grid points (times
/// `physical_scale`, which is `ω/c` for tilts and 1 otherwise).
pub fn shift_generator(grid: &DiscretizationGrid, domain: ShiftDomain, physical_scale: f64) -> Result<Generator> {
    grid.validate()?;
    if !(physical_scale > 0.0) || !physical_scale.is_finite() {
        return Err(Error::Invalid("physical_scale must be positive".into()));
    }
    let vals: Vec<f64> = (0..grid.n_bins).map(|n| grid.z_point(n) * physical_scale).collect();
    Ok(Generator::diagonal(&vals).with_label(domain.diagonal_basis()))
}

/// Hermite-Gauss mode parameters: center in `z`, carrier `p`, width, phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgParams {
    pub center_z: f64,
    pub center_p: f64,
    pub sigma_z: f64,
    pub theta: f64,
}

impl HgParams {
    pub fn new(center_z: f64, center_p: f64, sigma_z: f64, theta: f64) -> Result<Self> {
        if !(sigma_z > 0.0) || !sigma_z.is_finite() {
            return Err(Error::Invalid("sigma_z must be positive".into()));
        }
        Ok(Self { center_z, center_p, sigma_z, theta })
    }
}

/// Values of the first `count` HG modes at `z`, by the stable three-term
/// recurrence on the normalized functions.
pub fn hg_modes_at(count: usize, z: f64, hg: &HgParams) -> Vec<Complex64> {
    let x = (z - hg.center_z) / (std::f64::consts::SQRT_2 * hg.sigma_z);
    let norm = (1.0 / (2.0 * std::f64::consts::PI * hg.sigma_z * hg.sigma_z)).powf(0.25);
    let mut re = Vec::with_capacity(count);
    if count > 0 {
        re.push(norm * (-0.5 * x * x).exp());
    }
    if count > 1 {
        re.push(x * std::f64::consts::SQRT_2 * re[0]);
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * re[n] - (nf / (nf + 1.0)).sqrt() * re[n - 1];
        re.push(next);
    }
    let phase = Complex64::from_polar(1.0, -hg.center_p * (z - hg.center_z) - hg.theta);
    re.into_iter().map(|v| phase * v).collect()
}

pub fn hg_mode(n: usize, z: f64, hg: &HgParams) -> Complex64 {
    hg_modes_at(n + 1, z, hg)[n]
}

/// Truncated generator of `z` shifts in the HG basis: tridiagonal with
/// `G_{n,n+1} = i√((n+1)/2)/(√2σ)` and `p₀` on the diagonal. This is the
/// generator of the family `Ψ_n(z + λ)`.
pub fn hg_generator(hg: &HgParams, m: usize) -> Result<Generator> {
    if m < 2 {
        return Err(Error::Invalid("HG generator needs at least 2 modes".into()));
    }
    HgParams::new(hg.center_z, hg.center_p, hg.sigma_z, hg.theta)?;
    let k = 1.0 / (std::f64::consts::SQRT_2 * hg.sigma_z);
    let mut g = CMat::zeros(m, m);
    for n in 0..m {
        g[(n, n)] = c64(hg.center_p, 0.0);
        if n + 1 < m {
            let w = k * ((n as f64 + 1.0) / 2.0).sqrt();
            g[(n, n + 1)] = c64(0.0, w);
            g[(n + 1, n)] = c64(0.0, -w);
        }
    }
    let mut out = Generator::from_matrix(g, DEFAULT_SIGNAL_TOL)?.with_label("hermite-gauss");
    out.dropped_coupling = Some(k * (m as f64 / 2.0).sqrt());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ModeGenerator {
    pub generator: Generator,
    /// Max-norm of the anti-Hermitian part removed by Hermitization.
    pub anti_hermitian_residual: f64,
    pub gram_deviation: f64,
}

/// Generator of a parameterized orthonormal mode family `Ψ_n(z; λ)` from
/// `G_nm = i ∫ Ψ_n* ∂_λ Ψ_m dz` (central differences, trapezoid rule).
pub fn generator_from_modes<F>(
    family: F,
    m: usize,
    lambda0: f64,
    fd_step: f64,
    grid: &DiscretizationGrid,
) -> Result<ModeGenerator>
where
    F: Fn(usize, f64, f64) -> Complex64,
{
    grid.validate()?;
    if m == 0 {
        return Err(Error::Invalid("need at least one mode".into()));
    }
    if !(fd_step > 0.0) {
        return Err(Error::Invalid("fd_step must be positive".into()));
    }
    let (nodes, weights) = grid.trapezoid();
    let sample = |lam: f64| -> Vec<Vec<Complex64>> {
        (0..m).map(|n| nodes.iter().map(|&z| family(n, z, lam)).collect()).collect()
    };
    let psi0 = sample(lambda0);
    let plus = sample(lambda0 + fd_step);
    let minus = sample(lambda0 - fd_step);

    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).zip(&weights).map(|((x, y), w)| x.conj() * y * *w).sum()
    };

    let mut gram_dev = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((inner(&psi0[i], &psi0[j]) - target).norm());
        }
    }
    if gram_dev > 1e-4 {
        return Err(Error::ModesNotOrthonormal { deviation: gram_dev });
    }

    let mut g = CMat::zeros(m, m);
    for mm in 0..m {
        let deriv: Vec<Complex64> = plus[mm]
            .iter()
            .zip(&minus[mm])
            .map(|(p, q)| (p - q) / (2.0 * fd_step))
            .collect();
        for n in 0..m {
            g[(n, mm)] = c64(0.0, 1.0) * inner(&psi0[n], &deriv);
        }
    }
    let anti = matkernel::max_norm(&(&g - g.adjoint())) / 2.0;
    let herm = (&g + g.adjoint()).scale(0.5);
    let generator = Generator::from_matrix(herm, DEFAULT_SIGNAL_TOL)?.with_label("mode-family");
    Ok(ModeGenerator { generator, anti_hermitian_residual: anti, gram_deviation: gram_dev })
}

/// On-disk generator format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    #[serde(rename = "G")]
    pub g: Vec<Vec<[f64; 2]>>,
    #[serde(default = "default_signal_tol")]
    pub signal_tol: f64,
}

fn default_signal_tol() -> f64 {
    DEFAULT_SIGNAL_TOL
}

impl From<&Generator> for GeneratorFile {
    fn from(gen: &Generator) -> Self {
        let n = gen.dim();
        GeneratorFile {
            g: (0..n).map(|i| (0..n).map(|j| [gen.g[(i, j)].re, gen.g[(i, j)].im]).collect()).collect(),
            signal_tol: gen.signal_tol,
        }
    }
}

pub fn generator_from_json(text: &str) -> Result<Generator> {
    let gf: GeneratorFile = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
    let n = gf.g.len();
    if n == 0 {
        return Err(Error::Invalid("empty generator matrix".into()));
    }
    let g = crate::gaussian::complex_matrix_from_rows(&gf.g, n)?;
    Generator::from_matrix(g, gf.signal_tol)
}

pub fn generator_to_json(gen: &Generator) -> String {
    serde_json::to_string_pretty(&GeneratorFile::from(gen)).expect("generator serialization")
}

//! Fisher information of concrete measurements: multimode homodyne (with
//! loss and thermal noise), Monte Carlo sampling, photon counting, and the
//! phase condition under which counting is optimal for the variance term.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::DisentangledForm;
use crate::generator::{signal_projector, DiscretizationGrid, Generator};
use crate::matkernel::{self, c64};
use crate::metrology;
use crate::scenarios::RegularizedModePair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSetup {
    /// Generator eigenmodes that are measured.
    pub mode_indices: Vec<usize>,
    /// Quadrature angles relative to each mode's squeezing frame at `λ = 0`;
    /// `None` selects the optimal angles for `true_param`.
    pub phases: Option<Vec<f64>>,
    pub eta: f64,
    pub sigma_env_sq: f64,
    pub true_param: f64,
}

impl HomodyneSetup {
    pub fn ideal(mode_indices: Vec<usize>) -> Self {
        Self { mode_indices, phases: None, eta: 1.0, sigma_env_sq: 1.0, true_param: 0.0 }
    }

    pub fn with_loss(mut self, eta: f64, sigma_env_sq: f64) -> Self {
        self.eta = eta;
        self.sigma_env_sq = sigma_env_sq;
        self
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Self {
        self.phases = Some(phases);
        self
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Invalid("eta must lie in (0, 1]".into()));
        }
        if !(self.sigma_env_sq >= 1.0) || !self.sigma_env_sq.is_finite() {
            return Err(Error::Invalid("sigma_env_sq must be at least 1".into()));
        }
        if !self.true_param.is_finite() {
            return Err(Error::NonFinite);
        }
        if let Some(&k) = self.mode_indices.iter().find(|&&k| k >= n_modes) {
            return Err(Error::Invalid(format!("mode index {k} out of range")));
        }
        if let Some(p) = &self.phases {
            if p.len() != self.mode_indices.len() {
                return Err(Error::DimensionMismatch { expected: self.mode_indices.len(), got: p.len() });
            }
        }
        Ok(())
    }
}

/// Environment variance for thermal occupation `n_b` mixed in with
/// transmissivity `eta`.
pub fn sigma_env_from_thermal(n_b: f64, eta: f64) -> f64 {
    if eta >= 1.0 {
        1.0
    } else {
        2.0 * n_b / (1.0 - eta) + 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomodyneResult {
    pub fi: f64,
    pub per_mode_fi: Vec<f64>,
    pub variances: Vec<f64>,
    pub phases_used: Vec<f64>,
}

/// Single-mode description of a state that is a product over generator
/// eigenmodes: strength, squeezing phase and squeezing-frame displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenmodeProduct {
    pub g: Vec<f64>,
    pub r: Vec<f64>,
    pub squeeze_phase: Vec<f64>,
    pub alpha: Vec<Complex64>,
}

pub fn eigenmode_product(d: &DisentangledForm, gen: &Generator) -> Result<EigenmodeProduct> {
    let m = d.n_modes();
    if gen.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: gen.dim() });
    }
    let w = gen.eigenvectors().adjoint() * &d.v;
    let fb = &w * matkernel::real_diag(&d.r) * w.transpose();
    let beta = &w * &d.alpha;
    let scale = 1.0 + matkernel::max_norm(&fb);
    for i in 0..m {
        for j in 0..m {
            if i != j && fb[(i, j)].norm() > 1e-9 * scale {
                return Err(Error::StateNotEigenbasisDiagonal);
            }
        }
    }
    let mut out = EigenmodeProduct { g: gen.eigvals().iter().cloned().collect(), r: vec![], squeeze_phase: vec![], alpha: vec![] };
    for n in 0..m {
        let z = fb[(n, n)];
        let psi = if z.norm() > 0.0 { z.arg() } else { 0.0 };
        out.r.push(z.norm());
        out.squeeze_phase.push(psi);
        out.alpha.push(beta[n] * Complex64::from_polar(1.0, -psi / 2.0));
    }
    Ok(out)
}

fn mode_variance(r: f64, theta: f64, eta: f64, env: f64) -> f64 {
    (eta * ((2.0 * r).cosh() + (2.0 * r).sinh() * (2.0 * theta).cos()) + (1.0 - eta) * env) / 2.0
}

/// Optimal quadrature angle for one mode.
pub fn optimal_phase(r: f64, g: f64, lambda: f64, eta: f64, env: f64) -> f64 {
    let a = eta * (2.0 * r).cosh() + (1.0 - eta) * env;
    let b = eta * (2.0 * r).sinh();
    0.5 * (b / a).clamp(-1.0, 1.0).acos() - g * lambda + std::f64::consts::FRAC_PI_2
}

/// Largest single-mode homodyne FI over the quadrature angle (variance part).
pub fn max_mode_fi(r: f64, g: f64, eta: f64, env: f64) -> f64 {
    let a = eta * (2.0 * r).cosh() + (1.0 - eta) * env;
    let b = eta * (2.0 * r).sinh();
    2.0 * eta * eta * g * g * (2.0 * r).sinh().powi(2) / (a * a - b * b)
}

pub fn homodyne_variance(
    d: &DisentangledForm,
    gen: &Generator,
    mode: usize,
    phase: f64,
    lambda: f64,
    eta: f64,
    sigma_env_sq: f64,
) -> Result<f64> {
    let ep = eigenmode_product(d, gen)?;
    if mode >= ep.r.len() {
        return Err(Error::Invalid(format!("mode index {mode} out of range")));
    }
    Ok(mode_variance(ep.r[mode], phase + lambda * ep.g[mode], eta, sigma_env_sq))
}

struct ModeModel {
    g: f64,
    r: f64,
    alpha: Complex64,
    phase: f64,
    eta: f64,
    env: f64,
}

impl ModeModel {
    fn theta(&self, lambda: f64) -> f64 {
        self.phase + lambda * self.g
    }

    fn mean(&self, lambda: f64) -> f64 {
        (2.0 * self.eta).sqrt() * (self.alpha * Complex64::from_polar(1.0, -self.theta(lambda))).re
    }

    fn variance(&self, lambda: f64) -> f64 {
        mode_variance(self.r, self.theta(lambda), self.eta, self.env)
    }

    fn fisher(&self, lambda: f64) -> f64 {
        let th = self.theta(lambda);
        let v = self.variance(lambda);
        let dv = -self.eta * self.g * (2.0 * self.r).sinh() * (2.0 * th).sin();
        let dm = (2.0 * self.eta).sqrt() * self.g * (self.alpha * Complex64::from_polar(1.0, -th)).im;
        dm * dm / v + dv * dv / (2.0 * v * v)
    }

    fn log_density(&self, x: f64, lambda: f64) -> f64 {
        let v = self.variance(lambda);
        let m = self.mean(lambda);
        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v)
    }
}

fn mode_models(d: &DisentangledForm, gen: &Generator, setup: &HomodyneSetup) -> Result<Vec<ModeModel>> {
    setup.validate(d.n_modes())?;
    let ep = eigenmode_product(d, gen)?;
    Ok(setup
        .mode_indices
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let phase = match &setup.phases {
                Some(p) => p[k],
                None => optimal_phase(ep.r[n], ep.g[n], setup.true_param, setup.eta, setup.sigma_env_sq),
            };
            ModeModel { g: ep.g[n], r: ep.r[n], alpha: ep.alpha[n], phase, eta: setup.eta, env: setup.sigma_env_sq }
        })
        .collect())
}

pub fn homodyne_fi(d: &DisentangledForm, gen: &Generator, setup: &HomodyneSetup) -> Result<HomodyneResult> {
    let models = mode_models(d, gen, setup)?;
    let lam = setup.true_param;
    let per_mode_fi: Vec<f64> = models.iter().map(|m| m.fisher(lam)).collect();
    Ok(HomodyneResult {
        fi: per_mode_fi.iter().sum(),
        per_mode_fi,
        variances: models.iter().map(|m| m.variance(lam)).collect(),
        phases_used: models.iter().map(|m| m.phase).collect(),
    })
}

/// Draws of the measured quadratures at `true_param`, one vector per mode.
pub fn sample_homodyne(
    d: &DisentangledForm,
    gen: &Generator,
    setup: &HomodyneSetup,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let models = mode_models(d, gen, setup)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam = setup.true_param;
    models
        .iter()
        .map(|m| {
            let dist = Normal::new(m.mean(lam), m.variance(lam).sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
            Ok((0..n_samples).map(|_| dist.sample(&mut rng)).collect())
        })
        .collect()
}

/// Monte Carlo Fisher information: mean squared score of the joint sample,
/// the score taken by central differences of the log-density in `λ` with the
/// measurement angles held fixed.
pub fn empirical_fi(
    d: &DisentangledForm,
    gen: &Generator,
    setup: &HomodyneSetup,
    n_samples: usize,
    seed: u64,
    fd_step: f64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    if !(fd_step > 0.0) {
        return Err(Error::Invalid("fd_step must be positive".into()));
    }
    let models = mode_models(d, gen, setup)?;
    let samples = sample_homodyne(d, gen, setup, n_samples, seed)?;
    let lam = setup.true_param;
    let mut acc = 0.0;
    for s in 0..n_samples {
        let mut score = 0.0;
        for (k, m) in models.iter().enumerate() {
            let x = samples[k][s];
            score += (m.log_density(x, lam + fd_step) - m.log_density(x, lam - fd_step)) / (2.0 * fd_step);
        }
        acc += score * score;
    }
    Ok(acc / n_samples as f64)
}

/// Counting FI through the mean-removed generator `G - ḡP_S`. Valid when the
/// probe satisfies the counting phase condition; pass `condition_verified`
/// once that has been checked (or is known analytically).
pub fn direct_detection_fi(d: &DisentangledForm, gen: &Generator, condition_verified: bool) -> Result<f64> {
    if !condition_verified {
        return Err(Error::ConditionNotVerified);
    }
    let res = metrology::resources(d, gen)?;
    if !res.defined {
        return Ok(0.0);
    }
    let shifted = &gen.g - signal_projector(gen) * c64(res.g_mean, 0.0);
    let gen2 = Generator::from_matrix((&shifted + shifted.adjoint()).scale(0.5), gen.signal_tol)?;
    metrology::qfi_value(d, &gen2)
}

/// Two-photon amplitude `g(z+a, z̃+a)` of the mean-shifted regularized pair
/// and its `a`-derivative, plus the sum of term magnitudes.
fn pair_amplitude(pair: &RegularizedModePair, z: f64, zt: f64, a: f64) -> (Complex64, Complex64, f64) {
    let s2 = [pair.r.0.sinh().powi(2), pair.r.1.sinh().powi(2)];
    let total = s2[0] + s2[1];
    let pbar = if total > 0.0 { (s2[0] * pair.center_p.0 + s2[1] * pair.center_p.1) / total } else { 0.0 };
    let sig = pair.sigma_z;
    let norm = (1.0 / (2.0 * std::f64::consts::PI * sig * sig)).powf(0.25);
    let comps = [
        (pair.r.0.tanh(), pair.center_z.0, pair.center_p.0 - pbar, pair.theta.0),
        (pair.r.1.tanh(), pair.center_z.1, pair.center_p.1 - pbar, pair.theta.1),
    ];
    let mut g = c64(0.0, 0.0);
    let mut dg = c64(0.0, 0.0);
    let mut mag = 0.0;
    for &(t, zc, p, th) in &comps {
        let phi = |x: f64| -> (Complex64, Complex64) {
            let v = norm * (-(x - zc).powi(2) / (4.0 * sig * sig)).exp() * Complex64::from_polar(1.0, -p * (x - zc) - th);
            let dv = v * c64(-(x - zc) / (2.0 * sig * sig), -p);
            (v, dv)
        };
        let (f1, d1) = phi(z + a);
        let (f2, d2) = phi(zt + a);
        let term = f1 * f2 * (t / 2.0);
        g += term;
        dg += (d1 * f2 + f1 * d2) * (t / 2.0);
        mag += term.norm();
    }
    (g, dg, mag)
}

/// Largest `|∂_a arg g(z+a, z̃+a)|` over grid points and shifts, ignoring
/// points where the amplitude (nearly) cancels and its phase is undefined.
pub fn counting_condition_check(
    pair: &RegularizedModePair,
    grid: &DiscretizationGrid,
    shift_samples: &[f64],
) -> Result<(f64, bool)> {
    grid.validate()?;
    pair.validate()?;
    let nodes: Vec<f64> = (0..=grid.n_bins).map(|k| grid.z_point(k)).collect();
    let mut worst = 0.0_f64;
    for &a in shift_samples {
        for &z in &nodes {
            for &zt in &nodes {
                let (g, dg, mag) = pair_amplitude(pair, z, zt, a);
                let n2 = g.norm_sqr();
                if g.norm() < 1e-12f64.max(1e-4 * mag) {
                    continue;
                }
                let d_arg = (g.conj() * dg).im / n2;
                worst = worst.max(d_arg.abs());
            }
        }
    }
    Ok((worst, worst < 1e-6))
}

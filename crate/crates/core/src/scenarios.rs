//! Time, frequency, beam-displacement and beam-tilt estimation with probes
//! built from two narrow Gaussian modes.
//!
//! A pair of Gaussian modes `Φ±,0` (HG ground modes with their own centers
//! and carriers) is squeezed with strengths `r±`. Its Schmidt modes mix the
//! two ground modes by an angle `χ`; higher HG levels of each Gaussian couple
//! in through the shift generator. The truncated model keeps `n_hg_levels`
//! levels per Gaussian and neglects cross overlaps beyond the ground level.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::DisentangledForm;
use crate::generator::{hg_generator, hg_modes_at, DiscretizationGrid, Generator, HgParams, ShiftDomain, DEFAULT_SIGNAL_TOL};
use crate::matkernel::{c64, CMat, CVec, RVec};
use crate::measurement::{self, HomodyneSetup};
use crate::metrology::{self, ResourceTriple};
use crate::optimal::{self, ProbeKind, ProbeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizedModePair {
    pub center_z: (f64, f64),
    pub center_p: (f64, f64),
    pub sigma_z: f64,
    pub theta: (f64, f64),
    /// `(r₊, r₋)`.
    pub r: (f64, f64),
}

fn r_of(s2: f64) -> f64 {
    s2.max(0.0).sqrt().asinh()
}

impl RegularizedModePair {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_z > 0.0) || !self.sigma_z.is_finite() {
            return Err(Error::Invalid("sigma_z must be positive".into()));
        }
        if !(self.r.0 >= 0.0 && self.r.1 >= 0.0) {
            return Err(Error::Invalid("squeezing strengths must be nonnegative".into()));
        }
        let all = [self.center_z.0, self.center_z.1, self.center_p.0, self.center_p.1, self.theta.0, self.theta.1];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Equal squeezing on carriers `p₀ ± δ` at a common center `z₀`.
    pub fn variance_optimal(z0: f64, p0: f64, delta: f64, sigma_z: f64, n_signal: f64) -> Self {
        let r = r_of(n_signal / 2.0);
        Self { center_z: (z0, z0), center_p: (p0 + delta, p0 - delta), sigma_z, theta: (0.0, 0.0), r: (r, r) }
    }

    /// Weighted squeezing with carriers `p₀ + δ₊` and `p₀ - δ₋` chosen so the
    /// weighted mean carrier stays at `p₀`, for spread parameter `Δ > 0`.
    pub fn optimal(z0: f64, p0: f64, spread: f64, sigma_z: f64, n_signal: f64) -> Self {
        let ((s_minus, s_plus), _) = optimal::optimal_parameters(n_signal, p0, spread);
        let d_plus = spread * (s_minus / s_plus).sqrt();
        let d_minus = spread * (s_plus / s_minus).sqrt();
        Self {
            center_z: (z0, z0),
            center_p: (p0 + d_plus, p0 - d_minus),
            sigma_z,
            theta: (0.0, 0.0),
            r: (r_of(s_plus), r_of(s_minus)),
        }
    }

    /// Same pair described in the Fourier-dual domain.
    pub fn fourier_dual(&self) -> Self {
        Self {
            center_z: self.center_p,
            center_p: self.center_z,
            sigma_z: 1.0 / (2.0 * self.sigma_z),
            ..*self
        }
    }

    pub fn hg_params(&self, which: usize) -> HgParams {
        let (z, p, th) = if which == 0 {
            (self.center_z.0, self.center_p.0, self.theta.0)
        } else {
            (self.center_z.1, self.center_p.1, self.theta.1)
        };
        HgParams { center_z: z, center_p: p, sigma_z: self.sigma_z, theta: th }
    }

    /// `|𝒮|` for two Gaussians of equal width.
    pub fn overlap_magnitude(&self) -> f64 {
        let dz = self.center_z.0 - self.center_z.1;
        let dp = self.center_p.0 - self.center_p.1;
        let s = self.sigma_z;
        (-dz * dz / (8.0 * s * s) - dp * dp * s * s / 2.0).exp()
    }

    pub fn signal_photons(&self) -> (f64, f64) {
        (self.r.0.sinh().powi(2), self.r.1.sinh().powi(2))
    }
}

/// `𝒮 = ∫ Φ₊,₀* Φ₋,₀ dz` by the trapezoid rule.
pub fn mode_overlap(pair: &RegularizedModePair, grid: &DiscretizationGrid) -> Result<Complex64> {
    pair.validate()?;
    grid.validate()?;
    let reach = 4.0 * pair.sigma_z;
    for zc in [pair.center_z.0, pair.center_z.1] {
        if zc - reach < grid.z_min || zc + reach > grid.z_max {
            return Err(Error::Invalid("grid must cover 8 sigma around both centers".into()));
        }
    }
    let integrate = |g: &DiscretizationGrid| -> Complex64 {
        let (nodes, w) = g.trapezoid();
        let (a, b) = (pair.hg_params(0), pair.hg_params(1));
        nodes
            .iter()
            .zip(&w)
            .map(|(&z, &w)| hg_modes_at(1, z, &a)[0].conj() * hg_modes_at(1, z, &b)[0] * w)
            .sum()
    };
    let coarse = integrate(grid);
    let fine = integrate(&grid.refined());
    let change = (fine.norm() - coarse.norm()).abs();
    if change > 1e-8 {
        return Err(Error::GridTooCoarse { change });
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchmidtPairResult {
    pub r1: f64,
    pub r2: f64,
    pub chi: f64,
    pub overlap: (f64, f64),
}

/// Schmidt strengths and mixing angle of `r₊Φ₊Φ₊ᵀ + r₋Φ₋Φ₋ᵀ` for overlap
/// magnitude `S`; `χ ∈ [0, π/2]`.
pub fn schmidt_pair(r_plus: f64, r_minus: f64, overlap_mag: f64) -> Result<SchmidtPairResult> {
    if !(0.0..=1.0).contains(&overlap_mag) {
        return Err(Error::Invalid("overlap magnitude must lie in [0, 1]".into()));
    }
    let s = overlap_mag;
    let root = (4.0 * r_minus * r_plus * s * s + (r_plus - r_minus).powi(2)).sqrt();
    let r1 = 0.5 * (r_minus + r_plus + root);
    let r2 = 0.5 * (r_minus + r_plus - root);
    let num = 2.0 * r_minus * s * (1.0 - s * s).sqrt();
    let den = r_plus - r_minus + 2.0 * r_minus * s * s;
    let chi = 0.5 * num.atan2(den);
    Ok(SchmidtPairResult { r1, r2, chi, overlap: (s, 0.0) })
}

fn default_levels() -> usize {
    3
}

fn default_max_overlap() -> f64 {
    1e-3
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub ns_values: Vec<f64>,
    #[serde(default)]
    pub eta_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ShiftDomain,
    pub pair: RegularizedModePair,
    pub n_signal: f64,
    #[serde(default = "default_scale")]
    pub physical_scale: f64,
    #[serde(default = "default_levels")]
    pub n_hg_levels: usize,
    #[serde(default = "default_max_overlap")]
    pub max_overlap: f64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

impl ScenarioConfig {
    pub fn new(kind: ShiftDomain, pair: RegularizedModePair, n_signal: f64) -> Self {
        Self {
            kind,
            pair,
            n_signal,
            physical_scale: 1.0,
            n_hg_levels: default_levels(),
            max_overlap: default_max_overlap(),
            sweep: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pair.validate()?;
        if !(self.physical_scale > 0.0) || !self.physical_scale.is_finite() {
            return Err(Error::Invalid("physical_scale must be positive".into()));
        }
        if self.kind != ShiftDomain::BeamTilt && self.physical_scale != 1.0 {
            return Err(Error::Invalid("physical_scale applies to beam tilts only".into()));
        }
        if !(self.n_signal > 0.0) {
            return Err(Error::Invalid("n_signal must be positive".into()));
        }
        Ok(())
    }

    /// Generator-side view: eigenvalue-like carriers, HG width, scale.
    fn generator_view(&self) -> ((f64, f64), f64, f64) {
        let p = &self.pair;
        match self.kind {
            ShiftDomain::TimeShift | ShiftDomain::BeamDisplacement => (p.center_p, p.sigma_z, 1.0),
            ShiftDomain::FrequencyShift => (p.center_z, 1.0 / (2.0 * p.sigma_z), 1.0),
            ShiftDomain::BeamTilt => (p.center_z, 1.0 / (2.0 * p.sigma_z), self.physical_scale),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegularizedProbe {
    pub state: DisentangledForm,
    pub generator: Generator,
    pub resources: ResourceTriple,
    pub schmidt: SchmidtPairResult,
}

/// Probe and truncated generator in the Schmidt basis
/// `(Ψ₁, Ψ₂, Φ₊,₁, Φ₋,₁, Φ₊,₂, Φ₋,₂, …)`.
pub fn build_regularized_probe(cfg: &ScenarioConfig, n_hg_levels: usize) -> Result<RegularizedProbe> {
    cfg.validate()?;
    if n_hg_levels < 2 {
        return Err(Error::Invalid("need at least two HG levels".into()));
    }
    let overlap = cfg.pair.overlap_magnitude();
    if overlap >= cfg.max_overlap {
        return Err(Error::RegularizationPoor { overlap });
    }
    let schmidt = schmidt_pair(cfg.pair.r.0, cfg.pair.r.1, overlap)?;
    let ((c_plus, c_minus), sigma, scale) = cfg.generator_view();
    let m = 2 * n_hg_levels;
    let k = scale / (std::f64::consts::SQRT_2 * sigma);
    let mut g = CMat::zeros(m, m);
    for level in 0..n_hg_levels {
        for (chain, centre) in [(0usize, c_plus), (1usize, c_minus)] {
            let idx = 2 * level + chain;
            g[(idx, idx)] = c64(scale * centre, 0.0);
            if level + 1 < n_hg_levels {
                let w = k * ((level as f64 + 1.0) / 2.0).sqrt();
                let nxt = idx + 2;
                g[(idx, nxt)] = c64(0.0, w);
                g[(nxt, idx)] = c64(0.0, -w);
            }
        }
    }
    let (cs, sn) = (schmidt.chi.cos(), schmidt.chi.sin());
    let mut rot = CMat::identity(m, m);
    rot[(0, 0)] = c64(cs, 0.0);
    rot[(1, 0)] = c64(-sn, 0.0);
    rot[(0, 1)] = c64(sn, 0.0);
    rot[(1, 1)] = c64(cs, 0.0);
    let gt = rot.transpose() * g * &rot;
    let mut generator = Generator::from_matrix(gt, DEFAULT_SIGNAL_TOL)?.with_label("schmidt");
    generator.dropped_coupling = Some(k * (n_hg_levels as f64 / 2.0).sqrt());
    let mut r = RVec::zeros(m);
    r[0] = schmidt.r1;
    r[1] = schmidt.r2.max(0.0);
    let state = DisentangledForm::new(CMat::identity(m, m), CVec::zeros(m), r)?;
    let resources = metrology::resources(&state, &generator)?;
    Ok(RegularizedProbe { state, generator, resources, schmidt })
}

/// Closed-form QFI of squeezed vacua in the lowest two HG modes with
/// squeezing phases differing by `phase_diff`.
pub fn hg_product_qfi(s0_sq: f64, s1_sq: f64, p0: f64, sigma_z: f64, phase_diff: f64) -> Result<f64> {
    if !(s0_sq >= 0.0 && s1_sq >= 0.0) {
        return Err(Error::Invalid("photon numbers must be nonnegative".into()));
    }
    if !(sigma_z > 0.0) {
        return Err(Error::Invalid("sigma_z must be positive".into()));
    }
    let (c0, c1) = ((s0_sq + 1.0).sqrt(), (s1_sq + 1.0).sqrt());
    let (s0, s1) = (s0_sq.sqrt(), s1_sq.sqrt());
    let sig2 = sigma_z * sigma_z;
    Ok(8.0 * p0 * p0 * (c0 * c0 * s0_sq + c1 * c1 * s1_sq)
        + (c1 * c1 * s0_sq + (c0 * c0 + 2.0) * s1_sq - 2.0 * c0 * c1 * s0 * s1 * phase_diff.cos()) / sig2)
}

/// The same probe as a Gaussian state with the truncated HG generator
/// (`levels ≥ 3`), for evaluation by the general engine.
pub fn hg_product_state(s0_sq: f64, s1_sq: f64, phases: (f64, f64), hg: &HgParams, levels: usize) -> Result<(DisentangledForm, Generator)> {
    let gen = hg_generator(hg, levels)?;
    let mut v = CMat::identity(levels, levels);
    v[(0, 0)] = Complex64::from_polar(1.0, phases.0 / 2.0);
    v[(1, 1)] = Complex64::from_polar(1.0, phases.1 / 2.0);
    let mut r = RVec::zeros(levels);
    r[0] = r_of(s0_sq);
    r[1] = r_of(s1_sq);
    Ok((DisentangledForm::new(v, CVec::zeros(levels), r)?, gen))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub probe_kind: String,
    pub eta: f64,
    pub n_signal: f64,
    pub g_mean: f64,
    pub g_std: f64,
    pub qfi: f64,
    pub bound: f64,
    pub coherent_baseline: f64,
    pub homodyne_fi: f64,
    pub direct_fi: f64,
}

fn row(kind: &str, eta: f64, d: &DisentangledForm, gen: &Generator, homodyne: bool, direct: bool) -> Result<ScenarioRow> {
    let rep = metrology::qfi(d, gen)?;
    let res = rep.resources;
    let homodyne_fi = if homodyne {
        let modes: Vec<usize> = (0..gen.dim()).collect();
        measurement::homodyne_fi(d, gen, &HomodyneSetup::ideal(modes).with_loss(eta, 1.0))?.fi
    } else {
        f64::NAN
    };
    let direct_fi = if direct { measurement::direct_detection_fi(d, gen, true)? } else { f64::NAN };
    Ok(ScenarioRow {
        probe_kind: kind.to_string(),
        eta,
        n_signal: res.n_signal,
        g_mean: res.g_mean,
        g_std: res.g_std(),
        qfi: rep.qfi,
        bound: rep.bound,
        coherent_baseline: 4.0 * res.second_moment() * res.n_signal,
        homodyne_fi,
        direct_fi,
    })
}

/// Sweep over probe families, photon numbers and transmissivities.
///
/// Ideal probes use a two-point (or one-point) spectrum at the carriers the
/// pair implies; regularized probes use the truncated Schmidt-basis model.
/// Homodyne and counting columns are `NaN` where not applicable.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ScenarioRow>> {
    cfg.validate()?;
    let sweep = cfg.sweep.clone().unwrap_or(Sweep { ns_values: vec![], eta_values: vec![] });
    let ns_values = if sweep.ns_values.is_empty() { vec![cfg.n_signal] } else { sweep.ns_values.clone() };
    let etas = if sweep.eta_values.is_empty() { vec![1.0] } else { sweep.eta_values.clone() };
    if etas.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::Invalid("eta values must lie in (0, 1]".into()));
    }
    let ((c_plus, c_minus), sigma, scale) = cfg.generator_view();
    let p0 = scale * (c_plus + c_minus) / 2.0;
    let spread = scale * (c_plus - c_minus).abs() / 2.0;
    let hg = HgParams::new(0.0, p0, sigma / scale, 0.0)?;
    let levels = cfg.n_hg_levels.max(3);

    let mut rows = Vec::new();
    for &ns in &ns_values {
        if !(ns > 0.0) {
            return Err(Error::Invalid("photon numbers must be positive".into()));
        }
        for &eta in &etas {
            let two = Generator::diagonal(&[p0 - spread, p0 + spread]);
            let a = c64((ns / 2.0).sqrt(), 0.0);
            let coherent = DisentangledForm::product(CVec::from_vec(vec![a, a]), RVec::zeros(2))?;
            rows.push(row("coherent", eta, &coherent, &two, true, false)?);

            let one = Generator::diagonal(&[p0]);
            let mo = optimal::build_probe(&ProbeSpec::new(ProbeKind::MeanOptimal, ns, p0, 0.0), &one)?;
            rows.push(row("mean-optimal", eta, &mo.state, &one, true, false)?);

            let chain = hg_generator(&hg, levels)?;
            let dd = optimal::build_probe(&ProbeSpec::new(ProbeKind::DerivativeDisplaced, ns, p0, 0.0), &chain)?;
            rows.push(row("derivative-displaced", eta, &dd.state, &chain, false, false)?);

            if spread > 0.0 {
                let vo = optimal::build_probe(&ProbeSpec::new(ProbeKind::VarianceOptimal, ns, p0, spread * spread), &two)?;
                rows.push(row("variance-optimal", eta, &vo.state, &two, true, true)?);

                let ((_, _), (gi, gj)) = optimal::optimal_parameters(ns, p0, spread);
                let opt_gen = Generator::diagonal(&[gi, gj]);
                let op = optimal::build_probe(&ProbeSpec::new(ProbeKind::Optimal, ns, p0, spread * spread), &opt_gen)?;
                rows.push(row("optimal", eta, &op.state, &opt_gen, true, false)?);

                let mut reg_cfg = cfg.clone();
                reg_cfg.pair = regularized_pair_for(cfg, ns, false);
                // Equal strengths, common center, matched phases: the counting
                // condition holds analytically.
                let rv = build_regularized_probe(&reg_cfg, levels)?;
                rows.push(row("regularized-variance-optimal", eta, &rv.state, &rv.generator, false, true)?);

                reg_cfg.pair = regularized_pair_for(cfg, ns, true);
                let ro = build_regularized_probe(&reg_cfg, levels)?;
                rows.push(row("regularized-optimal", eta, &ro.state, &ro.generator, false, false)?);
            }
        }
    }
    Ok(rows)
}

/// Pair for the requested family with the carriers of `cfg` placed in the
/// generator-side variable.
fn regularized_pair_for(cfg: &ScenarioConfig, ns: f64, weighted: bool) -> RegularizedModePair {
    let ((c_plus, c_minus), _, _) = cfg.generator_view();
    let mid = (c_plus + c_minus) / 2.0;
    let half = (c_plus - c_minus).abs() / 2.0;
    let sigma = cfg.pair.sigma_z;
    match cfg.kind {
        ShiftDomain::TimeShift | ShiftDomain::BeamDisplacement => {
            let z0 = (cfg.pair.center_z.0 + cfg.pair.center_z.1) / 2.0;
            if weighted {
                RegularizedModePair::optimal(z0, mid, half, sigma, ns)
            } else {
                RegularizedModePair::variance_optimal(z0, mid, half, sigma, ns)
            }
        }
        // Carriers live in the z slot for the dual domains.
        ShiftDomain::FrequencyShift | ShiftDomain::BeamTilt => {
            let p0 = (cfg.pair.center_p.0 + cfg.pair.center_p.1) / 2.0;
            let built = if weighted {
                RegularizedModePair::optimal(p0, mid, half, sigma, ns)
            } else {
                RegularizedModePair::variance_optimal(p0, mid, half, sigma, ns)
            };
            RegularizedModePair { center_z: built.center_p, center_p: built.center_z, ..built }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schmidt_limits() {
        let s = schmidt_pair(0.7, 0.3, 0.0).unwrap();
        assert_relative_eq!(s.r1, 0.7, epsilon = 1e-15);
        assert_relative_eq!(s.r2, 0.3, epsilon = 1e-15);
        assert_eq!(s.chi, 0.0);
        let r = 0.4;
        let s = schmidt_pair(r, r, 0.2).unwrap();
        assert_relative_eq!(s.r1, r * 1.2, epsilon = 1e-14);
        assert_relative_eq!(s.r2, r * 0.8, epsilon = 1e-14);
        assert_relative_eq!(s.chi, 0.5 * 0.2f64.acos(), epsilon = 1e-14);
    }

    #[test]
    fn hg_product_examples() {
        let sig = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(hg_product_qfi(1.0, 1.0, 1.0, sig, std::f64::consts::PI).unwrap(), 52.0, epsilon = 1e-12);
        assert_relative_eq!(hg_product_qfi(1.0, 1.0, 0.0, sig, std::f64::consts::PI).unwrap(), 20.0, epsilon = 1e-12);
        assert_eq!(hg_product_qfi(0.0, 0.0, 3.0, 0.2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn poor_regularization_is_rejected() {
        let pair = RegularizedModePair::variance_optimal(0.0, 0.0, 0.1, 1.0, 2.0);
        let cfg = ScenarioConfig::new(ShiftDomain::TimeShift, pair, 2.0);
        assert!(matches!(build_regularized_probe(&cfg, 3), Err(Error::RegularizationPoor { .. })));
    }
}

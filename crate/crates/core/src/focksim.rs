//! Brute-force oracle in a truncated Fock space (at most three modes).
//!
//! Single-mode displacement and squeezing are matrix exponentials in a padded
//! single-mode space. Passive mode mixing (the state's `V`, the evolution
//! `exp(-iλĜ)` and measurement-basis changes) is applied exactly through the
//! action `a_k† ↦ Σ_n U_nk a_n†`, sector by sector in total photon number, so
//! truncating at a total of `cutoff` photons commutes with every passive step.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::DisentangledForm;
use crate::generator::Generator;
use crate::matkernel::{self, c64, CMat};

pub const MAX_MODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Maximum total photon number kept.
    pub cutoff: usize,
    pub fd_step: f64,
    pub tail_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { cutoff: 20, fd_step: 1e-5, tail_tol: 1e-12 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 1 {
            return Err(Error::Invalid("cutoff must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Invalid("fd_step must be positive".into()));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::Invalid("tail_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Amplitudes on the product lattice `{0..=cutoff}^M` (mode 0 most
/// significant); entries with total photon number above `cutoff` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FockStateVector {
    pub n_modes: usize,
    pub cutoff: usize,
    pub amplitudes: Vec<Complex64>,
    pub norm_deficit: f64,
}

impl FockStateVector {
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Self {
        let mut amplitudes = vec![c64(0.0, 0.0); (cutoff + 1).pow(n_modes as u32)];
        amplitudes[0] = c64(1.0, 0.0);
        Self { n_modes, cutoff, amplitudes, norm_deficit: 0.0 }
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * (self.cutoff + 1) + n)
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0; self.n_modes];
        for k in (0..self.n_modes).rev() {
            occ[k] = idx % (self.cutoff + 1);
            idx /= self.cutoff + 1;
        }
        occ
    }

    pub fn amplitude(&self, occ: &[usize]) -> Complex64 {
        self.amplitudes[self.index(occ)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mean_photons(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * self.occupation(i).iter().sum::<usize>() as f64)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    fn renormalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for z in &mut self.amplitudes {
                *z /= n;
            }
        }
    }
}

/// Truncated single-mode ladder operator in dimension `dim`.
fn annihilation(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c64((n as f64).sqrt(), 0.0);
    }
    a
}

/// `D(α)S(r)|0⟩` with `S(r) = exp(r/2 (a†² - a²))`, computed as exponentials
/// of truncated Hermitian generators in a padded space, then cut to `keep`
/// levels.
pub fn single_mode_state(alpha: Complex64, r: f64, keep: usize) -> Result<Vec<Complex64>> {
    let pad = 40.max(keep);
    let dim = keep + pad;
    let a = annihilation(dim);
    let ad = a.adjoint();
    let i = c64(0.0, 1.0);
    let h_sq = ((&ad * &ad) - (&a * &a)) * (i * (r / 2.0));
    let h_disp = ((&ad * alpha) - (&a * alpha.conj())) * i;
    let mut v = nalgebra::DVector::<Complex64>::zeros(dim);
    v[0] = c64(1.0, 0.0);
    if r != 0.0 {
        v = matkernel::unitary_exp(&h_sq, 1.0)? * v;
    }
    if alpha.norm() != 0.0 {
        v = matkernel::unitary_exp(&h_disp, 1.0)? * v;
    }
    Ok(v.iter().take(keep).cloned().collect())
}

/// Sector bookkeeping for the exact passive-transformation action.
struct Sectors {
    /// States of each total photon number, as occupation tuples.
    states: Vec<Vec<Vec<usize>>>,
}

impl Sectors {
    fn new(n_modes: usize, cutoff: usize) -> Self {
        let mut states = vec![Vec::new(); cutoff + 1];
        let mut occ = vec![0usize; n_modes];
        loop {
            let tot: usize = occ.iter().sum();
            if tot <= cutoff {
                states[tot].push(occ.clone());
            }
            let mut k = n_modes;
            loop {
                if k == 0 {
                    return Self { states };
                }
                k -= 1;
                if occ[k] < cutoff {
                    occ[k] += 1;
                    break;
                }
                occ[k] = 0;
            }
        }
    }
}

/// Apply the passive unitary `Û` with `Û a_k† Û† = Σ_n U_nk a_n†`.
pub fn apply_passive(psi: &FockStateVector, u: &CMat) -> Result<FockStateVector> {
    let m = psi.n_modes;
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: u.nrows() });
    }
    let cut = psi.cutoff;
    let sectors = Sectors::new(m, cut);
    let mut out = FockStateVector { amplitudes: vec![c64(0.0, 0.0); psi.amplitudes.len()], ..psi.clone() };
    // Local index of each state inside its sector.
    let mut local = vec![usize::MAX; psi.amplitudes.len()];
    for sec in &sectors.states {
        for (j, occ) in sec.iter().enumerate() {
            local[psi.index(occ)] = j;
        }
    }
    out.amplitudes[0] = psi.amplitudes[0];
    // Images of the basis states of the previous sector, in sector coordinates.
    let mut prev_images: Vec<Vec<Complex64>> = vec![vec![c64(1.0, 0.0)]];
    for n in 1..=cut {
        let sec = &sectors.states[n];
        let prev_sec = &sectors.states[n - 1];
        let mut images = Vec::with_capacity(sec.len());
        for occ in sec {
            let k = (0..m).rev().find(|&k| occ[k] > 0).expect("nonzero occupation");
            let mut parent = occ.clone();
            parent[k] -= 1;
            let pimg = &prev_images[local[psi.index(&parent)]];
            let mut img = vec![c64(0.0, 0.0); sec.len()];
            let scale = 1.0 / (occ[k] as f64).sqrt();
            for (pl, amp) in pimg.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let mut target = prev_sec[pl].clone();
                for j in 0..m {
                    let coef = u[(j, k)];
                    if coef.norm_sqr() == 0.0 {
                        continue;
                    }
                    target[j] += 1;
                    let t = local[psi.index(&target)];
                    img[t] += amp * coef * ((target[j] as f64).sqrt() * scale);
                    target[j] -= 1;
                }
            }
            let w = psi.amplitudes[psi.index(occ)];
            if w.norm_sqr() != 0.0 {
                for (t, z) in img.iter().enumerate() {
                    let idx = psi.index(&sec[t]);
                    out.amplitudes[idx] += w * z;
                }
            }
            images.push(img);
        }
        prev_images = images;
    }
    Ok(out)
}

pub fn fock_build(d: &DisentangledForm, cfg: &OracleConfig) -> Result<FockStateVector> {
    cfg.validate()?;
    let m = d.n_modes();
    if m > MAX_MODES {
        return Err(Error::TooManyModes(m));
    }
    let cut = cfg.cutoff;
    let per_mode: Vec<Vec<Complex64>> =
        (0..m).map(|k| single_mode_state(d.alpha[k], d.r[k], cut + 1)).collect::<Result<_>>()?;
    let mut psi = FockStateVector::vacuum(m, cut);
    psi.amplitudes[0] = c64(0.0, 0.0);
    let mut kept = 0.0;
    for idx in 0..psi.amplitudes.len() {
        let occ = psi.occupation(idx);
        if occ.iter().sum::<usize>() > cut {
            continue;
        }
        let z = occ.iter().enumerate().fold(c64(1.0, 0.0), |acc, (k, &n)| acc * per_mode[k][n]);
        psi.amplitudes[idx] = z;
        kept += z.norm_sqr();
    }
    let deficit = (1.0 - kept).max(0.0);
    if deficit > cfg.tail_tol {
        return Err(Error::TailTooLarge { deficit });
    }
    psi.norm_deficit = deficit;
    psi.renormalize();
    let mut out = apply_passive(&psi, &d.v)?;
    out.norm_deficit = deficit;
    Ok(out)
}

/// `Σ K_nm a_n† a_m` applied to `psi`.
pub fn apply_quadratic(psi: &FockStateVector, k: &CMat) -> Vec<Complex64> {
    let m = psi.n_modes;
    let mut out = vec![c64(0.0, 0.0); psi.amplitudes.len()];
    for (idx, amp) in psi.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut occ = psi.occupation(idx);
        for b in 0..m {
            if occ[b] == 0 {
                continue;
            }
            let lower = (occ[b] as f64).sqrt();
            occ[b] -= 1;
            for a in 0..m {
                let coef = k[(a, b)];
                if coef.norm_sqr() == 0.0 {
                    continue;
                }
                occ[a] += 1;
                let raise = (occ[a] as f64).sqrt();
                out[psi.index(&occ)] += amp * coef * (lower * raise);
                occ[a] -= 1;
            }
            occ[b] += 1;
        }
    }
    out
}

/// `4(⟨Ĝ²⟩ - ⟨Ĝ⟩²)`.
pub fn fock_qfi(psi: &FockStateVector, gen: &Generator) -> Result<f64> {
    if psi.n_modes > MAX_MODES {
        return Err(Error::TooManyModes(psi.n_modes));
    }
    if gen.dim() != psi.n_modes {
        return Err(Error::DimensionMismatch { expected: psi.n_modes, got: gen.dim() });
    }
    let gpsi = apply_quadratic(psi, &gen.g);
    let mean: Complex64 = psi.amplitudes.iter().zip(&gpsi).map(|(a, b)| a.conj() * b).sum();
    let norm = psi.norm_sqr();
    let mu = mean.re / norm;
    // Centered form avoids cancellation between ⟨Ĝ²⟩ and ⟨Ĝ⟩².
    let var: f64 = gpsi
        .iter()
        .zip(&psi.amplitudes)
        .map(|(g, a)| (g - a * mu).norm_sqr())
        .sum::<f64>()
        / norm;
    Ok(4.0 * var)
}

/// `exp(-iλĜ)|ψ⟩`.
pub fn fock_evolve(psi: &FockStateVector, gen: &Generator, lambda: f64) -> Result<FockStateVector> {
    let u = matkernel::unitary_exp(&gen.g, lambda)?;
    apply_passive(psi, &u)
}

/// QFI of `(|N,0⟩ + |0,N⟩)/√2` under `diag(g_min, g_max)`.
pub fn fock_superposition_qfi(n_cut: usize, g_min: f64, g_max: f64) -> Result<f64> {
    if n_cut < 1 {
        return Err(Error::Invalid("n_cut must be at least 1".into()));
    }
    let mut psi = FockStateVector::vacuum(2, n_cut);
    psi.amplitudes[0] = c64(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i1 = psi.index(&[n_cut, 0]);
    let i2 = psi.index(&[0, n_cut]);
    psi.amplitudes[i1] = c64(h, 0.0);
    psi.amplitudes[i2] = c64(h, 0.0);
    fock_qfi(&psi, &Generator::diagonal(&[g_min, g_max]))
}

/// Classical Fisher information of photon counting in the modes
/// `e_j = Σ_n R_nj a_n` (identity when `basis_rotation` is `None`), by central
/// differences of the outcome probabilities.
pub fn fock_counting_fi<B>(psi_builder: B, basis_rotation: Option<&CMat>, lambda0: f64, cfg: &OracleConfig) -> Result<f64>
where
    B: Fn(f64) -> Result<FockStateVector>,
{
    cfg.validate()?;
    let probs = |lam: f64| -> Result<Vec<f64>> {
        let psi = psi_builder(lam)?;
        if psi.n_modes > MAX_MODES {
            return Err(Error::TooManyModes(psi.n_modes));
        }
        let rotated = match basis_rotation {
            Some(r) => apply_passive(&psi, &r.adjoint())?,
            None => psi,
        };
        let norm = rotated.norm_sqr();
        Ok(rotated.probabilities().into_iter().map(|p| p / norm).collect())
    };
    let h = cfg.fd_step;
    let p0 = probs(lambda0)?;
    let pp = probs(lambda0 + h)?;
    let pm = probs(lambda0 - h)?;
    let mut fi = 0.0;
    for k in 0..p0.len() {
        if p0[k] < 1e-14 {
            continue;
        }
        let dp = (pp[k] - pm[k]) / (2.0 * h);
        fi += dp * dp / p0[k];
    }
    Ok(fi)
}

use clap::ValueEnum;
use gaussmet::focksim::{fock_build, fock_qfi, OracleConfig};
use gaussmet::matkernel::{c64, random_hermitian, random_unitary, CMat, CVec, RVec};
use gaussmet::metrology::{lemma2_gap, qfi};
use gaussmet::{DisentangledForm, Generator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Suite {
    Bound,
    Oracle,
    Lemma2,
    All,
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub trials: usize,
    pub passed: bool,
    pub failures: usize,
    pub worst: f64,
    pub summary: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Per-trial generator seeded by `seed + trial`, so results do not depend
/// on the thread count.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64))
}

/// `(qfi - bound)/(1 + bound)` for a random state and generator.
fn bound_trial(seed: u64, t: usize) -> gaussmet::Result<f64> {
    let mut rng = trial_rng(seed, t);
    let m = rng.random_range(1..=8);
    let amp = [0.0, 0.3, 1.0, 3.0][rng.random_range(0..4)];
    let r = RVec::from_fn(m, |_, _| rng.random_range(0.0..1.5));
    let alpha = CVec::from_fn(m, |_, _| c64(rng.random_range(-amp..=amp), rng.random_range(-amp..=amp)));
    let d = DisentangledForm::new(random_unitary(&mut rng, m), alpha, r)?;
    let gen = Generator::from_matrix(random_hermitian(&mut rng, m), 1e-12)?;
    let rep = qfi(&d, &gen)?;
    Ok((rep.qfi - rep.bound) / (1.0 + rep.bound))
}

/// Relative difference between Fock-space and closed-form QFI.
fn oracle_trial(seed: u64, t: usize) -> gaussmet::Result<f64> {
    let mut rng = trial_rng(seed, t);
    let m = rng.random_range(1..=3);
    let r = RVec::from_fn(m, |_, _| rng.random_range(0.0..0.05f64).sqrt().asinh());
    let alpha = CVec::from_fn(m, |_, _| {
        let mag = rng.random_range(0.0..0.5f64).sqrt() / (m as f64).sqrt();
        Complex64::from_polar(mag, rng.random_range(0.0..std::f64::consts::TAU))
    });
    let d = DisentangledForm::new(random_unitary(&mut rng, m), alpha, r)?;
    let gen = Generator::from_matrix(random_hermitian(&mut rng, m), 1e-12)?;
    let psi = fock_build(&d, &OracleConfig { cutoff: 24, ..OracleConfig::default() })?;
    let exact = fock_qfi(&psi, &gen)?;
    let engine = qfi(&d, &gen)?.qfi;
    Ok((exact - engine).abs() / engine.abs().max(1e-300))
}

fn lemma2_trial(seed: u64, t: usize) -> gaussmet::Result<f64> {
    let mut rng = trial_rng(seed, t);
    let m = rng.random_range(1..=8);
    let h = random_hermitian(&mut rng, m);
    let a = CMat::from_fn(m, m, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    lemma2_gap(&h, &(&a * a.adjoint()))
}

fn run_suite<F>(name: &'static str, trials: usize, seed: u64, trial: F, minimize: bool, tol: f64) -> Result<SuiteReport, CliError>
where
    F: Fn(u64, usize) -> gaussmet::Result<f64> + Sync,
{
    let values = (0..trials).into_par_iter().map(|t| trial(seed, t)).collect::<gaussmet::Result<Vec<f64>>>()?;
    let (worst, failures) = if minimize {
        (values.iter().copied().fold(f64::INFINITY, f64::min), values.iter().filter(|&&v| v < -tol).count())
    } else {
        (values.iter().copied().fold(f64::NEG_INFINITY, f64::max), values.iter().filter(|&&v| v > tol).count())
    };
    let summary = match name {
        "bound" => format!("qfi ≤ bound + 1e-9(1+bound); worst excess {worst:.3e}"),
        "oracle" => format!("relative error ≤ 1e-6; worst {worst:.3e}"),
        _ => format!("min gap ≥ −1e-9; min {worst:.3e}"),
    };
    Ok(SuiteReport { suite: name, trials, passed: failures == 0 && trials > 0, failures, worst, summary })
}

pub fn run(suite: Suite, trials: usize, seed: u64) -> Result<Report, CliError> {
    let mut suites = Vec::new();
    if matches!(suite, Suite::Bound | Suite::All) {
        suites.push(run_suite("bound", trials, seed, bound_trial, false, 1e-9)?);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        suites.push(run_suite("oracle", trials, seed, oracle_trial, false, 1e-6)?);
    }
    if matches!(suite, Suite::Lemma2 | Suite::All) {
        suites.push(run_suite("lemma2", trials, seed, lemma2_trial, true, 1e-9)?);
    }
    let passed = suites.iter().all(|s| s.passed);
    Ok(Report { seed, passed, suites })
}

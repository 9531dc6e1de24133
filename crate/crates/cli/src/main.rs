//! `gaussmet` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid input, 4 failed
//! verification. JSON goes to stdout unless `--out` is given.

mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaussmet::gaussian::{disentangle, state_from_json, state_to_json};
use gaussmet::generator::{generator_from_json, ShiftDomain};
use gaussmet::measurement::{empirical_fi, homodyne_fi, sigma_env_from_thermal, HomodyneSetup};
use gaussmet::metrology::qfi;
use gaussmet::optimal::{build_probe, ProbeKind, ProbeSpec};
use gaussmet::scenarios::{run_scenario, ScenarioConfig, ScenarioRow, Sweep};
use gaussmet::{DisentangledForm, Generator};
use rayon::prelude::*;
use serde_json::json;

use crate::output::Precision;

#[derive(Parser, Debug)]
#[command(name = "gaussmet", version, about = "Fisher information and optimal Gaussian probes for mode-parameter estimation")]
struct Cli {
    /// Print floats with 17 significant digits instead of 12.
    #[arg(long, global = true)]
    full_precision: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// QFI, resources and bound of a state under a generator.
    Qfi {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct a probe state for target resources.
    BuildState {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        ns: f64,
        #[arg(long, default_value_t = 0.0)]
        gbar: f64,
        #[arg(long, default_value_t = 0.0)]
        dg: f64,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Eigenmode indices, comma separated.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.0)]
        phi_i: f64,
        #[arg(long, default_value_t = 0.0)]
        phi_j: f64,
        #[arg(long, default_value_t = 1e-9)]
        spectrum_tol: f64,
    },
    /// Homodyne Fisher information, optionally with a Monte Carlo estimate.
    Homodyne {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Thermal occupation of the loss channel's environment.
        #[arg(long, default_value_t = 0.0)]
        nb: f64,
        /// `auto` or comma-separated quadrature angles.
        #[arg(long, default_value = "auto")]
        phases: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Measured eigenmodes, comma separated (default: all).
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep probe families for a time, frequency or beam scenario.
    Scenario {
        #[arg(long, value_enum)]
        kind: DomainArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized checks of the bound, the Fock oracle and the trace inequality.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: verify::Suite,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    Optimal,
    VarianceOptimal,
    MeanOptimal,
    Derivative,
    Idler,
}

impl From<KindArg> for ProbeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Optimal => ProbeKind::Optimal,
            KindArg::VarianceOptimal => ProbeKind::VarianceOptimal,
            KindArg::MeanOptimal => ProbeKind::MeanOptimal,
            KindArg::Derivative => ProbeKind::DerivativeDisplaced,
            KindArg::Idler => ProbeKind::IdlerAssisted,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DomainArg {
    TimeShift,
    FrequencyShift,
    BeamDisplacement,
    BeamTilt,
}

impl From<DomainArg> for ShiftDomain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::TimeShift => ShiftDomain::TimeShift,
            DomainArg::FrequencyShift => ShiftDomain::FrequencyShift,
            DomainArg::BeamDisplacement => ShiftDomain::BeamDisplacement,
            DomainArg::BeamTilt => ShiftDomain::BeamTilt,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Verification(String),
}

impl From<gaussmet::Error> for CliError {
    fn from(e: gaussmet::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> CliResult<DisentangledForm> {
    let s = state_from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(disentangle(&s)?)
}

fn load_generator(path: &Path) -> CliResult<Generator> {
    generator_from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => output::write_atomic(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var("GAUSSMET_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Input(format!("GAUSSMET_THREADS must be a nonnegative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn cmd_qfi(state: &Path, generator: &Path, out: Option<&Path>, prec: Precision) -> CliResult<()> {
    let d = load_state(state)?;
    let gen = load_generator(generator)?;
    let rep = qfi(&d, &gen)?;
    let value = serde_json::to_value(rep).expect("report serialization");
    emit(&output::json(value, prec), out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_build_state(
    kind: KindArg,
    ns: f64,
    gbar: f64,
    dg: f64,
    generator: &Path,
    out: &Path,
    modes: Option<Vec<usize>>,
    angles: (f64, f64),
    spectrum_tol: f64,
    prec: Precision,
) -> CliResult<()> {
    if !(dg >= 0.0) {
        return Err(CliError::Input("--dg must be nonnegative".into()));
    }
    let gen = load_generator(generator)?;
    let mut spec =
        ProbeSpec::new(kind.into(), ns, gbar, dg * dg).with_angles(angles.0, angles.1).with_spectrum_tol(spectrum_tol);
    if let Some(m) = &modes {
        spec = spec.with_modes(m);
    }
    let probe = build_probe(&spec, &gen)?;
    let rep = qfi(&probe.state, &gen)?;
    let state_text = state_to_json(&probe.state.assemble(gen.basis_label.clone()));
    let report = json!({
        "kind": spec.kind,
        "achieved": probe.achieved,
        "eigen_residual": probe.eigen_residual,
        "predicted_qfi": probe.predicted_qfi,
        "qfi": rep.qfi,
        "bound": rep.bound,
        "modes": probe.modes,
        "state_file": out.display().to_string(),
    });
    output::write_atomic(out, &state_text)?;
    println!("{}", output::json(report, prec));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_homodyne(
    state: &Path,
    generator: &Path,
    eta: f64,
    nb: f64,
    phases: &str,
    lambda: f64,
    modes: Option<Vec<usize>>,
    samples: Option<usize>,
    seed: u64,
    prec: Precision,
) -> CliResult<()> {
    if !(nb >= 0.0) {
        return Err(CliError::Input("--nb must be nonnegative".into()));
    }
    let d = load_state(state)?;
    let gen = load_generator(generator)?;
    let modes = modes.unwrap_or_else(|| (0..gen.dim()).collect());
    let mut setup = HomodyneSetup::ideal(modes).with_loss(eta, sigma_env_from_thermal(nb, eta));
    setup.true_param = lambda;
    if phases.trim() != "auto" {
        let list = phases
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Input(format!("cannot parse --phases {phases:?}")))?;
        setup = setup.with_phases(list);
    }
    let res = homodyne_fi(&d, &gen, &setup)?;
    let mut value = serde_json::to_value(&res).expect("result serialization");
    if let Some(n) = samples {
        let emp = empirical_fi(&d, &gen, &setup, n, seed, 1e-4)?;
        value["empirical_fi"] = json!(emp);
        value["samples"] = json!(n);
        value["seed"] = json!(seed);
    }
    emit(&output::json(value, prec), None)
}

fn cmd_scenario(kind: DomainArg, config: &Path, out: Option<&Path>, prec: Precision) -> CliResult<()> {
    let text = read(config)?;
    let mut raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", config.display())))?;
    let obj = raw.as_object_mut().ok_or_else(|| CliError::Input("scenario config must be a JSON object".into()))?;
    let flag = serde_json::to_value(ShiftDomain::from(kind)).expect("domain serialization");
    if let Some(k) = obj.get("kind") {
        if *k != flag {
            return Err(CliError::Input(format!("config kind {k} disagrees with --kind {flag}")));
        }
    }
    obj.insert("kind".into(), flag);
    let cfg: ScenarioConfig =
        serde_json::from_value(raw).map_err(|e| CliError::Input(format!("{}: {e}", config.display())))?;
    cfg.validate()?;
    // Rows for different photon numbers are independent.
    let sweep = cfg.sweep.clone().unwrap_or(Sweep { ns_values: vec![], eta_values: vec![] });
    let ns_values = if sweep.ns_values.is_empty() { vec![cfg.n_signal] } else { sweep.ns_values.clone() };
    let parts: Vec<gaussmet::Result<Vec<ScenarioRow>>> = pool()?.install(|| {
        ns_values
            .par_iter()
            .map(|&ns| {
                let mut one = cfg.clone();
                one.sweep = Some(Sweep { ns_values: vec![ns], eta_values: sweep.eta_values.clone() });
                run_scenario(&one)
            })
            .collect()
    });
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    emit(&output::csv(&rows, prec)?, out)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let prec = if cli.full_precision { Precision::Full } else { Precision::Standard };
    match cli.command {
        Command::Qfi { state, generator, out } => cmd_qfi(&state, &generator, out.as_deref(), prec),
        Command::BuildState { kind, ns, gbar, dg, generator, out, modes, phi_i, phi_j, spectrum_tol } => {
            cmd_build_state(kind, ns, gbar, dg, &generator, &out, modes, (phi_i, phi_j), spectrum_tol, prec)
        }
        Command::Homodyne { state, generator, eta, nb, phases, lambda, modes, samples, seed } => {
            cmd_homodyne(&state, &generator, eta, nb, &phases, lambda, modes, samples, seed, prec)
        }
        Command::Scenario { kind, config, out } => cmd_scenario(kind, &config, out.as_deref(), prec),
        Command::Verify { suite, trials, seed } => {
            let report = pool()?.install(|| verify::run(suite, trials, seed))?;
            println!("{}", output::json(serde_json::to_value(&report).expect("report serialization"), prec));
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Verification("verification failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}

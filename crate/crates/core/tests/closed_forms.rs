use gaussmet::focksim::{fock_build, fock_qfi, OracleConfig};
use gaussmet::generator::{hg_generator, HgParams};
use gaussmet::matkernel::{c64, CVec};
use gaussmet::metrology::qfi;
use gaussmet::optimal::{build_probe, optimal_parameters, ProbeKind, ProbeSpec};
use gaussmet::Generator;

fn mean_optimal_qfi(g: f64, ns: f64) -> f64 {
    let gen = Generator::diagonal(&[g]);
    let p = build_probe(&ProbeSpec::new(ProbeKind::MeanOptimal, ns, g, 0.0), &gen).unwrap();
    qfi(&p.state, &gen).unwrap().qfi
}

#[test]
fn squeezed_eigenmode_qfi_is_eight_g_squared_n_n_plus_one() {
    for &(g, ns) in &[(2.0, 1.0), (0.5, 3.0), (-1.5, 0.2)] {
        let f = mean_optimal_qfi(g, ns);
        assert!((f - 8.0 * g * g * ns * (ns + 1.0)).abs() < 1e-10 * f);
    }
    assert!((mean_optimal_qfi(2.0, 1.0) - 64.0).abs() < 1e-10);
    let gen = Generator::diagonal(&[2.0]);
    let p = build_probe(&ProbeSpec::new(ProbeKind::MeanOptimal, 0.05, 2.0, 0.0), &gen).unwrap();
    let psi = fock_build(&p.state, &OracleConfig { cutoff: 40, ..OracleConfig::default() }).unwrap();
    assert!((fock_qfi(&psi, &gen).unwrap() - 8.0 * 4.0 * 0.05 * 1.05).abs() < 1e-9);
}

/// The form `8ḡ²N² + 4(ḡ²+Δg²)N` with its worked value 48 at g = 2, N = 1.
/// Both the engine and the Fock oracle give 64 here.
#[test]
#[ignore = "stated mean-optimal linear term disagrees with the exact QFI"]
fn stated_mean_optimal_form() {
    let (g, ns) = (2.0, 1.0);
    assert!((mean_optimal_qfi(g, ns) - (8.0 * g * g * ns * ns + 4.0 * g * g * ns)).abs() < 1e-9);
}

#[test]
fn mean_optimal_superposition_adds_four_delta_g_squared_n() {
    let gen = Generator::diagonal(&[0.5, 2.5]);
    let mut spec = ProbeSpec::new(ProbeKind::MeanOptimal, 3.0, 1.5, 0.0);
    let (a, b) = (0.6f64, 0.8f64);
    spec.mode_vector = Some(CVec::from_vec(vec![c64(a, 0.0), c64(b, 0.0)]));
    let p = build_probe(&spec, &gen).unwrap();
    let rep = qfi(&p.state, &gen).unwrap();
    let gbar = a * a * 0.5 + b * b * 2.5;
    let var = a * a * 0.25 + b * b * 6.25 - gbar * gbar;
    let expected = 8.0 * gbar * gbar * 3.0 * 4.0 + 4.0 * var * 3.0;
    assert!((rep.qfi - expected).abs() < 1e-10 * expected);
    assert!((p.predicted_qfi - expected).abs() < 1e-10 * expected);
}

#[test]
fn derivative_prediction_matches_engine_beyond_the_invariant_pair() {
    let hg = HgParams::new(0.0, 0.7, 0.9, 0.0).unwrap();
    for m in [2, 3, 6] {
        let gen = hg_generator(&hg, m).unwrap();
        for ns in [0.5, 10.0, 300.0] {
            let p = build_probe(&ProbeSpec::new(ProbeKind::DerivativeDisplaced, ns, 0.7, 0.0), &gen).unwrap();
            let f = qfi(&p.state, &gen).unwrap().qfi;
            assert!((f - p.predicted_qfi).abs() < 1e-9 * f, "m {m} ns {ns}: {f} vs {}", p.predicted_qfi);
        }
    }
}

#[test]
fn idler_assisted_probe_reproduces_its_prediction() {
    for ns in [1.0, 6.0] {
        let (_, (gi, gj)) = optimal_parameters(ns, 1.0, 0.5);
        let gen = Generator::diagonal(&[0.0, 0.0, gi, gj]);
        let p = build_probe(&ProbeSpec::new(ProbeKind::IdlerAssisted, ns, 1.0, 0.25), &gen).unwrap();
        let rep = qfi(&p.state, &gen).unwrap();
        assert!((rep.qfi - p.predicted_qfi).abs() < 1e-9 * rep.qfi);
        assert!((rep.resources.n_signal - ns).abs() < 1e-9 * ns);
        assert!((rep.qfi - rep.bound).abs() < 1e-9 * rep.bound);
    }
}

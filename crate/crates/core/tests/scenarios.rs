use gaussmet::generator::{hg_generator, DiscretizationGrid, HgParams, ShiftDomain};
use gaussmet::matkernel::{c64, hermitian_eig, CMat};
use gaussmet::metrology::{qfi, quadratic_coefficient};
use gaussmet::optimal::{build_probe, ProbeKind, ProbeSpec};
use gaussmet::scenarios::{
    build_regularized_probe, mode_overlap, run_scenario, schmidt_pair, RegularizedModePair, ScenarioConfig, Sweep,
};
use gaussmet::Generator;

fn qfi_of(cfg: &ScenarioConfig) -> f64 {
    let p = build_regularized_probe(cfg, 3).unwrap();
    qfi(&p.state, &p.generator).unwrap().qfi
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn frequency_shift_of_the_dual_pair_matches_time_shift() {
    for ns in [1.0, 7.0, 40.0] {
        let pair = RegularizedModePair::variance_optimal(0.4, 1.2, 0.9, 3.5, ns);
        let t = qfi_of(&ScenarioConfig::new(ShiftDomain::TimeShift, pair, ns));
        let f = qfi_of(&ScenarioConfig::new(ShiftDomain::FrequencyShift, pair.fourier_dual(), ns));
        assert!(close(t, f, 1e-12), "{t} vs {f}");
    }
}

#[test]
fn beam_scenarios_mirror_time_and_frequency() {
    let pair = RegularizedModePair::optimal(0.0, 0.8, 1.1, 3.0, 9.0);
    let t = qfi_of(&ScenarioConfig::new(ShiftDomain::TimeShift, pair, 9.0));
    let x = qfi_of(&ScenarioConfig::new(ShiftDomain::BeamDisplacement, pair, 9.0));
    assert!(close(t, x, 1e-12));

    // Tilt with wavenumber k acts like a frequency shift in the variable k·x.
    let k = 2.5;
    let spatial = RegularizedModePair {
        center_z: (-2.0, 2.2),
        center_p: (0.0, 0.0),
        sigma_z: 0.3,
        theta: (0.0, 0.0),
        r: (0.9, 0.9),
    };
    let mut tilt = ScenarioConfig::new(ShiftDomain::BeamTilt, spatial, 1.0);
    tilt.physical_scale = k;
    let temporal = RegularizedModePair {
        center_z: (k * spatial.center_z.0, k * spatial.center_z.1),
        sigma_z: k * spatial.sigma_z,
        ..spatial
    };
    let freq = ScenarioConfig::new(ShiftDomain::FrequencyShift, temporal, 1.0);
    assert!(close(qfi_of(&tilt), qfi_of(&freq), 1e-12));
}

#[test]
fn regularized_variance_optimal_resources() {
    let (p0, delta, sigma) = (1.3, 0.7, 4.0);
    let pair = RegularizedModePair::variance_optimal(0.0, p0, delta, sigma, 6.0);
    let probe = build_regularized_probe(&ScenarioConfig::new(ShiftDomain::TimeShift, pair, 6.0), 3).unwrap();
    let r = probe.resources;
    let (wi, wj) = pair.center_p;
    assert!((r.n_signal - 6.0).abs() < 1e-9);
    assert!(((wi + wj) / 2.0 - r.g_mean).abs() < 1e-9);
    let width2 = 1.0 / (4.0 * sigma * sigma);
    assert!(((wj - wi).powi(2) / 4.0 - (r.g_var - width2)).abs() < 1e-9);
}

#[test]
fn well_separated_pairs_are_variance_optimal_in_both_domains() {
    let sigma = 1.0;
    let ns_values = [10.0f64, 20.0, 40.0, 80.0];
    let mut coef = [Vec::new(), Vec::new()];
    let mut expected = [0.0; 2];
    let mut ns_ach = [Vec::new(), Vec::new()];
    for &ns in &ns_values {
        let r = (ns / 2.0).sqrt().asinh();
        let pair = RegularizedModePair {
            center_z: (-6.0, 6.0),
            center_p: (4.0, -2.0),
            sigma_z: sigma,
            theta: (0.0, 0.0),
            r: (r, r),
        };
        for (k, kind) in [ShiftDomain::TimeShift, ShiftDomain::FrequencyShift].into_iter().enumerate() {
            let p = build_regularized_probe(&ScenarioConfig::new(kind, pair, ns), 3).unwrap();
            let rep = qfi(&p.state, &p.generator).unwrap();
            let res = rep.resources;
            let width2 = if kind == ShiftDomain::TimeShift { 1.0 / (4.0 * sigma * sigma) } else { sigma * sigma };
            expected[k] = 4.0 * (res.g_mean.powi(2) + res.g_var - width2);
            coef[k].push(rep.qfi);
            ns_ach[k].push(res.n_signal);
        }
    }
    for k in 0..2 {
        let c = quadratic_coefficient(&ns_ach[k], &coef[k]).unwrap();
        assert!((c - expected[k]).abs() <= 1e-4 * expected[k], "domain {k}: {c} vs {}", expected[k]);
    }
}

#[test]
fn schmidt_pair_matches_direct_eigendecomposition() {
    let (rm, s) = (0.35, 0.1);
    let rp = 2.0 * rm;
    let q = (1.0f64 - s * s).sqrt();
    let a = CMat::from_row_slice(
        2,
        2,
        &[c64(rp + rm * s * s, 0.0), c64(rm * s * q, 0.0), c64(rm * s * q, 0.0), c64(rm * q * q, 0.0)],
    );
    let e = hermitian_eig(&a).unwrap();
    let sp = schmidt_pair(rp, rm, s).unwrap();
    assert!((sp.r1 - e.eigvals[1]).abs() < 1e-12);
    assert!((sp.r2 - e.eigvals[0]).abs() < 1e-12);
    let v = e.vectors.column(1);
    assert!((v[0].norm() - sp.chi.cos()).abs() < 1e-12);
    assert!((v[1].norm() - sp.chi.sin()).abs() < 1e-12);
}

#[test]
fn numerical_overlap_matches_the_gaussian_formula() {
    let pair = RegularizedModePair {
        center_z: (-0.5, 0.6),
        center_p: (0.3, -0.4),
        sigma_z: 0.8,
        theta: (0.2, 1.0),
        r: (0.5, 0.5),
    };
    let grid = DiscretizationGrid::new(-8.0, 8.0, 400).unwrap();
    let s = mode_overlap(&pair, &grid).unwrap();
    assert!((s.norm() - pair.overlap_magnitude()).abs() < 1e-10);
    let coarse = DiscretizationGrid::new(-8.0, 8.0, 8).unwrap();
    assert!(mode_overlap(&pair, &coarse).is_err());
}

#[test]
fn single_gaussian_reduces_to_a_squeezed_hg_mode() {
    let sigma = 0.6;
    let hg = HgParams::new(0.0, 0.0, sigma, 0.0).unwrap();
    let gen = hg_generator(&hg, 4).unwrap();
    for ns in [0.5, 4.0] {
        let p = build_probe(&ProbeSpec::new(ProbeKind::MeanOptimal, ns, 0.0, 0.0).with_modes(&[0]), &Generator::diagonal(&[0.0, 1.0, 2.0, 3.0]))
            .unwrap();
        let rep = qfi(&p.state, &gen).unwrap();
        let dg2 = 1.0 / (4.0 * sigma * sigma);
        assert!((rep.resources.g_var - dg2).abs() < 1e-12);
        // Squeezed ground mode: zero mean, linear term only.
        assert!(close(rep.qfi, 4.0 * dg2 * ns, 1e-12), "{}", rep.qfi);
    }
}

#[test]
fn sweep_rows_cover_all_probe_families() {
    let pair = RegularizedModePair::variance_optimal(0.0, 1.5, 1.0, 3.0, 10.0);
    let mut cfg = ScenarioConfig::new(ShiftDomain::TimeShift, pair, 10.0);
    cfg.sweep = Some(Sweep { ns_values: vec![10.0, 100.0], eta_values: vec![0.4, 1.0] });
    let rows = run_scenario(&cfg).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 7);
    for row in &rows {
        assert!(row.qfi <= row.bound * (1.0 + 1e-9) + 1e-9, "{row:?}");
        match row.probe_kind.as_str() {
            "coherent" => assert!(close(row.qfi, row.coherent_baseline, 1e-12)),
            "optimal" => assert!(close(row.qfi, row.bound, 1e-9)),
            "variance-optimal" if row.eta == 1.0 => assert!(close(row.homodyne_fi, row.qfi, 1e-9)),
            _ => {}
        }
    }
    let at = |kind: &str| rows.iter().find(|r| r.probe_kind == kind && r.n_signal > 50.0 && r.eta == 1.0).unwrap().qfi;
    assert!(at("coherent") < at("variance-optimal"));
    assert!(at("variance-optimal") < at("optimal"));
}

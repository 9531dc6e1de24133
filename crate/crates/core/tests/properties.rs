use gaussmet::gaussian::{
    disentangle, state_from_json, state_to_json, to_covariance, to_covariance_mode_basis, DisentangledForm,
};
use gaussmet::generator::{generator_from_modes, hg_generator, hg_mode, DiscretizationGrid, Generator, HgParams};
use gaussmet::matkernel::{
    c64, hermitian_eig, max_norm, random_hermitian, random_unitary, takagi, unitary_exp, unitary_log, unitary_residual,
    CMat, CVec, RVec,
};
use gaussmet::metrology::{qfi, qfi_upper_bound_displaced, qfi_upper_bound_displaced_tight, resources};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng, m: usize, amp: f64) -> DisentangledForm {
    let r = RVec::from_fn(m, |_, _| rng.random_range(0.0..1.2));
    let alpha = CVec::from_fn(m, |_, _| c64(rng.random_range(-amp..=amp), rng.random_range(-amp..=amp)));
    DisentangledForm::new(random_unitary(rng, m), alpha, r).unwrap()
}

#[test]
fn hermitian_eig_reconstructs_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 0..600 {
        let m = 1 + t % 12;
        let a = random_hermitian(&mut rng, m);
        let e = hermitian_eig(&a).unwrap();
        let scale = max_norm(&a).max(1.0);
        assert!(max_norm(&(e.reconstruct() - &a)) < 1e-12 * scale * m as f64, "trial {t}");
        assert!(unitary_residual(&e.vectors) < 1e-12 * m as f64);
        assert!(e.eigvals.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn degenerate_spectra_are_resolved() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let u = random_unitary(&mut rng, 5);
        let d = CMat::from_diagonal(&CVec::from_vec([1.0, 1.0, -2.0, 3.0, 3.0].map(|x| c64(x, 0.0)).to_vec()));
        let a = &u * d * u.adjoint();
        let e = hermitian_eig(&a).unwrap();
        assert!(max_norm(&(e.reconstruct() - &a)) < 1e-11);
        assert!(unitary_residual(&e.vectors) < 1e-11);
    }
}

#[test]
fn takagi_reconstructs_random_symmetric_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 0..500 {
        let m = 1 + t % 10;
        let b = CMat::from_fn(m, m, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let f = (&b + b.transpose()).scale(0.5);
        let tk = takagi(&f).unwrap();
        assert!(max_norm(&(tk.reconstruct() - &f)) < 1e-11, "trial {t}");
        assert!(unitary_residual(&tk.v) < 1e-11);
        assert!(tk.r.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn unitary_exp_is_a_one_parameter_group() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in 0..200 {
        let m = 1 + t % 8;
        let h = random_hermitian(&mut rng, m);
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = unitary_exp(&h, a).unwrap() * unitary_exp(&h, b).unwrap();
        let rhs = unitary_exp(&h, a + b).unwrap();
        assert!(max_norm(&(lhs - rhs)) < 1e-11);
        let u = random_unitary(&mut rng, m);
        let k = unitary_log(&u).unwrap();
        assert!(max_norm(&(unitary_exp(&k, 1.0).unwrap() - &u)) < 1e-10, "trial {t}");
    }
}

#[test]
fn disentangle_round_trips_and_photon_numbers_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..300 {
        let m = 1 + t % 6;
        let d = random_state(&mut rng, m, 1.0);
        let s = d.assemble("test");
        let back = disentangle(&s).unwrap().assemble("test");
        assert!(max_norm(&(&back.f - &s.f)) < 1e-10);
        assert!((&back.beta - &s.beta).camax() < 1e-10);
        let n = d.mean_photons();
        assert!((to_covariance(&d).mean_photons() - n).abs() < 1e-9 * (1.0 + n));
        assert!((to_covariance_mode_basis(&d).mean_photons() - n).abs() < 1e-9 * (1.0 + n));
        let j = state_from_json(&state_to_json(&s)).unwrap();
        assert!(max_norm(&(&j.f - &s.f)) < 1e-15 && (&j.beta - &s.beta).camax() < 1e-15);
    }
}

#[test]
fn qfi_is_basis_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for t in 0..300 {
        let m = 1 + t % 7;
        let d = random_state(&mut rng, m, 1.0);
        let gen = Generator::from_matrix(random_hermitian(&mut rng, m), 1e-12).unwrap();
        let u = random_unitary(&mut rng, m);
        let a = qfi(&d, &gen).unwrap();
        let b = qfi(&d.change_basis(&u).unwrap(), &gen.in_basis(&u).unwrap()).unwrap();
        assert!((a.qfi - b.qfi).abs() < 1e-9 * (1.0 + a.qfi), "trial {t}: {} vs {}", a.qfi, b.qfi);
        assert!((a.resources.n_signal - b.resources.n_signal).abs() < 1e-9 * (1.0 + a.resources.n_signal));
    }
}

#[test]
fn coherent_states_give_four_times_the_second_moment() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in 0..200 {
        let m = 1 + t % 6;
        let alpha = CVec::from_fn(m, |_, _| c64(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let d = DisentangledForm::new(random_unitary(&mut rng, m), alpha, RVec::zeros(m)).unwrap();
        let gen = Generator::from_matrix(random_hermitian(&mut rng, m), 1e-12).unwrap();
        let beta = &d.v * &d.alpha;
        let expected = 4.0 * (&gen.g * &beta).norm_squared();
        assert!((qfi(&d, &gen).unwrap().qfi - expected).abs() < 1e-9 * (1.0 + expected));
    }
}

#[test]
fn displaced_bounds_hold_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 0..500 {
        let m = 1 + t % 8;
        let d = random_state(&mut rng, m, [0.0, 0.5, 2.0][t % 3]);
        let gen = Generator::from_matrix(random_hermitian(&mut rng, m), 1e-12).unwrap();
        let rep = qfi(&d, &gen).unwrap();
        let loose = qfi_upper_bound_displaced(&d, &gen).unwrap();
        let tight = qfi_upper_bound_displaced_tight(&d, &gen).unwrap();
        assert!(rep.qfi <= tight + 1e-9 * (1.0 + tight), "trial {t}");
        assert!(tight <= loose + 1e-9 * (1.0 + loose));
        assert!(rep.bound_satisfied);
    }
}

#[test]
fn resources_match_direct_sums_in_the_eigenbasis() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = [-1.0, 0.5, 2.0];
    let gen = Generator::diagonal(&g);
    for _ in 0..100 {
        let d = random_state(&mut rng, 3, 1.0);
        let cov = to_covariance_mode_basis(&d);
        let occ: Vec<f64> = (0..3)
            .map(|k| {
                let (q, p) = (2 * k, 2 * k + 1);
                (cov.sigma[(q, q)] + cov.sigma[(p, p)] - 2.0) / 4.0 + (cov.mean[q].powi(2) + cov.mean[p].powi(2)) / 2.0
            })
            .collect();
        let n: f64 = occ.iter().sum();
        let mean: f64 = occ.iter().zip(&g).map(|(o, g)| o * g).sum::<f64>() / n;
        let var: f64 = occ.iter().zip(&g).map(|(o, g)| o * g * g).sum::<f64>() / n - mean * mean;
        let r = resources(&d, &gen).unwrap();
        assert!((r.n_signal - n).abs() < 1e-9 * (1.0 + n));
        assert!((r.g_mean - mean).abs() < 1e-9);
        assert!((r.g_var - var).abs() < 1e-9);
    }
}

#[test]
fn shifted_hg_family_reproduces_the_hg_generator() {
    let hg = HgParams::new(0.3, 1.1, 0.7, 0.2).unwrap();
    let grid = DiscretizationGrid::new(-8.0, 8.0, 1600).unwrap();
    let mg = generator_from_modes(|n, z, lam| hg_mode(n, z + lam, &hg), 5, 0.0, 1e-5, &grid).unwrap();
    let exact = hg_generator(&hg, 5).unwrap();
    assert!(max_norm(&(&mg.generator.g - &exact.g)) < 1e-6, "{}", mg.generator.g);
    assert!(mg.anti_hermitian_residual < 1e-6);
}

#[test]
fn plane_wave_carriers_give_diagonal_generators() {
    // Wide Gaussian envelopes on distinct carriers: shifting multiplies each
    // by its own phase, so the generator is the diagonal of carriers.
    let carriers = [-2.0, 0.0, 2.5];
    let grid = DiscretizationGrid::new(-60.0, 60.0, 6000).unwrap();
    let fam = |n: usize, z: f64, lam: f64| {
        let hg = HgParams::new(0.0, carriers[n], 8.0, 0.0).unwrap();
        hg_mode(0, z + lam, &hg)
    };
    let mg = generator_from_modes(fam, 3, 0.0, 1e-5, &grid).unwrap();
    for (k, &c) in carriers.iter().enumerate() {
        assert!((mg.generator.g[(k, k)].re - c).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_holds_for_single_mode_probes(r in 0.0f64..2.0, ar in -3.0f64..3.0, ai in -3.0f64..3.0, g in -3.0f64..3.0) {
        let d = DisentangledForm::product(CVec::from_vec(vec![c64(ar, ai)]), RVec::from_vec(vec![r])).unwrap();
        let rep = qfi(&d, &Generator::diagonal(&[g])).unwrap();
        prop_assert!(rep.qfi <= rep.bound + 1e-9 * (1.0 + rep.bound));
        prop_assert!(rep.qfi >= -1e-12);
    }

    #[test]
    fn qfi_scales_quadratically_with_the_generator(seed in 0u64..1000, k in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_state(&mut rng, 3, 1.0);
        let h = random_hermitian(&mut rng, 3);
        let a = qfi(&d, &Generator::from_matrix(h.clone(), 1e-12).unwrap()).unwrap().qfi;
        let b = qfi(&d, &Generator::from_matrix(h.scale(k), 1e-12).unwrap()).unwrap().qfi;
        prop_assert!((b - k * k * a).abs() < 1e-9 * (1.0 + b));
    }
}

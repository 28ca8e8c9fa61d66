mod common;

use common::random_state;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qkr_core::floquet::prepare_initial;
use qkr_core::robustness::{
    analytic_averaged_rho, detuning_sensitivity, error_scaling, mc_averaged_rho, noise_derivative,
    noisy_amplify, noisy_resonant_kicks, Sampling,
};
use qkr_core::stats::mean_and_stderr;
use qkr_core::{
    amplify, DensityMatrix, InitScheme, KickPotential, MomentumLattice, NoiseModel, OracleSpec,
    RotorState,
};

fn single_kick_problem() -> (MomentumLattice, InitScheme, OracleSpec) {
    (
        MomentumLattice::new(16).unwrap(),
        InitScheme::resonant(0.25, 1),
        OracleSpec::new([1]),
    )
}

#[test]
fn noisy_kicks_heat_the_rotor() {
    // Sum of m normal strengths is N(m phi, m delta^2), so
    // <E> = ((m phi)^2 + m delta^2) / 4 exactly.
    let lat = MomentumLattice::new(96).unwrap();
    let (m, phi, delta) = (40usize, 0.5, 0.2);
    let model = NoiseModel::new(phi, delta, 5, 4000).unwrap();
    let psi = RotorState::basis(&lat, 0).unwrap();
    let energies: Vec<f64> = (0..model.realizations as u64)
        .map(|r| {
            noisy_resonant_kicks(
                psi.clone(),
                &KickPotential::cosine(),
                &model.sample_strengths(m, r),
            )
            .unwrap()
            .mean_energy()
        })
        .collect();
    let (mean, se) = mean_and_stderr(&energies);
    let m = m as f64;
    let want = ((m * phi).powi(2) + m * delta * delta) / 4.0;
    assert!((mean - want).abs() < 3.0 * se, "{mean} {want} {se}");
    assert!(mean > (m * phi).powi(2) / 4.0);
}

fn hermitian_min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let m = DMatrix::from_fn(d, d, |k, l| rho.get(k, l));
    let m = (&m + m.adjoint()).scale(0.5);
    m.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn averaged_density_is_a_state() {
    let lat = MomentumLattice::new(20).unwrap();
    let psi = prepare_initial(&lat, &InitScheme::resonant(1.0, 2)).unwrap();
    let rho = analytic_averaged_rho(
        &DensityMatrix::from_pure(&psi),
        &KickPotential::cosine(),
        0.25,
        0.05,
        200,
    );
    assert!((rho.trace().re - 1.0).abs() < 1e-10);
    assert!(rho.hermiticity_error() < 1e-10);
    assert!(hermitian_min_eigenvalue(&rho) > -1e-8);
    let model = NoiseModel::new(0.25, 0.05, 9, 300).unwrap();
    let mc = mc_averaged_rho(&psi, &KickPotential::cosine(), &model, 200).unwrap();
    assert!(hermitian_min_eigenvalue(&mc.rho) > -1e-8);
    assert!(mc.rho.frobenius_distance(&rho) < 3.0 * mc.standard_error);
}

#[test]
fn noise_flattens_the_long_walk_profile() {
    let lat = MomentumLattice::new(96).unwrap();
    let rho0 = DensityMatrix::from_pure(&RotorState::basis(&lat, 0).unwrap());
    let peak = |gamma: f64| {
        let rho = analytic_averaged_rho(&rho0, &KickPotential::cosine(), 0.25, gamma * 0.25, 200);
        let p = rho.momentum_probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        p.iter().cloned().fold(0.0, f64::max)
    };
    let (p0, p1, p2) = (peak(0.0), peak(0.05), peak(0.2));
    assert!(p0 > p1 && p1 > p2, "{p0} {p1} {p2}");
}

#[test]
fn mc_error_shrinks_with_realizations() {
    let lat = MomentumLattice::new(12).unwrap();
    let psi = RotorState::basis(&lat, 0).unwrap();
    let pot = KickPotential::cosine();
    let exact = analytic_averaged_rho(&DensityMatrix::from_pure(&psi), &pot, 0.25, 0.0125, 200);
    // mean square error over independent seeds
    let rms = |r: usize| {
        let sq: f64 = (0..24u64)
            .map(|seed| {
                let model = NoiseModel::new(0.25, 0.0125, 1000 + seed, r).unwrap();
                mc_averaged_rho(&psi, &pot, &model, 200)
                    .unwrap()
                    .rho
                    .frobenius_distance(&exact)
                    .powi(2)
            })
            .sum();
        (sq / 24.0).sqrt()
    };
    let ratio = rms(100) / rms(10_000);
    assert!(ratio > 5.0 && ratio < 20.0, "{ratio}");
}

#[test]
fn noise_lowers_the_peak() {
    let (lat, scheme, oracle) = single_kick_problem();
    let clean = amplify(&lat, &scheme, &oracle, Some(12))
        .unwrap()
        .peak_success();
    let mut last = clean;
    for gamma in [1e-3, 1e-2, 5e-2] {
        let model = NoiseModel::from_gamma(0.25, gamma, 3, 400).unwrap();
        let row = noisy_amplify(&lat, &scheme, &oracle, &model, 12, Sampling::Antithetic).unwrap();
        let peak = row.success.iter().cloned().fold(0.0, f64::max);
        assert!(peak < last, "{gamma}: {peak} vs {last}");
        assert!(row.success.iter().all(|s| (0.0..=1.0).contains(s)));
        last = peak;
    }
}

#[test]
fn first_order_correction_vanishes() {
    let (lat, scheme, oracle) = single_kick_problem();
    let model = NoiseModel::new(0.25, 1e-3 * 0.25, 21, 2000).unwrap();
    let d = noise_derivative(&lat, &scheme, &oracle, &model, 6).unwrap();
    assert!(d.first.abs() < 3.0 * d.first_se, "{d:?}");
    assert!(
        d.second < 0.0 && d.second.abs() > 5.0 * d.second_se,
        "{d:?}"
    );
}

#[test]
fn deviation_is_quadratic_in_noise() {
    let (lat, scheme, oracle) = single_kick_problem();
    let base = NoiseModel::new(0.25, 0.0, 8, 600).unwrap();
    let res = error_scaling(
        &lat,
        &scheme,
        &oracle,
        &base,
        &[0.0, 2.5e-4, 5e-4, 1e-3],
        10,
        0.25,
    )
    .unwrap();
    assert!(res.rescaled_deviations[0].iter().all(|&d| d == 0.0));
    let k = res.peak_iteration;
    let dev = |i: usize| res.noiseless[k] - res.success_curves[i][k];
    let ratio = dev(3) / dev(2);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    assert!(res.collapse_spread < 0.25);
}

#[test]
fn detuning_peaks_decay() {
    let (lat, _, oracle) = single_kick_problem();
    let rows =
        detuning_sensitivity(&lat, 0.25, 1, &oracle, &[0.0, 1e-6, 1e-5, 1e-4, 1e-3], 14).unwrap();
    for w in rows.windows(2) {
        assert!(
            w[1].peak <= w[0].peak,
            "{} -> {}",
            w[0].epsilon,
            w[1].epsilon
        );
    }
    assert!(rows
        .iter()
        .all(|r| r.success.iter().all(|s| (0.0..=1.0 + 1e-12).contains(s))));
}

#[test]
fn parallel_runs_are_reproducible() {
    let (lat, scheme, oracle) = single_kick_problem();
    let model = NoiseModel::from_gamma(0.25, 0.01, 77, 64).unwrap();
    let a = noisy_amplify(&lat, &scheme, &oracle, &model, 8, Sampling::Independent).unwrap();
    let b = noisy_amplify(&lat, &scheme, &oracle, &model, 8, Sampling::Independent).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dephasing_only_shrinks_coherences(seed in any::<u64>(), m in 1u32..50, d1 in 0.0f64..0.3, extra in 0.0f64..0.3) {
        let lat = MomentumLattice::new(6).unwrap();
        let rho0 = DensityMatrix::from_pure(&random_state(&lat, seed));
        let pot = KickPotential::modified(2).unwrap();
        let a = analytic_averaged_rho(&rho0, &pot, 0.25, d1, m);
        let b = analytic_averaged_rho(&rho0, &pot, 0.25, d1 + extra, m);
        let c = analytic_averaged_rho(&rho0, &pot, 0.25, d1, m + 1);
        let d = lat.dim();
        for k in 0..d {
            prop_assert_eq!(a.get(k, k), rho0.get(k, k));
            for l in 0..d {
                prop_assert!(a.get(k, l).norm() <= rho0.get(k, l).norm() + 1e-15);
                prop_assert!(b.get(k, l).norm() <= a.get(k, l).norm() + 1e-15);
                prop_assert!(c.get(k, l).norm() <= a.get(k, l).norm() + 1e-15);
            }
        }
        prop_assert!((a.trace() - rho0.trace()).norm() < 1e-14);
    }

    #[test]
    fn strengths_depend_only_on_seed_and_index(seed in any::<u64>(), r in 0u64..1000, len in 1usize..64) {
        let model = NoiseModel::new(0.25, 0.01, seed, 1).unwrap();
        let long = model.sample_strengths(len + 10, r);
        prop_assert_eq!(&long[..len], &model.sample_strengths(len, r)[..]);
    }
}

#[test]
fn zero_noise_density_is_unitary_kick() {
    let lat = MomentumLattice::new(8).unwrap();
    let psi = random_state(&lat, 4);
    let rho = analytic_averaged_rho(
        &DensityMatrix::from_pure(&psi),
        &KickPotential::cosine(),
        0.25,
        0.0,
        12,
    );
    let kicked = qkr_core::apply_kick(psi, &KickPotential::cosine(), 3.0);
    let want = DensityMatrix::from_pure(&kicked);
    let worst = rho
        .entries()
        .iter()
        .zip(want.entries())
        .map(|(a, b): (&Complex64, &Complex64)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-13);
}

#[test]
fn mirror_coherences_survive_dephasing() {
    // cos theta = cos(2 pi - theta), so the noise phase cancels between the
    // angle-grid points k and dim - k, while generic pairs decay.
    let lat = MomentumLattice::new(16).unwrap();
    let dim = lat.dim();
    let rho0 = DensityMatrix::from_pure(&random_state(&lat, 4));
    let rho = analytic_averaged_rho(&rho0, &KickPotential::cosine(), 0.25, 0.5, 200);
    let mc = mc_averaged_rho(
        &random_state(&lat, 4),
        &KickPotential::cosine(),
        &NoiseModel::new(0.25, 0.5, 1, 64).unwrap(),
        200,
    )
    .unwrap();
    for k in 1..dim {
        let l = dim - k;
        assert!((rho.get(k, l) - rho0.get(k, l)).norm() < 1e-13);
        assert!((mc.rho.get(k, l) - rho0.get(k, l)).norm() < 1e-12);
    }
    assert!(rho.get(0, dim / 2).norm() < 1e-3 * rho0.get(0, dim / 2).norm());
}

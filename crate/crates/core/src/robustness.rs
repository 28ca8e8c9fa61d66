//! Noisy kick strengths, the noise-averaged density operator, error scaling
//! of the amplification loop, and the uncontrolled-detuning study.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{QkrError, Result};
use crate::floquet::{eval_potential, kick_in_place, Evolution, InitScheme, KickPotential};
use crate::grover::{GroverOperator, OracleSpec};
use crate::lattice::MomentumLattice;
use crate::noise::NoiseModel;
use crate::state::RotorState;
use crate::stats::mean_and_stderr;

/// One kick per entry of `strengths`, all with the same potential.
pub fn noisy_resonant_kicks(
    mut state: RotorState,
    potential: &KickPotential,
    strengths: &[f64],
) -> Result<RotorState> {
    let values = eval_potential(potential, state.lattice());
    for &s in strengths {
        kick_in_place(&mut state, &values, s);
    }
    state.make_momentum();
    state.check_truncation()?;
    Ok(state)
}

/// Noise average of `m` kicks with strengths `N(phi_mean, delta)`:
/// `rho_kl -> e^{-i m phi (V_k - V_l)} e^{-m delta^2 (V_k - V_l)^2 / 2} rho_kl`
/// on the angle grid.
pub fn analytic_averaged_rho(
    rho0: &DensityMatrix,
    potential: &KickPotential,
    phi_mean: f64,
    delta: f64,
    m: u32,
) -> DensityMatrix {
    let v = eval_potential(potential, rho0.lattice());
    let d = v.len();
    let m = m as f64;
    let mut out = rho0.clone();
    for (k, row) in out.entries_mut().chunks_mut(d).enumerate() {
        for (l, c) in row.iter_mut().enumerate() {
            let dv = v[k] - v[l];
            *c *= Complex64::from_polar(
                (-0.5 * m * delta * delta * dv * dv).exp(),
                -m * phi_mean * dv,
            );
        }
    }
    out
}

/// Monte-Carlo noise average with its Frobenius standard error
/// `sqrt(sum_kl Var(rho_kl) / R)`.
#[derive(Debug, Clone)]
pub struct McDensity {
    pub rho: DensityMatrix,
    pub standard_error: f64,
    pub realizations: usize,
}

const MC_CHUNK: usize = 64;

/// Average of `|psi_r><psi_r|` over the model's realizations, where
/// `psi_r` is `psi0` after `m` kicks with sampled strengths.
///
/// Works on the angle grid without the truncation guard: it is meant for
/// comparing averaging schemes on one discretization.
pub fn mc_averaged_rho(
    psi0: &RotorState,
    potential: &KickPotential,
    model: &NoiseModel,
    m: u32,
) -> Result<McDensity> {
    model.validate()?;
    let lattice = psi0.lattice().clone();
    let v = eval_potential(potential, &lattice);
    let base = psi0.angle_amplitudes();
    let d = base.len();
    let chunks: Vec<(Vec<Complex64>, Vec<f64>)> = (0..model.realizations)
        .collect::<Vec<_>>()
        .par_chunks(MC_CHUNK)
        .map(|idx| {
            let mut sum = vec![Complex64::new(0.0, 0.0); d * d];
            let mut sq = vec![0.0; d * d];
            let mut psi = vec![Complex64::new(0.0, 0.0); d];
            for &r in idx {
                let total: f64 = model.sample_strengths(m as usize, r as u64).iter().sum();
                for ((p, b), vk) in psi.iter_mut().zip(&base).zip(&v) {
                    *p = b * Complex64::from_polar(1.0, -total * vk);
                }
                for k in 0..d {
                    let pk = psi[k];
                    for l in 0..d {
                        let x = pk * psi[l].conj();
                        sum[k * d + l] += x;
                        sq[k * d + l] += x.norm_sqr();
                    }
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![Complex64::new(0.0, 0.0); d * d];
    let mut sq = vec![0.0; d * d];
    for (s, q) in &chunks {
        sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        sq.iter_mut().zip(q).for_each(|(a, b)| *a += b);
    }
    let r = model.realizations as f64;
    sum.iter_mut().for_each(|c| *c /= r);
    let standard_error = if model.realizations > 1 {
        let var: f64 = sum
            .iter()
            .zip(&sq)
            .map(|(mu, q)| (q - r * mu.norm_sqr()).max(0.0) / (r - 1.0))
            .sum();
        (var / r).sqrt()
    } else {
        f64::NAN
    };
    Ok(McDensity {
        rho: DensityMatrix::from_entries(&lattice, sum)?,
        standard_error,
        realizations: model.realizations,
    })
}

/// How realizations draw their normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Realization `r` uses stream `r`.
    Independent,
    /// Realizations `2p` and `2p + 1` use stream `p` with opposite signs.
    /// Odd orders in the noise cancel within each pair.
    Antithetic,
}

/// Noise-averaged success per iteration for one noise width.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyAmplifyRow {
    pub gamma: f64,
    pub delta: f64,
    /// Entry `k` is the average success after `k` iterations.
    pub success: Vec<f64>,
    /// Standard error of each entry (over pairs for antithetic sampling);
    /// NaN with a single sampling unit.
    pub stderr: Vec<f64>,
}

fn check_phi(scheme: &InitScheme, model: &NoiseModel) -> Result<()> {
    if (scheme.phi - model.phi_mean).abs() > 1e-12 * scheme.phi.abs().max(1.0) {
        return Err(QkrError::InvalidParameter(format!(
            "noise mean {} differs from the scheme kick strength {}",
            model.phi_mean, scheme.phi
        )));
    }
    Ok(())
}

/// Success trajectory of realization `r`: every kick of every `U` and
/// `U^dagger`, preparation included, gets its own draw.
fn noisy_trajectory(
    op: &GroverOperator,
    model: &NoiseModel,
    sampling: Sampling,
    r: u64,
    sign: f64,
    k_max: u64,
) -> Result<Vec<f64>> {
    let (stream, sign) = match sampling {
        Sampling::Independent => (r, sign),
        Sampling::Antithetic => (r / 2, if r % 2 == 0 { sign } else { -sign }),
    };
    let mut z = model.stream(stream);
    let delta = model.delta;
    let mut strength = |s: f64| s + s.signum() * sign * delta * z.next_normal();
    let mut state = op.prepare_with(&mut strength)?;
    let mut out = Vec::with_capacity(k_max as usize + 1);
    out.push(op.success(&state));
    for _ in 0..k_max {
        state = op.apply_with(state, &mut strength)?;
        out.push(op.success(&state));
    }
    Ok(out)
}

fn trajectories(
    op: &GroverOperator,
    model: &NoiseModel,
    sampling: Sampling,
    sign: f64,
    k_max: u64,
) -> Result<Vec<Vec<f64>>> {
    (0..model.realizations as u64)
        .into_par_iter()
        .map(|r| noisy_trajectory(op, model, sampling, r, sign, k_max))
        .collect()
}

/// Per-iteration mean and standard error, reduced in realization order.
fn summarize(runs: &[Vec<f64>], sampling: Sampling) -> (Vec<f64>, Vec<f64>) {
    let width = runs.first().map_or(0, |r| r.len());
    let units: Vec<Vec<f64>> = match sampling {
        Sampling::Independent => runs.to_vec(),
        Sampling::Antithetic => runs
            .chunks(2)
            .map(|p| {
                (0..width)
                    .map(|k| p.iter().map(|r| r[k]).sum::<f64>() / p.len() as f64)
                    .collect()
            })
            .collect(),
    };
    (0..width)
        .map(|k| {
            let col: Vec<f64> = units.iter().map(|u| u[k]).collect();
            mean_and_stderr(&col)
        })
        .unzip()
}

/// Noise-averaged amplification for `0..=k_max` iterations.
pub fn noisy_amplify(
    lattice: &MomentumLattice,
    scheme: &InitScheme,
    oracle: &OracleSpec,
    model: &NoiseModel,
    k_max: u64,
    sampling: Sampling,
) -> Result<NoisyAmplifyRow> {
    model.validate()?;
    check_phi(scheme, model)?;
    if sampling == Sampling::Antithetic && model.realizations % 2 != 0 {
        return Err(QkrError::InvalidParameter(
            "antithetic sampling needs an even realization count".into(),
        ));
    }
    let op = GroverOperator::new(lattice, scheme, oracle.clone())?;
    oracle.validate_on(lattice)?;
    let a0 = op.success(&op.prepare()?);
    if !(a0 > 0.0) {
        return Err(QkrError::ZeroOverlap);
    }
    let runs = trajectories(&op, model, sampling, 1.0, k_max)?;
    let (success, stderr) = summarize(&runs, sampling);
    Ok(NoisyAmplifyRow {
        gamma: model.gamma(),
        delta: model.delta,
        success,
        stderr,
    })
}

/// Finite-difference derivatives of the noise-averaged success in `delta`
/// at zero, from common random numbers: realization `r` is run with
/// strengths `phi +- h z_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDerivative {
    pub iteration: u64,
    pub step: f64,
    /// `[S(h) - S(-h)] / 2h`.
    pub first: f64,
    pub first_se: f64,
    /// `[S(h) + S(-h) - 2 S(0)] / h^2`.
    pub second: f64,
    pub second_se: f64,
}

/// Derivatives at iteration `k` with step `model.delta`.
pub fn noise_derivative(
    lattice: &MomentumLattice,
    scheme: &InitScheme,
    oracle: &OracleSpec,
    model: &NoiseModel,
    k: u64,
) -> Result<NoiseDerivative> {
    model.validate()?;
    check_phi(scheme, model)?;
    let h = model.delta;
    if !(h > 0.0) {
        return Err(QkrError::InvalidParameter(
            "derivative step must be positive".into(),
        ));
    }
    let op = GroverOperator::new(lattice, scheme, oracle.clone())?;
    let s0 = noisy_trajectory(
        &op,
        &model.with_delta(0.0),
        Sampling::Independent,
        0,
        1.0,
        k,
    )?[k as usize];
    let plus = trajectories(&op, model, Sampling::Independent, 1.0, k)?;
    let minus = trajectories(&op, model, Sampling::Independent, -1.0, k)?;
    let k = k as usize;
    let first: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p[k] - m[k]) / (2.0 * h))
        .collect();
    let second: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p[k] + m[k] - 2.0 * s0) / (h * h))
        .collect();
    let (first, first_se) = mean_and_stderr(&first);
    let (second, second_se) = mean_and_stderr(&second);
    Ok(NoiseDerivative {
        iteration: k as u64,
        step: h,
        first,
        first_se,
        second,
        second_se,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepResult {
    pub gammas: Vec<f64>,
    /// `success_curves[i][k]`, noise-averaged success at `gammas[i]`.
    pub success_curves: Vec<Vec<f64>>,
    pub stderr_curves: Vec<Vec<f64>>,
    /// `(S(0, k) - S(gamma, k)) / gamma^2`; zero for `gamma = 0`.
    pub rescaled_deviations: Vec<Vec<f64>>,
    /// Noiseless success per iteration.
    pub noiseless: Vec<f64>,
    /// Iteration of the noiseless maximum.
    pub peak_iteration: usize,
    /// `(max - min) / min` of the rescaled deviations at the peak over the
    /// positive gammas.
    pub collapse_spread: f64,
}

/// Sweeps the noise strength with common random numbers and antithetic
/// pairs (`base.realizations` counts trajectories and must be even).
///
/// Fails with [`QkrError::InsufficientRealizations`] when twice the standard
/// error of a rescaled deviation at the peak exceeds `tolerance` times its
/// value.
pub fn error_scaling(
    lattice: &MomentumLattice,
    scheme: &InitScheme,
    oracle: &OracleSpec,
    base: &NoiseModel,
    gammas: &[f64],
    k_max: u64,
    tolerance: f64,
) -> Result<NoiseSweepResult> {
    if gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return Err(QkrError::InvalidParameter(
            "noise strengths must be finite and >= 0".into(),
        ));
    }
    if gammas.iter().filter(|g| **g > 0.0).count() < 3 {
        return Err(QkrError::InvalidParameter(
            "error scaling needs at least three positive noise strengths".into(),
        ));
    }
    let noiseless = noisy_amplify(
        lattice,
        scheme,
        oracle,
        &base.with_delta(0.0),
        k_max,
        Sampling::Antithetic,
    )?
    .success;
    let peak_iteration = noiseless
        .iter()
        .enumerate()
        .fold(
            (0, f64::MIN),
            |best, (k, &s)| if s > best.1 { (k, s) } else { best },
        )
        .0;
    let mut success_curves = Vec::new();
    let mut stderr_curves = Vec::new();
    let mut rescaled_deviations = Vec::new();
    let mut at_peak = Vec::new();
    for &g in gammas {
        if g == 0.0 {
            success_curves.push(noiseless.clone());
            stderr_curves.push(vec![0.0; noiseless.len()]);
            rescaled_deviations.push(vec![0.0; noiseless.len()]);
            continue;
        }
        let model = base.with_delta(g * base.phi_mean.abs());
        let row = noisy_amplify(lattice, scheme, oracle, &model, k_max, Sampling::Antithetic)?;
        let dev: Vec<f64> = noiseless
            .iter()
            .zip(&row.success)
            .map(|(a, b)| (a - b) / (g * g))
            .collect();
        let value = dev[peak_iteration];
        let se = row.stderr[peak_iteration] / (g * g);
        if !(2.0 * se <= tolerance * value.abs()) {
            return Err(QkrError::InsufficientRealizations(format!(
                "rescaled deviation {value:.4e} at gamma {g:.1e} has standard error {se:.2e}; \
                 more than {} realizations needed for tolerance {tolerance}",
                base.realizations
            )));
        }
        at_peak.push(value);
        success_curves.push(row.success);
        stderr_curves.push(row.stderr);
        rescaled_deviations.push(dev);
    }
    let lo = at_peak.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = at_peak.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(NoiseSweepResult {
        gammas: gammas.to_vec(),
        success_curves,
        stderr_curves,
        rescaled_deviations,
        noiseless,
        peak_iteration,
        collapse_spread: (hi - lo) / lo.abs(),
    })
}

/// Success per iteration for one uncontrolled detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuneRow {
    /// Detuning in units of the kick period.
    pub epsilon: f64,
    pub success: Vec<f64>,
    pub peak: f64,
    pub peak_iteration: usize,
}

/// Amplification where `U` is `kicks` cosine kicks each followed by free
/// evolution `4 pi epsilon` beyond resonance, and the "reversed" sequence
/// flips only the kick signs.
pub fn detuning_sensitivity(
    lattice: &MomentumLattice,
    phi: f64,
    kicks: u32,
    oracle: &OracleSpec,
    epsilons: &[f64],
    k_max: u64,
) -> Result<Vec<DetuneRow>> {
    oracle.validate_on(lattice)?;
    epsilons
        .iter()
        .map(|&eps| {
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(QkrError::InvalidParameter(format!(
                    "detuning {eps} must be finite and >= 0"
                )));
            }
            let evolution = Evolution::uncontrolled_detuning(lattice, phi, kicks, 4.0 * PI * eps)?;
            let op = GroverOperator::from_evolution(evolution, oracle.clone());
            let mut state = op.prepare()?;
            let mut success = vec![op.success(&state)];
            if !(success[0] > 0.0) {
                return Err(QkrError::ZeroOverlap);
            }
            for _ in 0..k_max {
                state = op.apply(state)?;
                success.push(op.success(&state));
            }
            let (peak_iteration, peak) = success
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |b, (k, &s)| if s > b.1 { (k, s) } else { b });
            Ok(DetuneRow {
                epsilon: eps,
                success,
                peak,
                peak_iteration,
            })
        })
        .collect()
}

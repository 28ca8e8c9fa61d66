//! Amplitude estimation with one spin-1/2 ancilla controlling the Grover
//! iterate.
//!
//! Circuit: `|0> (x) U|0>`, Hadamard on the spin, controlled `G`, Hadamard,
//! then measure the spin in the Z basis. The expectation is
//! `Re <psi|G|psi> = -cos(2 theta_g)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{QkrError, Result};
use crate::floquet::{Direction, Evolution, InitScheme};
use crate::grover::{optimal_iterations, oracle_in_place, zero_reflection_in_place, OracleSpec};
use crate::lattice::MomentumLattice;
use crate::state::{norm_sqr, Representation, RotorState, NORM_TOLERANCE};

/// Spin (x) rotor amplitudes in momentum representation, spin-major:
/// entry `s * dim + j` is the coefficient of `|s> (x) |n_j>`.
#[derive(Debug, Clone)]
pub struct SpinRotorState {
    amplitudes: Vec<Complex64>,
    lattice: MomentumLattice,
}

impl SpinRotorState {
    /// `|spin> (x) |rotor>` with `spin` 0 or 1.
    pub fn product(spin: usize, rotor: &RotorState) -> Result<Self> {
        if spin > 1 {
            return Err(QkrError::InvalidParameter(format!(
                "spin index {spin} is not 0 or 1"
            )));
        }
        let dim = rotor.lattice().dim();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * dim];
        amplitudes[spin * dim..(spin + 1) * dim].copy_from_slice(&rotor.momentum_amplitudes());
        Ok(Self {
            amplitudes,
            lattice: rotor.lattice().clone(),
        })
    }

    pub fn from_amplitudes(lattice: &MomentumLattice, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * lattice.dim() {
            return Err(QkrError::DimensionMismatch {
                expected: 2 * lattice.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = norm_sqr(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QkrError::NotNormalized(norm));
        }
        Ok(Self {
            amplitudes,
            lattice: lattice.clone(),
        })
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Unnormalized rotor amplitudes of one spin branch.
    pub fn branch(&self, spin: usize) -> &[Complex64] {
        let dim = self.lattice.dim();
        &self.amplitudes[spin * dim..(spin + 1) * dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// Probability of finding the spin in `|0>`.
    pub fn spin_zero_probability(&self) -> f64 {
        norm_sqr(self.branch(0))
    }

    /// `<Z>` on the spin.
    pub fn spin_z(&self) -> f64 {
        norm_sqr(self.branch(0)) - norm_sqr(self.branch(1))
    }

    pub fn inner(&self, other: &SpinRotorState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn map_branch_one(mut self, f: impl FnOnce(RotorState) -> Result<RotorState>) -> Result<Self> {
        let dim = self.lattice.dim();
        let branch = RotorState::unchecked(
            &self.lattice,
            self.amplitudes[dim..].to_vec(),
            Representation::Momentum,
        );
        let out = f(branch)?.to_momentum();
        self.amplitudes[dim..].copy_from_slice(out.amplitudes());
        Ok(self)
    }
}

/// Hadamard on the spin factor.
pub fn hadamard_spin(mut state: SpinRotorState) -> SpinRotorState {
    let dim = state.lattice.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = state.amplitudes.split_at_mut(dim);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (p, q) = (*x, *y);
        *x = (p + q) * s;
        *y = (p - q) * s;
    }
    state
}

/// `|0><0| (x) I + |1><1| (x) O`.
pub fn controlled_oracle(state: SpinRotorState, oracle: &OracleSpec) -> SpinRotorState {
    state
        .map_branch_one(|mut r| {
            oracle_in_place(&mut r, oracle);
            Ok(r)
        })
        .expect("oracle cannot fail")
}

/// The same gate written as a momentum-selective spin phase:
/// `I (x) P_B + Z (x) P_G`.
pub fn momentum_selective_oracle(mut state: SpinRotorState, oracle: &OracleSpec) -> SpinRotorState {
    let dim = state.lattice.dim();
    for j in 0..dim {
        if oracle.contains(state.lattice.momentum(j)) {
            state.amplitudes[dim + j] = -state.amplitudes[dim + j];
        }
    }
    state
}

/// `U` (or its reverse) on the spin-`|1>` branch only.
pub fn controlled_u(
    state: SpinRotorState,
    scheme: &InitScheme,
    direction: Direction,
) -> Result<SpinRotorState> {
    let evolution = Evolution::for_scheme(state.lattice(), scheme)?;
    controlled_evolution(state, &evolution, direction)
}

fn controlled_evolution(
    state: SpinRotorState,
    evolution: &Evolution,
    direction: Direction,
) -> Result<SpinRotorState> {
    state.map_branch_one(|r| evolution.apply(r, direction))
}

/// One Grover iteration with every gate conditioned on spin `|1>`.
pub fn controlled_grover(
    state: SpinRotorState,
    oracle: &OracleSpec,
    scheme: &InitScheme,
) -> Result<SpinRotorState> {
    let evolution = Evolution::for_scheme(state.lattice(), scheme)?;
    controlled_grover_with(state, oracle, &evolution)
}

fn controlled_grover_with(
    state: SpinRotorState,
    oracle: &OracleSpec,
    evolution: &Evolution,
) -> Result<SpinRotorState> {
    let state = controlled_oracle(state, oracle);
    let state = controlled_evolution(state, evolution, Direction::Reverse)?;
    let state = state.map_branch_one(|mut r| {
        zero_reflection_in_place(&mut r);
        Ok(r)
    })?;
    controlled_evolution(state, evolution, Direction::Forward)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    /// Spin `<Z>` after the final Hadamard, exact or sampled.
    pub expectation: f64,
    /// `2 theta_g` estimate, `acos(-E)`.
    pub theta_hat: f64,
    pub a_hat: f64,
    /// 0 for the exact expectation.
    pub shots: u64,
    pub r_hat: u64,
}

impl EstimationResult {
    fn from_expectation(expectation: f64, shots: u64) -> Result<Self> {
        if !expectation.is_finite() || expectation.abs() > 1.0 + 1e-9 {
            return Err(QkrError::Numerical(format!(
                "spin expectation {expectation} outside [-1, 1]"
            )));
        }
        let e = expectation.clamp(-1.0, 1.0);
        let theta_hat = (-e).acos();
        let a_hat = (theta_hat / 2.0).sin().powi(2);
        let r_hat = if a_hat > 0.0 {
            optimal_iterations(a_hat)?
        } else {
            0
        };
        Ok(Self {
            expectation: e,
            theta_hat,
            a_hat,
            shots,
            r_hat,
        })
    }
}

/// Runs the estimation circuit. `shots = 0` returns the exact expectation;
/// otherwise each shot is an independent preparation and the spin outcomes
/// are drawn from the binomial law with `seed`.
pub fn estimate_amplitude(
    lattice: &MomentumLattice,
    scheme: &InitScheme,
    oracle: &OracleSpec,
    shots: u64,
    seed: u64,
) -> Result<EstimationResult> {
    let exact = exact_expectation(lattice, scheme, oracle)?;
    if shots == 0 {
        return EstimationResult::from_expectation(exact, 0);
    }
    sample_expectation(exact, shots, seed)
}

/// Spin `<Z>` of the circuit output.
pub fn exact_expectation(
    lattice: &MomentumLattice,
    scheme: &InitScheme,
    oracle: &OracleSpec,
) -> Result<f64> {
    oracle.validate_on(lattice)?;
    let evolution = Evolution::for_scheme(lattice, scheme)?;
    let psi = evolution.apply(RotorState::basis(lattice, 0)?, Direction::Forward)?;
    let a0 = crate::grover::success_probability(&psi, oracle);
    if !(a0 > 0.0) {
        return Err(QkrError::ZeroOverlap);
    }
    let state = hadamard_spin(SpinRotorState::product(0, &psi)?);
    let state = controlled_grover_with(state, oracle, &evolution)?;
    let state = hadamard_spin(state);
    Ok(state.spin_z())
}

/// Sampled estimate from `shots` spin measurements of a circuit whose exact
/// expectation is `exact`.
pub fn sample_expectation(exact: f64, shots: u64, seed: u64) -> Result<EstimationResult> {
    if !exact.is_finite() || exact.abs() > 1.0 + 1e-9 {
        return Err(QkrError::Numerical(format!(
            "spin expectation {exact} outside [-1, 1]"
        )));
    }
    let p0 = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binomial = Binomial::new(shots, p0).map_err(|e| QkrError::Numerical(e.to_string()))?;
    let zeros = binomial.sample(&mut rng);
    EstimationResult::from_expectation(2.0 * zeros as f64 / shots as f64 - 1.0, shots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grover::rotation_angle;
    use approx::assert_abs_diff_eq;

    fn lattice() -> MomentumLattice {
        MomentumLattice::new(24).unwrap()
    }

    #[test]
    fn hadamard_is_involutive() {
        let lat = lattice();
        let psi = RotorState::basis(&lat, 2).unwrap();
        let s = SpinRotorState::product(1, &psi).unwrap();
        let h = hadamard_spin(s.clone());
        let j = lat.index_of(2).unwrap();
        assert_abs_diff_eq!(
            h.branch(0)[j].re,
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            h.branch(1)[j].re,
            -std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        let back = hadamard_spin(h);
        assert_abs_diff_eq!(back.inner(&s).re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn controlled_oracle_forms_agree() {
        let lat = lattice();
        let scheme = InitScheme::resonant(1.0, 2);
        let psi = crate::floquet::prepare_initial(&lat, &scheme).unwrap();
        let s = hadamard_spin(SpinRotorState::product(0, &psi).unwrap());
        let oracle = OracleSpec::new([-1, 0, 3]);
        let a = controlled_oracle(s.clone(), &oracle);
        let b = momentum_selective_oracle(s.clone(), &oracle);
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert_eq!(a.branch(0), s.branch(0));
    }

    #[test]
    fn controlled_u_round_trip() {
        let lat = lattice();
        let scheme = InitScheme::detuned_pair(1.5, 0.3);
        let psi = RotorState::basis(&lat, 1).unwrap();
        let s = hadamard_spin(SpinRotorState::product(0, &psi).unwrap());
        let f = controlled_u(s.clone(), &scheme, Direction::Forward).unwrap();
        assert_eq!(f.branch(0), s.branch(0));
        let back = controlled_u(f, &scheme, Direction::Reverse).unwrap();
        for (x, y) in back.amplitudes().iter().zip(s.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_expectation_matches_closed_form() {
        let lat = lattice();
        let scheme = InitScheme::resonant(1.2, 1);
        let oracle = OracleSpec::new([0, 2]);
        let psi = crate::floquet::prepare_initial(&lat, &scheme).unwrap();
        let a0 = crate::grover::success_probability(&psi, &oracle);
        let res = estimate_amplitude(&lat, &scheme, &oracle, 0, 0).unwrap();
        let t = rotation_angle(a0).unwrap();
        assert_abs_diff_eq!(res.expectation, -(2.0 * t).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(res.a_hat, a0, epsilon = 1e-10);
        assert_eq!(res.r_hat, optimal_iterations(a0).unwrap());
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_expectation(0.3, 1000, 5).unwrap();
        let b = sample_expectation(0.3, 1000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shots, 1000);
        assert!(sample_expectation(1.5, 10, 0).is_err());
    }

    #[test]
    fn zero_overlap_is_rejected() {
        let lat = lattice();
        let scheme = InitScheme::resonant(0.0, 1);
        assert_eq!(
            estimate_amplitude(&lat, &scheme, &OracleSpec::new([3]), 0, 0).unwrap_err(),
            QkrError::ZeroOverlap
        );
    }
}

//! Kick and free-evolution operators, kick potentials, and the initial-state
//! preparation schemes.
//!
//! Units: hbar = I = 1, so the resonant kick period is `T_r = 4 pi` and free
//! evolution for time `tau` multiplies `c_n` by `e^{-i n^2 tau / 2}`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{QkrError, Result};
use crate::lattice::MomentumLattice;
use crate::state::RotorState;

/// Resonant kick period.
pub const RESONANT_PERIOD: f64 = 4.0 * PI;

/// `V(theta) = sum_m v_m cos(m theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KickPotential {
    harmonics: Vec<(u32, f64)>,
}

impl KickPotential {
    /// Harmonics must be non-empty with distinct positive orders; they are
    /// stored sorted by order.
    pub fn new(mut harmonics: Vec<(u32, f64)>) -> Result<Self> {
        if harmonics.is_empty() {
            return Err(QkrError::InvalidParameter(
                "kick potential needs at least one harmonic".into(),
            ));
        }
        harmonics.sort_by_key(|h| h.0);
        if harmonics[0].0 == 0 {
            return Err(QkrError::InvalidParameter(
                "harmonic orders start at 1".into(),
            ));
        }
        if harmonics.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(QkrError::InvalidParameter(
                "duplicate harmonic order".into(),
            ));
        }
        if harmonics.iter().any(|h| !h.1.is_finite()) {
            return Err(QkrError::InvalidParameter(
                "non-finite harmonic coefficient".into(),
            ));
        }
        Ok(Self { harmonics })
    }

    pub fn cosine() -> Self {
        Self {
            harmonics: vec![(1, 1.0)],
        }
    }

    /// `sum_{m=1}^{M} cos(m theta) / m^2`, the near-uniform spreading potential.
    pub fn modified(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(QkrError::InvalidParameter(
                "modified potential needs M >= 1".into(),
            ));
        }
        Ok(Self {
            harmonics: (1..=m).map(|k| (k, 1.0 / (k as f64 * k as f64))).collect(),
        })
    }

    pub fn harmonics(&self) -> &[(u32, f64)] {
        &self.harmonics
    }

    pub fn max_order(&self) -> u32 {
        self.harmonics.last().map(|h| h.0).unwrap_or(0)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|&(m, v)| v * (m as f64 * theta).cos())
            .sum()
    }
}

/// `V(theta_k)` on the lattice's angle grid.
pub fn eval_potential(potential: &KickPotential, lattice: &MomentumLattice) -> Vec<f64> {
    let dim = lattice.dim() as u64;
    (0..dim)
        .map(|k| {
            potential
                .harmonics
                .iter()
                // reduce m*k mod dim first so large orders keep full precision
                .map(|&(m, v)| v * (TAU * ((m as u64 * k) % dim) as f64 / dim as f64).cos())
                .sum()
        })
        .collect()
}

/// `e^{-i strength V(theta)}` applied pointwise on the angle grid.
pub fn apply_kick(state: RotorState, potential: &KickPotential, strength: f64) -> RotorState {
    let values = eval_potential(potential, state.lattice());
    kick_with_values(state, &values, strength)
}

pub(crate) fn kick_with_values(mut state: RotorState, values: &[f64], strength: f64) -> RotorState {
    kick_in_place(&mut state, values, strength);
    state
}

pub(crate) fn kick_in_place(state: &mut RotorState, values: &[f64], strength: f64) {
    if strength == 0.0 {
        return;
    }
    state.make_angle();
    for (c, &v) in state.amplitudes_mut().iter_mut().zip(values) {
        *c *= Complex64::from_polar(1.0, -strength * v);
    }
}

/// Free rotation for time `tau`: `c_n -> e^{-i n^2 tau / 2} c_n`.
///
/// Whole multiples of the resonant period are removed before the phase is
/// formed, so `tau = 4 pi` is the identity to rounding.
pub fn apply_free(mut state: RotorState, tau: f64) -> RotorState {
    free_in_place(&mut state, tau);
    state
}

pub(crate) fn free_in_place(state: &mut RotorState, tau: f64) {
    let periods = (tau / RESONANT_PERIOD).round();
    let residual = tau - periods * RESONANT_PERIOD;
    if residual == 0.0 {
        return;
    }
    state.make_momentum();
    let n_max = state.lattice().n_max() as i64;
    for (j, c) in state.amplitudes_mut().iter_mut().enumerate() {
        let n = (j as i64 - n_max) as f64;
        *c *= Complex64::from_polar(1.0, -0.5 * n * n * residual);
    }
}

/// Parameters of a single kicked-rotor period `U_kick U_free`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetConfig {
    pub phi: f64,
    pub potential: KickPotential,
    /// Offset of the kick period from `4 pi`.
    pub detuning: f64,
}

impl FloquetConfig {
    pub fn resonant(phi: f64, potential: KickPotential) -> Self {
        Self {
            phi,
            potential,
            detuning: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() {
            return Err(QkrError::InvalidParameter(
                "kick strength must be finite".into(),
            ));
        }
        if !(self.detuning >= 0.0) || !self.detuning.is_finite() {
            return Err(QkrError::InvalidParameter(
                "detuning must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One period: free evolution for `4 pi + detuning`, then the kick.
pub fn floquet_step(state: RotorState, config: &FloquetConfig) -> RotorState {
    let state = apply_free(state, RESONANT_PERIOD + config.detuning);
    apply_kick(state, &config.potential, config.phi)
}

/// How the initial superposition `U|0>` is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    /// `count` resonant cosine kicks.
    ResonantKicks { count: u32 },
    /// `count` resonant kicks with the `M`-harmonic modified potential.
    ModifiedPotentialKicks { harmonics: u32, count: u32 },
    /// Two cosine kicks separated by free evolution for `epsilon`.
    ///
    /// Any `epsilon` in `[0, 2 pi)` is accepted; the flattening effect needs
    /// `epsilon << 1`.
    DetunedPair { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitScheme {
    pub kind: SchemeKind,
    pub phi: f64,
}

impl InitScheme {
    pub fn resonant(phi: f64, count: u32) -> Self {
        Self {
            kind: SchemeKind::ResonantKicks { count },
            phi,
        }
    }

    pub fn modified(phi: f64, harmonics: u32, count: u32) -> Self {
        Self {
            kind: SchemeKind::ModifiedPotentialKicks { harmonics, count },
            phi,
        }
    }

    pub fn detuned_pair(phi: f64, epsilon: f64) -> Self {
        Self {
            kind: SchemeKind::DetunedPair { epsilon },
            phi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() {
            return Err(QkrError::InvalidParameter(
                "kick strength must be finite".into(),
            ));
        }
        match self.kind {
            SchemeKind::ResonantKicks { count }
            | SchemeKind::ModifiedPotentialKicks { count, .. }
                if count == 0 =>
            {
                Err(QkrError::InvalidParameter("kick count must be >= 1".into()))
            }
            SchemeKind::ModifiedPotentialKicks { harmonics: 0, .. } => Err(
                QkrError::InvalidParameter("modified potential needs M >= 1".into()),
            ),
            SchemeKind::DetunedPair { epsilon } if !(0.0..TAU).contains(&epsilon) => Err(
                QkrError::InvalidParameter(format!("detuning {epsilon} outside [0, 2 pi)")),
            ),
            _ => Ok(()),
        }
    }

    pub fn potential(&self) -> Result<KickPotential> {
        match self.kind {
            SchemeKind::ModifiedPotentialKicks { harmonics, .. } => {
                KickPotential::modified(harmonics)
            }
            _ => Ok(KickPotential::cosine()),
        }
    }

    /// Total kick strength applied by `U`.
    pub fn total_strength(&self) -> f64 {
        match self.kind {
            SchemeKind::ResonantKicks { count }
            | SchemeKind::ModifiedPotentialKicks { count, .. } => count as f64 * self.phi.abs(),
            SchemeKind::DetunedPair { .. } => 2.0 * self.phi.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Elementary operation in time order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// `e^{-i s V(theta)}`.
    Kick(f64),
    /// Free evolution for this time beyond whole resonant periods.
    Free(f64),
}

/// A compiled `U` and its backward counterpart on a fixed lattice.
///
/// For the preparation schemes the backward sequence is the exact adjoint.
/// [`Evolution::uncontrolled_detuning`] builds a pair where it is not.
#[derive(Debug, Clone)]
pub struct Evolution {
    lattice: MomentumLattice,
    values: Vec<f64>,
    forward: Vec<Step>,
    backward: Vec<Step>,
}

impl Evolution {
    pub fn new(
        lattice: &MomentumLattice,
        potential: &KickPotential,
        forward: Vec<Step>,
    ) -> Result<Self> {
        let backward = adjoint(&forward);
        Self::with_backward(lattice, potential, forward, backward)
    }

    pub fn with_backward(
        lattice: &MomentumLattice,
        potential: &KickPotential,
        forward: Vec<Step>,
        backward: Vec<Step>,
    ) -> Result<Self> {
        if potential.max_order() as usize > lattice.n_max() {
            return Err(QkrError::InvalidParameter(format!(
                "potential harmonic {} exceeds lattice half-width {}",
                potential.max_order(),
                lattice.n_max()
            )));
        }
        let drop_identity = |steps: Vec<Step>| -> Vec<Step> {
            steps
                .into_iter()
                .filter(|s| !matches!(s, Step::Free(t) if *t == 0.0))
                .collect()
        };
        Ok(Self {
            lattice: lattice.clone(),
            values: eval_potential(potential, lattice),
            forward: drop_identity(forward),
            backward: drop_identity(backward),
        })
    }

    pub fn for_scheme(lattice: &MomentumLattice, scheme: &InitScheme) -> Result<Self> {
        scheme.validate()?;
        let phi = scheme.phi;
        let forward = match scheme.kind {
            SchemeKind::ResonantKicks { count }
            | SchemeKind::ModifiedPotentialKicks { count, .. } => {
                vec![Step::Kick(phi); count as usize]
            }
            SchemeKind::DetunedPair { epsilon } => {
                vec![Step::Kick(phi), Step::Free(epsilon), Step::Kick(phi)]
            }
        };
        Self::new(lattice, &scheme.potential()?, forward)
    }

    /// Cosine kicks with a residual free evolution `epsilon_prime` after each
    /// kick: forward `U_f = F K(phi)`, backward `U_b = F K(-phi)`.
    ///
    /// `U_b` is not the adjoint of `U_f` unless `epsilon_prime == 0`.
    pub fn uncontrolled_detuning(
        lattice: &MomentumLattice,
        phi: f64,
        kicks: u32,
        epsilon_prime: f64,
    ) -> Result<Self> {
        if kicks == 0 {
            return Err(QkrError::InvalidParameter("kick count must be >= 1".into()));
        }
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for _ in 0..kicks {
            forward.extend([Step::Kick(phi), Step::Free(epsilon_prime)]);
            backward.extend([Step::Kick(-phi), Step::Free(epsilon_prime)]);
        }
        Self::with_backward(lattice, &KickPotential::cosine(), forward, backward)
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self, direction: Direction) -> &[Step] {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Reverse => &self.backward,
        }
    }

    pub fn kick_count(&self, direction: Direction) -> usize {
        self.steps(direction)
            .iter()
            .filter(|s| matches!(s, Step::Kick(_)))
            .count()
    }

    pub fn apply(&self, state: RotorState, direction: Direction) -> Result<RotorState> {
        self.apply_with(state, direction, &mut |s| s)
    }

    /// Runs the sequence with each nominal kick strength passed through
    /// `strength`. Consecutive kicks share one phase multiply with the summed
    /// strength (they commute). The result is in momentum representation and
    /// has passed the truncation guard.
    pub fn apply_with(
        &self,
        mut state: RotorState,
        direction: Direction,
        strength: &mut dyn FnMut(f64) -> f64,
    ) -> Result<RotorState> {
        if !state.lattice().same_as(&self.lattice) {
            return Err(QkrError::DimensionMismatch {
                expected: self.lattice.dim(),
                got: state.lattice().dim(),
            });
        }
        let mut pending = 0.0;
        let mut have_pending = false;
        for step in self.steps(direction) {
            match *step {
                Step::Kick(s) => {
                    pending += strength(s);
                    have_pending = true;
                }
                Step::Free(tau) => {
                    if have_pending {
                        kick_in_place(&mut state, &self.values, pending);
                        pending = 0.0;
                        have_pending = false;
                    }
                    free_in_place(&mut state, tau);
                }
            }
        }
        if have_pending {
            kick_in_place(&mut state, &self.values, pending);
        }
        state.make_momentum();
        state.check_truncation()?;
        Ok(state)
    }
}

fn adjoint(steps: &[Step]) -> Vec<Step> {
    steps
        .iter()
        .rev()
        .map(|s| match *s {
            Step::Kick(k) => Step::Kick(-k),
            Step::Free(t) => Step::Free(-t),
        })
        .collect()
}

/// `U` or `U^dagger` of the scheme applied to `state`.
pub fn apply_u(state: RotorState, scheme: &InitScheme, direction: Direction) -> Result<RotorState> {
    let evolution = Evolution::for_scheme(state.lattice(), scheme)?;
    evolution.apply(state, direction)
}

/// `U|0>`.
pub fn prepare_initial(lattice: &MomentumLattice, scheme: &InitScheme) -> Result<RotorState> {
    apply_u(RotorState::basis(lattice, 0)?, scheme, Direction::Forward)
}

/// `U|0>` on the smallest lattice (doubling from an estimate of the
/// spread) that passes the default truncation guard. The estimate leaves
/// room for `U` or `U^dag` acting again on any occupied site, as happens
/// inside a Grover iteration.
pub fn prepare_initial_auto(scheme: &InitScheme) -> Result<RotorState> {
    scheme.validate()?;
    let strength = scheme.total_strength();
    let (reach, order) = match scheme.kind {
        SchemeKind::ModifiedPotentialKicks { harmonics, .. } => {
            (strength * PI / 2.0 * 1.3, harmonics as usize)
        }
        _ => (strength, 1),
    };
    // high harmonics move weight in jumps of their order
    let mut n_max = ((2.0 * reach + 16.0) * 1.25 + 2.0 * order as f64)
        .ceil()
        .max(32.0) as usize;
    loop {
        let lattice = MomentumLattice::new(n_max)?;
        match prepare_initial(&lattice, scheme) {
            Err(QkrError::TruncationGuard { .. }) if n_max < 1 << 16 => n_max *= 2,
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Representation;
    use approx::assert_abs_diff_eq;

    fn lat(n: usize) -> MomentumLattice {
        MomentumLattice::new(n).unwrap()
    }

    fn sample_state(l: &MomentumLattice, width: i64) -> RotorState {
        let amps = (0..l.dim())
            .map(|j| {
                let n = l.momentum(j);
                if n.abs() <= width {
                    Complex64::new((n as f64 * 0.7).cos() + 1.1, (n as f64 * 1.9).sin())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        RotorState::normalized(l, amps, Representation::Momentum).unwrap()
    }

    #[test]
    fn potential_values() {
        let l = lat(8);
        assert_abs_diff_eq!(eval_potential(&KickPotential::cosine(), &l)[0], 1.0);
        assert_abs_diff_eq!(
            eval_potential(&KickPotential::modified(2).unwrap(), &l)[0],
            1.25
        );
        let m100 = KickPotential::modified(100).unwrap();
        let partial: f64 = (1..=100)
            .map(|m| if m % 2 == 0 { 1.0 } else { -1.0 } / (m * m) as f64)
            .sum();
        assert_abs_diff_eq!(m100.eval(PI), partial, epsilon = 1e-13);
        assert!((partial + PI * PI / 12.0).abs() < 1e-4);
    }

    #[test]
    fn potential_validation() {
        assert!(KickPotential::new(vec![]).is_err());
        assert!(KickPotential::new(vec![(0, 1.0)]).is_err());
        assert!(KickPotential::new(vec![(2, 1.0), (2, 0.5)]).is_err());
        let p = KickPotential::new(vec![(3, 1.0), (1, 0.5)]).unwrap();
        assert_eq!(p.harmonics(), &[(1, 0.5), (3, 1.0)]);
        assert!(KickPotential::modified(0).is_err());
    }

    #[test]
    fn kick_identity_and_inverse() {
        let l = lat(20);
        let s = sample_state(&l, 5);
        let p = KickPotential::cosine();
        let same = apply_kick(s.clone(), &p, 0.0);
        assert!(s.distance_up_to_phase(&same) < 1e-15);
        let back = apply_kick(apply_kick(s.clone(), &p, 1.7), &p, -1.7);
        let dev = s
            .momentum_amplitudes()
            .iter()
            .zip(back.momentum_amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn free_evolution() {
        let l = lat(30);
        let s = sample_state(&l, 30);
        let res = apply_free(s.clone(), 4.0 * PI);
        assert_eq!(s.amplitudes(), res.amplitudes());
        let zero = apply_free(s.clone(), 0.0);
        assert_eq!(s.amplitudes(), zero.amplitudes());
        let b = apply_free(RotorState::basis(&l, 2).unwrap(), 1.0);
        let c = b.amplitudes()[l.index_of(2).unwrap()];
        assert!((c - Complex64::from_polar(1.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn floquet_step_limits() {
        let l = lat(20);
        let s = sample_state(&l, 4);
        let cfg = FloquetConfig::resonant(1.3, KickPotential::cosine());
        let a = floquet_step(s.clone(), &cfg);
        let b = apply_kick(s.clone(), &cfg.potential, 1.3);
        assert!(a.distance_up_to_phase(&b) < 1e-14);
        let free = FloquetConfig {
            phi: 0.0,
            potential: KickPotential::cosine(),
            detuning: 0.3,
        };
        let c = floquet_step(s.clone(), &free);
        let d = apply_free(s, 0.3);
        assert!(c.distance_up_to_phase(&d) < 1e-14);
        assert!(FloquetConfig {
            detuning: -1.0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(FloquetConfig {
            phi: f64::NAN,
            ..cfg
        }
        .validate()
        .is_err());
    }

    #[test]
    fn scheme_validation() {
        assert!(InitScheme::resonant(2.0, 0).validate().is_err());
        assert!(InitScheme::modified(2.0, 0, 2).validate().is_err());
        assert!(InitScheme::detuned_pair(2.0, 7.0).validate().is_err());
        assert!(InitScheme::detuned_pair(2.0, -0.1).validate().is_err());
        assert!(InitScheme::detuned_pair(2.0, 0.0).validate().is_ok());
    }

    #[test]
    fn detuned_pair_at_zero_is_two_resonant_kicks() {
        let l = lat(32);
        let a = prepare_initial(&l, &InitScheme::detuned_pair(2.0, 0.0)).unwrap();
        let b = prepare_initial(&l, &InitScheme::resonant(2.0, 2)).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn forward_reverse_are_adjoint() {
        let l = lat(256);
        for scheme in [
            InitScheme::resonant(2.0, 3),
            InitScheme::modified(2.0, 100, 2),
            InitScheme::detuned_pair(2.0, 0.2),
        ] {
            let s = sample_state(&l, 3);
            let f = apply_u(s.clone(), &scheme, Direction::Forward).unwrap();
            let r = apply_u(f, &scheme, Direction::Reverse).unwrap();
            assert_abs_diff_eq!(s.fidelity(&r), 1.0, epsilon = 1e-12);
            assert!(s.distance_up_to_phase(&r) < 1e-12);
        }
    }

    #[test]
    fn guard_trips_on_small_lattice() {
        let l = lat(16);
        let err = prepare_initial(&l, &InitScheme::resonant(2.0, 10)).unwrap_err();
        assert!(matches!(err, QkrError::TruncationGuard { .. }));
        let open = l.guarded(crate::lattice::TruncationGuard::disabled());
        assert!(prepare_initial(&open, &InitScheme::resonant(2.0, 10)).is_ok());
    }

    #[test]
    fn harmonics_beyond_lattice_rejected() {
        let l = lat(50);
        assert!(prepare_initial(&l, &InitScheme::modified(2.0, 100, 2)).is_err());
    }

    #[test]
    fn uncontrolled_detuning_at_zero_matches_adjoint() {
        let l = lat(32);
        let e = Evolution::uncontrolled_detuning(&l, 0.7, 2, 0.0).unwrap();
        let ideal = Evolution::for_scheme(&l, &InitScheme::resonant(0.7, 2)).unwrap();
        assert_eq!(e.steps(Direction::Reverse), ideal.steps(Direction::Reverse));
        assert_eq!(e.kick_count(Direction::Forward), 2);
    }
}

//! Oracle, diffusion, the amplitude-amplification loop, and runtime estimates.
//!
//! One iteration applies the oracle `O`, then `U^dagger`, the zero-state
//! reflection `O_0 = 1 - 2|0><0|`, then `U`. With `|psi> = U|0>` that is
//! `G = (1 - 2|psi><psi|)(1 - 2 P_G)`, which rotates the state by `2 theta_g`
//! in the plane of its good and bad components, `theta_g = asin(sqrt(a0))`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{QkrError, Result};
use crate::floquet::{prepare_initial_auto, Direction, Evolution, InitScheme};
use crate::lattice::MomentumLattice;
use crate::state::RotorState;
use crate::stats::log_log_fit;

/// Marked momentum sites, the good subspace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OracleSpec {
    marked: Vec<i64>,
}

impl OracleSpec {
    pub fn new(sites: impl IntoIterator<Item = i64>) -> Self {
        let set: BTreeSet<i64> = sites.into_iter().collect();
        Self {
            marked: set.into_iter().collect(),
        }
    }

    /// Sites at `round(mean + f * sigma)` for each fraction `f`, so that
    /// experiments rescale with the width of `state`.
    pub fn from_sigma_fractions(state: &RotorState, fractions: &[f64]) -> Self {
        let mean = state.mean_momentum();
        let sigma = state.momentum_std();
        Self::new(fractions.iter().map(|f| (mean + f * sigma).round() as i64))
    }

    pub fn marked(&self) -> &[i64] {
        &self.marked
    }

    pub fn is_empty(&self) -> bool {
        self.marked.is_empty()
    }

    pub fn contains(&self, n: i64) -> bool {
        self.marked.binary_search(&n).is_ok()
    }

    pub fn validate_on(&self, lattice: &MomentumLattice) -> Result<()> {
        match self.marked.iter().find(|&&n| !lattice.contains(n)) {
            Some(&n) => Err(QkrError::IndexOutOfRange {
                index: n,
                n_max: lattice.n_max(),
            }),
            None => Ok(()),
        }
    }
}

/// `c_n -> -c_n` on marked sites. Marks outside the lattice have no amplitude
/// to flip.
pub fn apply_oracle(mut state: RotorState, oracle: &OracleSpec) -> RotorState {
    oracle_in_place(&mut state, oracle);
    state
}

pub(crate) fn oracle_in_place(state: &mut RotorState, oracle: &OracleSpec) {
    state.make_momentum();
    let lattice = state.lattice().clone();
    let amps = state.amplitudes_mut();
    for &n in &oracle.marked {
        if let Ok(j) = lattice.index_of(n) {
            amps[j] = -amps[j];
        }
    }
}

/// `1 - 2|0><0|`.
pub fn apply_zero_reflection(mut state: RotorState) -> RotorState {
    zero_reflection_in_place(&mut state);
    state
}

pub(crate) fn zero_reflection_in_place(state: &mut RotorState) {
    state.make_momentum();
    let j = state.lattice().n_max();
    let amps = state.amplitudes_mut();
    amps[j] = -amps[j];
}

/// `sum_{n in marked} |c_n|^2`.
pub fn success_probability(state: &RotorState, oracle: &OracleSpec) -> f64 {
    oracle.marked.iter().map(|&n| state.probability_at(n)).sum()
}

/// The Grover iterate for a fixed `U` and oracle.
#[derive(Debug, Clone)]
pub struct GroverOperator {
    evolution: Evolution,
    oracle: OracleSpec,
}

impl GroverOperator {
    pub fn new(lattice: &MomentumLattice, scheme: &InitScheme, oracle: OracleSpec) -> Result<Self> {
        Ok(Self::from_evolution(
            Evolution::for_scheme(lattice, scheme)?,
            oracle,
        ))
    }

    pub fn from_evolution(evolution: Evolution, oracle: OracleSpec) -> Self {
        Self { evolution, oracle }
    }

    pub fn evolution(&self) -> &Evolution {
        &self.evolution
    }

    pub fn oracle(&self) -> &OracleSpec {
        &self.oracle
    }

    pub fn lattice(&self) -> &MomentumLattice {
        self.evolution.lattice()
    }

    /// `U|0>`.
    pub fn prepare(&self) -> Result<RotorState> {
        self.prepare_with(&mut |s| s)
    }

    pub fn prepare_with(&self, strength: &mut dyn FnMut(f64) -> f64) -> Result<RotorState> {
        let zero = RotorState::basis(self.lattice(), 0)?;
        self.evolution
            .apply_with(zero, Direction::Forward, strength)
    }

    pub fn apply(&self, state: RotorState) -> Result<RotorState> {
        self.apply_with(state, &mut |s| s)
    }

    /// One iteration with every kick strength routed through `strength`.
    pub fn apply_with(
        &self,
        mut state: RotorState,
        strength: &mut dyn FnMut(f64) -> f64,
    ) -> Result<RotorState> {
        oracle_in_place(&mut state, &self.oracle);
        let mut state = self
            .evolution
            .apply_with(state, Direction::Reverse, strength)?;
        zero_reflection_in_place(&mut state);
        self.evolution
            .apply_with(state, Direction::Forward, strength)
    }

    pub fn success(&self, state: &RotorState) -> f64 {
        success_probability(state, &self.oracle)
    }
}

/// One Grover iteration built from the scheme's `U`.
pub fn grover_iteration(
    state: RotorState,
    oracle: &OracleSpec,
    scheme: &InitScheme,
) -> Result<RotorState> {
    let op = GroverOperator::new(state.lattice(), scheme, oracle.clone())?;
    op.apply(state)
}

fn half_angle(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(QkrError::ZeroOverlap);
    }
    if !(a <= 1.0 + 1e-12) {
        return Err(QkrError::InvalidParameter(format!(
            "success probability {a} > 1"
        )));
    }
    Ok(a.min(1.0).sqrt().asin())
}

/// `theta_g = asin(sqrt(a))`.
pub fn rotation_angle(a: f64) -> Result<f64> {
    half_angle(a)
}

/// Success after `k` ideal iterations, `sin^2((2k + 1) theta_g)`.
pub fn rotation_law(a0: f64, k: u64) -> f64 {
    let t = a0.clamp(0.0, 1.0).sqrt().asin();
    ((2 * k + 1) as f64 * t).sin().powi(2)
}

/// Iteration count for measuring: the integer nearest to
/// `pi / (4 theta_g) - 1/2`, which minimizes `|(2r + 1) theta_g - pi/2|` and
/// guarantees success `>= 1 - a` for `a <= 1/2`.
pub fn optimal_iterations(a: f64) -> Result<u64> {
    let t = half_angle(a)?;
    Ok((PI / (4.0 * t) - 0.5).round().max(0.0) as u64)
}

/// `floor(pi / (4 theta_g))`, the loop bound used for the per-site runtime.
pub fn loop_bound_iterations(a: f64) -> Result<u64> {
    let t = half_angle(a)?;
    Ok((PI / (4.0 * t)).floor() as u64)
}

/// `ceil(pi / (4 theta_g) - 1/2)` taken literally. Can overshoot the optimum
/// by one iteration; kept so the rounding discrepancy is observable.
pub fn ceiling_iterations(a: f64) -> Result<u64> {
    let t = half_angle(a)?;
    Ok((PI / (4.0 * t) - 0.5).ceil().max(0.0) as u64)
}

#[derive(Debug, Clone)]
pub struct AmplifyResult {
    /// Success after 0..=r iterations; entry 0 is `a0`.
    pub success_by_iteration: Vec<f64>,
    pub r_used: u64,
    pub a0: f64,
    pub theta_g: f64,
    pub initial_state: RotorState,
    pub final_state: RotorState,
}

impl AmplifyResult {
    pub fn final_success(&self) -> f64 {
        *self.success_by_iteration.last().unwrap_or(&self.a0)
    }

    pub fn peak_success(&self) -> f64 {
        self.success_by_iteration
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Runs amplitude amplification for `r` iterations (default
/// [`optimal_iterations`]) and records the success probability after each.
pub fn amplify(
    lattice: &MomentumLattice,
    scheme: &InitScheme,
    oracle: &OracleSpec,
    r: Option<u64>,
) -> Result<AmplifyResult> {
    let op = GroverOperator::new(lattice, scheme, oracle.clone())?;
    amplify_with(&op, r, |_, _| {})
}

/// [`amplify`] on a prepared operator; `observe(k, state)` sees every
/// intermediate state.
pub fn amplify_with(
    op: &GroverOperator,
    r: Option<u64>,
    mut observe: impl FnMut(u64, &RotorState),
) -> Result<AmplifyResult> {
    op.oracle.validate_on(op.lattice())?;
    let initial = op.prepare()?;
    let a0 = op.success(&initial);
    let theta_g = half_angle(a0)?;
    let r_used = match r {
        Some(r) => r,
        None => optimal_iterations(a0)?,
    };
    let mut success = Vec::with_capacity(r_used as usize + 1);
    success.push(a0);
    observe(0, &initial);
    let mut state = initial.clone();
    for k in 1..=r_used {
        state = op.apply(state)?;
        success.push(op.success(&state));
        observe(k, &state);
    }
    Ok(AmplifyResult {
        success_by_iteration: success,
        r_used,
        a0,
        theta_g,
        initial_state: initial,
        final_state: state,
    })
}

/// Default runtime assigned to window sites with zero probability.
pub const DEFAULT_RUNTIME_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeEstimate {
    pub t_avg: f64,
    pub sigma: f64,
    /// `2 sqrt(3) sigma`, the effective number of search sites.
    pub n_effective: f64,
    /// Inclusive momentum window.
    pub window: (i64, i64),
    pub zero_sites: usize,
    pub capped_sites: usize,
}

/// Average over single-site searches of `floor(pi / (4 asin sqrt(p_i)))`.
///
/// The window is the sites within `floor(sqrt(3) sigma)` of the rounded mean
/// momentum; the mean is over the sites in the window. An exactly uniform
/// distribution over `N` sites therefore returns the single-site value.
pub fn average_runtime(state: &RotorState) -> Result<RuntimeEstimate> {
    average_runtime_with_cap(state, DEFAULT_RUNTIME_CAP)
}

pub fn average_runtime_with_cap(state: &RotorState, cap: f64) -> Result<RuntimeEstimate> {
    let sigma = state.momentum_std();
    if !(sigma > 0.0) {
        return Err(QkrError::Degenerate(
            "momentum distribution has zero width".into(),
        ));
    }
    let center = state.mean_momentum().round() as i64;
    let half = (3f64.sqrt() * sigma).floor() as i64;
    let (lo, hi) = (center - half, center + half);
    let probs = state.probabilities();
    let lattice = state.lattice();
    let mut total = 0.0;
    let mut zero_sites = 0;
    let mut capped_sites = 0;
    for n in lo..=hi {
        let p = lattice.index_of(n).map(|j| probs[j]).unwrap_or(0.0);
        let runtime = if p > 0.0 {
            let r = (PI / (4.0 * p.min(1.0).sqrt().asin())).floor();
            if r > cap {
                capped_sites += 1;
                cap
            } else {
                r
            }
        } else {
            zero_sites += 1;
            cap
        };
        total += runtime;
    }
    let count = (hi - lo + 1) as usize;
    if zero_sites == count {
        return Err(QkrError::Degenerate(
            "no probability inside the runtime window".into(),
        ));
    }
    Ok(RuntimeEstimate {
        t_avg: total / count as f64,
        sigma,
        n_effective: 2.0 * 3f64.sqrt() * sigma,
        window: (lo, hi),
        zero_sites,
        capped_sites,
    })
}

/// `max p / mean p` over the same window as [`average_runtime`]; 1 for a
/// flat profile.
pub fn window_flatness(state: &RotorState) -> Result<f64> {
    let sigma = state.momentum_std();
    if !(sigma > 0.0) {
        return Err(QkrError::Degenerate(
            "momentum distribution has zero width".into(),
        ));
    }
    let center = state.mean_momentum().round() as i64;
    let half = (3f64.sqrt() * sigma).floor() as i64;
    let p: Vec<f64> = (center - half..=center + half)
        .map(|n| state.probability_at(n))
        .collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    Ok(p.iter().cloned().fold(0.0, f64::max) / mean)
}

/// Families of initial states whose width grows with a size parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFamily {
    /// Exactly uniform over `size` sites (`size` odd, >= 3).
    Uniform,
    /// Modified potential, `size` resonant kicks of strength `phi`.
    ModifiedPotential { phi: f64, harmonics: u32 },
    /// `size` resonant cosine kicks of strength `phi`.
    Cosine { phi: f64 },
    /// Detuned pair with kick strength `size` and `epsilon = shape / size^2`,
    /// which keeps the profile shape fixed as it widens.
    Detuned { shape: f64 },
}

impl ScalingFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ScalingFamily::Uniform => "uniform",
            ScalingFamily::ModifiedPotential { .. } => "modified",
            ScalingFamily::Cosine { .. } => "cosine",
            ScalingFamily::Detuned { .. } => "detuned",
        }
    }

    /// The family member at `size`, on a lattice wide enough to pass the guard.
    pub fn state(&self, size: f64) -> Result<RotorState> {
        let count = || -> Result<u32> {
            if size >= 1.0 && size.fract() == 0.0 {
                Ok(size as u32)
            } else {
                Err(QkrError::InvalidParameter(format!(
                    "kick count {size} must be a positive integer"
                )))
            }
        };
        match *self {
            ScalingFamily::Uniform => {
                if !(size >= 3.0) || size.fract() != 0.0 || (size as u64) % 2 == 0 {
                    return Err(QkrError::InvalidParameter(format!(
                        "uniform size {size} must be an odd integer >= 3"
                    )));
                }
                let half = (size as i64 - 1) / 2;
                let lattice = MomentumLattice::new(half as usize + half as usize / 4 + 8)?;
                RotorState::uniform(&lattice, -half, half)
            }
            ScalingFamily::ModifiedPotential { phi, harmonics } => {
                prepare_initial_auto(&InitScheme::modified(phi, harmonics, count()?))
            }
            ScalingFamily::Cosine { phi } => {
                prepare_initial_auto(&InitScheme::resonant(phi, count()?))
            }
            ScalingFamily::Detuned { shape } => {
                if !(size > 0.0) {
                    return Err(QkrError::InvalidParameter(
                        "kick strength must be positive".into(),
                    ));
                }
                prepare_initial_auto(&InitScheme::detuned_pair(size, shape / (size * size)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub size: f64,
    pub estimate: RuntimeEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub family: ScalingFamily,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln T_avg` against `ln N`.
    pub slope: f64,
    pub intercept: f64,
}

/// Average runtime across a family; fits `T_avg ~ N^slope` with `N = 2 sqrt(3) sigma`.
pub fn runtime_scaling(family: &ScalingFamily, sizes: &[f64]) -> Result<ScalingTable> {
    runtime_scaling_with_cap(family, sizes, DEFAULT_RUNTIME_CAP)
}

pub fn runtime_scaling_with_cap(
    family: &ScalingFamily,
    sizes: &[f64],
    cap: f64,
) -> Result<ScalingTable> {
    if sizes.len() < 4 {
        return Err(QkrError::Degenerate(
            "runtime scaling needs at least four sizes".into(),
        ));
    }
    let rows = sizes
        .par_iter()
        .map(|&size| {
            let state = family.state(size)?;
            Ok(ScalingRow {
                size,
                estimate: average_runtime_with_cap(&state, cap)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.estimate.n_effective).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.estimate.t_avg).collect();
    let (slope, intercept) = log_log_fit(&xs, &ys)?;
    Ok(ScalingTable {
        family: *family,
        rows,
        slope,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::prepare_initial;
    use crate::state::Representation;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn lat(n: usize) -> MomentumLattice {
        MomentumLattice::new(n).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let l = lat(2);
        let u = RotorState::uniform(&l, -2, 2).unwrap();
        let same = apply_oracle(u.clone(), &OracleSpec::default());
        assert_eq!(same.amplitudes(), u.amplitudes());
        let marked = OracleSpec::new([1]);
        let once = apply_oracle(u.clone(), &marked);
        assert_abs_diff_eq!(u.inner(&once).re, 0.6, epsilon = 1e-15);
        let twice = apply_oracle(once, &marked);
        assert_eq!(twice.amplitudes(), u.amplitudes());
    }

    #[test]
    fn zero_reflection_examples() {
        let l = lat(3);
        let z = apply_zero_reflection(RotorState::basis(&l, 0).unwrap());
        assert_eq!(z.amplitudes()[3], Complex64::new(-1.0, 0.0));
        let one = apply_zero_reflection(RotorState::basis(&l, 1).unwrap());
        assert_eq!(one.amplitudes()[4], Complex64::new(1.0, 0.0));
        let mut amps = vec![Complex64::new(0.0, 0.0); l.dim()];
        amps[3] = Complex64::new(0.6, 0.0);
        amps[4] = Complex64::new(0.8, 0.0);
        let s = RotorState::from_amplitudes(&l, amps, Representation::Momentum).unwrap();
        let r = apply_zero_reflection(s);
        assert_eq!(r.amplitudes()[3].re, -0.6);
        assert_eq!(r.amplitudes()[4].re, 0.8);
    }

    #[test]
    fn success_probability_examples() {
        let l = lat(4);
        let s = RotorState::basis(&l, 2).unwrap();
        assert_eq!(success_probability(&s, &OracleSpec::new([2, -1])), 1.0);
        assert_eq!(success_probability(&s, &OracleSpec::default()), 0.0);
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(optimal_iterations(1.0).unwrap(), 0);
        assert_eq!(optimal_iterations(0.25).unwrap(), 1);
        assert_abs_diff_eq!(rotation_law(0.25, 1), 1.0, epsilon = 1e-15);
        assert_eq!(optimal_iterations(1e-4).unwrap(), 78);
        assert_eq!(optimal_iterations(0.0).unwrap_err(), QkrError::ZeroOverlap);
        assert!(optimal_iterations(1.5).is_err());
        // literal ceiling overshoots here, nearest-integer does not
        assert_eq!(ceiling_iterations(1e-4).unwrap(), 79);
        assert_eq!(loop_bound_iterations(1e-4).unwrap(), 78);
    }

    #[test]
    fn fully_marked_is_fixed_point() {
        let l = lat(32);
        let scheme = InitScheme::resonant(1.0, 1);
        let all = OracleSpec::new(-32..=32);
        let res = amplify(&l, &scheme, &all, Some(4)).unwrap();
        for s in res.success_by_iteration {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_oracle_negates_state() {
        let l = lat(32);
        let scheme = InitScheme::resonant(2.0, 1);
        let psi = prepare_initial(&l, &scheme).unwrap();
        let g = grover_iteration(psi.clone(), &OracleSpec::default(), &scheme).unwrap();
        assert_abs_diff_eq!(psi.inner(&g).re, -1.0, epsilon = 1e-12);
        assert!(matches!(
            amplify(&l, &scheme, &OracleSpec::default(), None),
            Err(QkrError::ZeroOverlap)
        ));
    }

    #[test]
    fn one_iteration_rotation() {
        let l = lat(64);
        let scheme = InitScheme::resonant(2.0, 2);
        let psi = prepare_initial(&l, &scheme).unwrap();
        let oracle = OracleSpec::new([1, 3]);
        let a0 = success_probability(&psi, &oracle);
        let g = grover_iteration(psi, &oracle, &scheme).unwrap();
        let t = a0.sqrt().asin();
        assert_abs_diff_eq!(
            success_probability(&g, &oracle),
            (3.0 * t).sin().powi(2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn r_zero_returns_a0() {
        let l = lat(32);
        let res = amplify(
            &l,
            &InitScheme::resonant(2.0, 1),
            &OracleSpec::new([0]),
            Some(0),
        )
        .unwrap();
        assert_eq!(res.success_by_iteration.len(), 1);
        assert_eq!(res.success_by_iteration[0], res.a0);
    }

    #[test]
    fn out_of_lattice_mark_rejected() {
        let l = lat(16);
        assert!(matches!(
            amplify(
                &l,
                &InitScheme::resonant(1.0, 1),
                &OracleSpec::new([0, 40]),
                None
            ),
            Err(QkrError::IndexOutOfRange { index: 40, .. })
        ));
    }

    #[test]
    fn uniform_runtime_is_single_site_value() {
        for n in [5i64, 33, 101, 1025] {
            let state = ScalingFamily::Uniform.state(n as f64).unwrap();
            let est = average_runtime(&state).unwrap();
            let single = (PI / (4.0 * (1.0 / (n as f64).sqrt()).asin())).floor();
            assert_eq!(est.t_avg, single, "N = {n}");
            assert_eq!(est.window, (-(n - 1) / 2, (n - 1) / 2));
            assert_eq!(est.zero_sites, 0);
        }
    }

    #[test]
    fn runtime_of_delta_is_degenerate() {
        let l = lat(4);
        assert!(matches!(
            average_runtime(&RotorState::basis(&l, 0).unwrap()),
            Err(QkrError::Degenerate(_))
        ));
    }

    #[test]
    fn zero_sites_in_window_are_capped() {
        // support {-3, 3}: sigma = 3, window -5..=5, nine empty sites
        let l = lat(8);
        let mut amps = vec![Complex64::new(0.0, 0.0); l.dim()];
        amps[l.index_of(-3).unwrap()] = Complex64::new(0.5f64.sqrt(), 0.0);
        amps[l.index_of(3).unwrap()] = Complex64::new(0.5f64.sqrt(), 0.0);
        let s = RotorState::from_amplitudes(&l, amps, Representation::Momentum).unwrap();
        let est = average_runtime_with_cap(&s, 100.0).unwrap();
        assert_eq!(est.window, (-5, 5));
        assert_eq!(est.zero_sites, 9);
        let occupied = (PI / (4.0 * 0.5f64.sqrt().asin())).floor();
        assert_abs_diff_eq!(
            est.t_avg,
            (9.0 * 100.0 + 2.0 * occupied) / 11.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn scaling_needs_four_sizes() {
        assert!(runtime_scaling(&ScalingFamily::Uniform, &[5.0, 9.0, 17.0]).is_err());
        assert!(ScalingFamily::Uniform.state(8.0).is_err());
    }

    #[test]
    fn sigma_fraction_oracle() {
        let l = lat(16);
        let s = RotorState::uniform(&l, -4, 4).unwrap();
        let o = OracleSpec::from_sigma_fractions(&s, &[-0.5, 0.0, 0.5]);
        // sigma = sqrt(20/3) ~ 2.58
        assert_eq!(o.marked(), &[-1, 0, 1]);
    }
}

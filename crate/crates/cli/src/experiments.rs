//! The eight experiments. Each reads its keys from the config (recording
//! the values used) and returns the tables to write.

use std::f64::consts::PI;

use clap::ValueEnum;
use qkr_core::estimation::{exact_expectation, sample_expectation};
use qkr_core::floquet::prepare_initial_auto;
use qkr_core::grover::{
    amplify_with, ceiling_iterations, loop_bound_iterations, rotation_law,
    runtime_scaling_with_cap, window_flatness,
};
use qkr_core::robustness::{
    analytic_averaged_rho, detuning_sensitivity, error_scaling, noise_derivative, noisy_amplify,
    Sampling,
};
use qkr_core::{
    apply_kick, average_runtime, optimal_iterations, prepare_initial, DensityMatrix,
    GroverOperator, InitScheme, KickPotential, MomentumLattice, NoiseModel, OracleSpec, RotorState,
    ScalingFamily, SchemeKind, TruncationGuard,
};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Walk,
    InitProfile,
    Amplify,
    Estimate,
    NoiseSweep,
    ErrorScaling,
    DetuneSweep,
    RuntimeScaling,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Walk => "walk",
            Experiment::InitProfile => "init-profile",
            Experiment::Amplify => "amplify",
            Experiment::Estimate => "estimate",
            Experiment::NoiseSweep => "noise-sweep",
            Experiment::ErrorScaling => "error-scaling",
            Experiment::DetuneSweep => "detune-sweep",
            Experiment::RuntimeScaling => "runtime-scaling",
        }
    }
}

/// Largest lattice for which density matrices are formed.
pub const DENSITY_DIM_CAP: usize = 1025;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Level {
    Warning,
    Notice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

impl Diagnostic {
    pub fn render(&self) -> String {
        let tag = match self.level {
            Level::Warning => "warning",
            Level::Notice => "notice",
        };
        format!("{tag}: {}", self.message)
    }
}

/// Lattice narrower than twice the total kick strength.
pub fn truncation_diagnostic(n_max: usize, total_strength: f64) -> Option<Diagnostic> {
    ((n_max as f64) < 2.0 * total_strength.abs()).then(|| Diagnostic {
        level: Level::Warning,
        message: format!(
            "n_max = {n_max} is below twice the total kick strength {total_strength}; the truncation guard may trip"
        ),
    })
}

pub fn epsilon_diagnostic(epsilon: f64) -> Option<Diagnostic> {
    (epsilon >= 0.5).then(|| Diagnostic {
        level: Level::Warning,
        message: format!("epsilon = {epsilon} is outside the small-detuning regime (epsilon << 1)"),
    })
}

/// The literal ceiling count and the loop bound disagree for this overlap.
pub fn rounding_diagnostic(a: f64) -> Option<Diagnostic> {
    let ceil = ceiling_iterations(a).ok()?;
    let floor = loop_bound_iterations(a).ok()?;
    let chosen = optimal_iterations(a).ok()?;
    (ceil != floor).then(|| Diagnostic {
        level: Level::Notice,
        message: format!(
            "a0 = {a}: ceil(pi/(4 theta) - 1/2) = {ceil} differs from floor(pi/(4 theta)) = {floor}; using {chosen}"
        ),
    })
}

pub struct Run<'a> {
    pub cfg: &'a Config,
    pub seed: u64,
    pub diagnostics: Vec<Diagnostic>,
    /// Main table and suffixed side tables.
    pub tables: Vec<(Option<&'static str>, Table)>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a Config, seed: u64) -> Self {
        Self {
            cfg,
            seed,
            diagnostics: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn diag(&mut self, d: Option<Diagnostic>) {
        if let Some(d) = d {
            self.diagnostics.push(d);
        }
    }

    pub fn execute(&mut self, experiment: Experiment) -> CliResult<()> {
        match experiment {
            Experiment::Walk => self.walk(),
            Experiment::InitProfile => self.init_profile(),
            Experiment::Amplify => self.amplify(),
            Experiment::Estimate => self.estimate(),
            Experiment::NoiseSweep => self.noise_sweep(),
            Experiment::ErrorScaling => self.error_scaling(),
            Experiment::DetuneSweep => self.detune_sweep(),
            Experiment::RuntimeScaling => self.runtime_scaling(),
        }
    }

    fn guard(&self) -> CliResult<TruncationGuard> {
        let enabled = self.cfg.word("guard", "on", &["on", "off"])? == "on";
        let threshold = self
            .cfg
            .get("guard_threshold", TruncationGuard::default().threshold)?;
        if !(threshold > 0.0) {
            return Err(CliError::Config("guard_threshold must be positive".into()));
        }
        Ok(TruncationGuard {
            enabled,
            threshold,
            ..TruncationGuard::default()
        })
    }

    /// `n_max = auto` picks the smallest doubling that passes the guard for
    /// `U|0>` of each scheme.
    fn lattice(&mut self, schemes: &[InitScheme]) -> CliResult<MomentumLattice> {
        let guard = self.guard()?;
        let n_max = match self.cfg.get_opt::<String>("n_max")?.as_deref() {
            None | Some("auto") => {
                let mut n = 0;
                for s in schemes {
                    n = n.max(prepare_initial_auto(s)?.lattice().n_max());
                }
                self.cfg.note("n_max", n);
                n
            }
            Some(text) => {
                let n: usize = text.parse().map_err(|_| {
                    CliError::Config(format!("cannot parse '{text}' for key 'n_max'"))
                })?;
                for s in schemes {
                    self.diag(truncation_diagnostic(n, s.total_strength()));
                }
                n
            }
        };
        Ok(MomentumLattice::with_guard(n_max, guard)?)
    }

    fn scheme(
        &mut self,
        default_kind: &str,
        default_phi: f64,
        default_kicks: u32,
    ) -> CliResult<InitScheme> {
        let kind = self
            .cfg
            .word("scheme", default_kind, &["resonant", "modified", "detuned"])?;
        let phi = self.cfg.get("phi", default_phi)?;
        let scheme = match kind.as_str() {
            "resonant" => InitScheme::resonant(phi, self.cfg.get("kicks", default_kicks)?),
            "modified" => InitScheme::modified(
                phi,
                self.cfg.get("harmonics", 100u32)?,
                self.cfg.get("kicks", default_kicks)?,
            ),
            _ => {
                let eps = self.cfg.get("epsilon", 0.2)?;
                self.diag(epsilon_diagnostic(eps));
                InitScheme::detuned_pair(phi, eps)
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }

    fn oracle(&mut self, psi: &RotorState, default: &str) -> CliResult<OracleSpec> {
        let oracle = match self.cfg.list_opt::<f64>("marked_sigma")? {
            Some(fractions) => {
                let o = OracleSpec::from_sigma_fractions(psi, &fractions);
                self.cfg.note(
                    "marked",
                    o.marked()
                        .iter()
                        .map(i64::to_string)
                        .collect::<Vec<_>>()
                        .join(","),
                );
                o
            }
            None => OracleSpec::new(self.cfg.list::<i64>("marked", default)?),
        };
        if oracle.is_empty() {
            return Err(CliError::Config("marked set is empty".into()));
        }
        oracle.validate_on(psi.lattice())?;
        Ok(oracle)
    }

    /// `k_max` or `2 r* + 2` from the noiseless overlap.
    fn k_max(&mut self, a0: f64) -> CliResult<u64> {
        match self.cfg.get_opt::<u64>("k_max")? {
            Some(k) => Ok(k),
            None => {
                let k = 2 * optimal_iterations(a0)? + 2;
                self.cfg.note("k_max", k);
                Ok(k)
            }
        }
    }

    fn walk(&mut self) -> CliResult<()> {
        let potential_kind = self
            .cfg
            .word("potential", "cosine", &["cosine", "modified"])?;
        let phi = self.cfg.get("phi", 2.0)?;
        let kicks = self.cfg.get("kicks", 20u32)?;
        let (scheme, potential) = if potential_kind == "cosine" {
            (
                InitScheme::resonant(phi, kicks.max(1)),
                KickPotential::cosine(),
            )
        } else {
            let m = self.cfg.get("harmonics", 100u32)?;
            (
                InitScheme::modified(phi, m, kicks.max(1)),
                KickPotential::modified(m)?,
            )
        };
        let lattice = self.lattice(&[scheme])?;
        let mut table = Table::new(&["kick", "n", "probability"]);
        let mut state = RotorState::basis(&lattice, 0)?;
        for k in 0..=kicks {
            if k > 0 {
                state = apply_kick(state, &potential, phi).to_momentum();
                state.check_truncation()?;
            }
            for (j, p) in state.probabilities().into_iter().enumerate() {
                table.push(vec![
                    Cell::from(k as u64),
                    Cell::from(lattice.momentum(j)),
                    Cell::from(p),
                ]);
            }
        }
        table.result("mean_energy", state.mean_energy());
        table.result("momentum_std", state.momentum_std());
        if potential_kind == "cosine" {
            table.result("ballistic_energy", (kicks as f64 * phi).powi(2) / 4.0);
        }
        self.tables.push((None, table));
        Ok(())
    }

    fn init_profile(&mut self) -> CliResult<()> {
        let phi = self.cfg.get("phi", 2.0)?;
        let kicks = self.cfg.get("kicks", 2u32)?;
        let m = self.cfg.get("harmonics", 100u32)?;
        let eps = self.cfg.get("epsilon", 0.2)?;
        self.diag(epsilon_diagnostic(eps));
        let schemes = [
            ("resonant", InitScheme::resonant(phi, kicks)),
            ("modified", InitScheme::modified(phi, m, kicks)),
            ("detuned", InitScheme::detuned_pair(phi, eps)),
        ];
        for (_, s) in &schemes {
            s.validate()?;
        }
        let lattice = self.lattice(&schemes.map(|s| s.1))?;
        let mut summary = Table::new(&[
            "scheme",
            "mean_momentum",
            "sigma",
            "flatness",
            "t_avg",
            "n_effective",
        ]);
        for (name, scheme) in schemes {
            let psi = prepare_initial(&lattice, &scheme)?;
            let runtime = average_runtime(&psi)?;
            summary.push(vec![
                Cell::from(name),
                Cell::from(psi.mean_momentum()),
                Cell::from(psi.momentum_std()),
                Cell::from(window_flatness(&psi)?),
                Cell::from(runtime.t_avg),
                Cell::from(runtime.n_effective),
            ]);
            let mut profile = Table::new(&["n", "probability"]);
            for (j, p) in psi.probabilities().into_iter().enumerate() {
                profile.push(vec![Cell::from(lattice.momentum(j)), Cell::from(p)]);
            }
            let suffix = match name {
                "resonant" => "resonant",
                "modified" => "modified",
                _ => "detuned",
            };
            self.tables.push((Some(suffix), profile));
        }
        self.tables.insert(0, (None, summary));
        Ok(())
    }

    fn amplify(&mut self) -> CliResult<()> {
        let scheme = self.scheme("modified", 2.0, 2)?;
        let lattice = self.lattice(&[scheme])?;
        let psi = prepare_initial(&lattice, &scheme)?;
        let oracle = self.oracle(&psi, "-1,0,1")?;
        let op = GroverOperator::new(&lattice, &scheme, oracle)?;
        let a0 = op.success(&psi);
        self.diag(rounding_diagnostic(a0));
        let r = self.cfg.get_opt::<u64>("iterations")?;
        let mut profiles = Table::new(&["iteration", "n", "probability"]);
        let res = amplify_with(&op, r, |k, s| {
            for (j, p) in s.probabilities().into_iter().enumerate() {
                profiles.push(vec![
                    Cell::from(k),
                    Cell::from(lattice.momentum(j)),
                    Cell::from(p),
                ]);
            }
        })?;
        let mut table = Table::new(&["iteration", "success_probability", "rotation_law"]);
        for (k, s) in res.success_by_iteration.iter().enumerate() {
            table.push(vec![
                Cell::from(k),
                Cell::from(*s),
                Cell::from(rotation_law(a0, k as u64)),
            ]);
        }
        table.result("a0", a0);
        table.result("theta_g", res.theta_g);
        table.result("r_used", res.r_used);
        table.result("optimal_iterations", optimal_iterations(a0)?);
        table.result("loop_bound_iterations", loop_bound_iterations(a0)?);
        table.result("final_success", res.final_success());
        self.tables.push((None, table));
        self.tables.push((Some("profiles"), profiles));
        Ok(())
    }

    fn estimate(&mut self) -> CliResult<()> {
        let scheme = self.scheme("modified", 2.0, 2)?;
        let lattice = self.lattice(&[scheme])?;
        let psi = prepare_initial(&lattice, &scheme)?;
        let oracle = self.oracle(&psi, "-1,0,1")?;
        let shots = self.cfg.get("shots", 1000u64)?;
        let repeats = self.cfg.get("repeats", 1u64)?;
        let a0 = qkr_core::success_probability(&psi, &oracle);
        let exact = exact_expectation(&lattice, &scheme, &oracle)?;
        let mut table = Table::new(&[
            "repeat",
            "shots",
            "shot_seed",
            "expectation",
            "theta_hat",
            "a_hat",
            "r_hat",
        ]);
        for i in 0..repeats {
            let shot_seed = self.seed.wrapping_add(i);
            let res = if shots == 0 {
                qkr_core::estimate_amplitude(&lattice, &scheme, &oracle, 0, shot_seed)?
            } else {
                sample_expectation(exact, shots, shot_seed)?
            };
            table.push(vec![
                Cell::from(i),
                Cell::from(shots),
                Cell::from(shot_seed),
                Cell::from(res.expectation),
                Cell::from(res.theta_hat),
                Cell::from(res.a_hat),
                Cell::from(res.r_hat),
            ]);
        }
        table.result("a0", a0);
        table.result("exact_expectation", exact);
        table.result("closed_form_expectation", -(2.0 * a0.sqrt().asin()).cos());
        self.tables.push((None, table));
        Ok(())
    }

    fn noise_setup(
        &mut self,
        default_marked: &str,
    ) -> CliResult<(InitScheme, MomentumLattice, OracleSpec, f64)> {
        let scheme = self.scheme("resonant", 0.25, 200)?;
        let lattice = self.lattice(&[scheme])?;
        let psi = prepare_initial(&lattice, &scheme)?;
        let oracle = self.oracle(&psi, default_marked)?;
        let a0 = qkr_core::success_probability(&psi, &oracle);
        if !(a0 > 0.0) {
            return Err(qkr_core::QkrError::ZeroOverlap.into());
        }
        Ok((scheme, lattice, oracle, a0))
    }

    fn sampling(&self) -> CliResult<Sampling> {
        Ok(
            match self
                .cfg
                .word("sampling", "independent", &["independent", "antithetic"])?
                .as_str()
            {
                "antithetic" => Sampling::Antithetic,
                _ => Sampling::Independent,
            },
        )
    }

    fn noise_sweep(&mut self) -> CliResult<()> {
        let (scheme, lattice, oracle, a0) = self.noise_setup("0")?;
        let k_max = self.k_max(a0)?;
        let gammas: Vec<f64> = self.cfg.list("gammas", "0,0.001,0.01,0.05")?;
        let realizations = self.cfg.get("realizations", 200usize)?;
        let sampling = self.sampling()?;
        let mut table = Table::new(&["gamma", "iteration", "success", "stderr"]);
        for &g in &gammas {
            let model = NoiseModel::from_gamma(scheme.phi, g, self.seed, realizations)?;
            let row = noisy_amplify(&lattice, &scheme, &oracle, &model, k_max, sampling)?;
            for (k, (s, e)) in row.success.iter().zip(&row.stderr).enumerate() {
                table.push(vec![
                    Cell::from(g),
                    Cell::from(k),
                    Cell::from(*s),
                    Cell::from(*e),
                ]);
            }
        }
        table.result("a0", a0);
        self.tables.push((None, table));

        let profile_gammas: Vec<f64> = self.cfg.list("profile_gammas", "0,0.05,0.2")?;
        let count = match scheme.kind {
            SchemeKind::ResonantKicks { count }
            | SchemeKind::ModifiedPotentialKicks { count, .. } => count,
            SchemeKind::DetunedPair { .. } => {
                self.diag(Some(Diagnostic {
                    level: Level::Notice,
                    message: "noise-averaged profiles need resonant kicks; skipped for the detuned scheme".into(),
                }));
                return Ok(());
            }
        };
        if lattice.dim() > DENSITY_DIM_CAP {
            self.diag(Some(Diagnostic {
                level: Level::Notice,
                message: format!(
                    "lattice dimension {} exceeds {DENSITY_DIM_CAP}; profiles skipped",
                    lattice.dim()
                ),
            }));
            return Ok(());
        }
        let potential = scheme.potential()?;
        let rho0 = DensityMatrix::from_pure(&RotorState::basis(&lattice, 0)?);
        let mut profiles = Table::new(&["gamma", "n", "probability"]);
        for &g in &profile_gammas {
            let rho =
                analytic_averaged_rho(&rho0, &potential, scheme.phi, g * scheme.phi.abs(), count);
            for (j, p) in rho.momentum_probabilities().into_iter().enumerate() {
                profiles.push(vec![
                    Cell::from(g),
                    Cell::from(lattice.momentum(j)),
                    Cell::from(p),
                ]);
            }
        }
        self.tables.push((Some("profiles"), profiles));
        Ok(())
    }

    fn error_scaling(&mut self) -> CliResult<()> {
        let (scheme, lattice, oracle, a0) = self.noise_setup("0")?;
        let k_max = self.k_max(a0)?;
        let gammas: Vec<f64> = self.cfg.list("gammas", "2e-4,5e-4,1e-3")?;
        let realizations = self.cfg.get("realizations", 1000usize)?;
        let tolerance = self.cfg.get("tolerance", 0.25)?;
        let h = self.cfg.get("derivative_gamma", 1e-3)?;
        let base = NoiseModel::new(scheme.phi, 0.0, self.seed, realizations)?;
        let res = error_scaling(&lattice, &scheme, &oracle, &base, &gammas, k_max, tolerance)?;
        let mut table = Table::new(&[
            "gamma",
            "iteration",
            "success",
            "stderr",
            "rescaled_deviation",
        ]);
        for (i, &g) in res.gammas.iter().enumerate() {
            for k in 0..res.noiseless.len() {
                table.push(vec![
                    Cell::from(g),
                    Cell::from(k),
                    Cell::from(res.success_curves[i][k]),
                    Cell::from(res.stderr_curves[i][k]),
                    Cell::from(res.rescaled_deviations[i][k]),
                ]);
            }
        }
        let deriv = noise_derivative(
            &lattice,
            &scheme,
            &oracle,
            &base.with_delta(h * scheme.phi.abs()),
            res.peak_iteration as u64,
        )?;
        table.result("a0", a0);
        table.result("peak_iteration", res.peak_iteration);
        table.result("collapse_spread", res.collapse_spread);
        table.result("first_derivative", deriv.first);
        table.result("first_derivative_se", deriv.first_se);
        table.result("second_derivative", deriv.second);
        table.result("second_derivative_se", deriv.second_se);
        self.tables.push((None, table));
        Ok(())
    }

    fn detune_sweep(&mut self) -> CliResult<()> {
        let phi = self.cfg.get("phi", 0.25)?;
        let kicks = self.cfg.get("kicks", 1u32)?;
        let ideal = InitScheme::resonant(phi, kicks);
        ideal.validate()?;
        let lattice = self.lattice(&[ideal])?;
        let psi = prepare_initial(&lattice, &ideal)?;
        let oracle = self.oracle(&psi, "1")?;
        let a0 = qkr_core::success_probability(&psi, &oracle);
        if !(a0 > 0.0) {
            return Err(qkr_core::QkrError::ZeroOverlap.into());
        }
        let k_max = self.k_max(a0)?;
        let epsilons: Vec<f64> = self.cfg.list("epsilons", "0,1e-6,1e-5,1e-4,1e-3")?;
        let rows = detuning_sensitivity(&lattice, phi, kicks, &oracle, &epsilons, k_max)?;
        let ideal_peak = (0..=k_max).map(|k| rotation_law(a0, k)).fold(0.0, f64::max);
        let mut table = Table::new(&["epsilon", "iteration", "success"]);
        let mut peaks = Table::new(&["epsilon", "peak_success", "peak_iteration", "fidelity_loss"]);
        for row in &rows {
            for (k, s) in row.success.iter().enumerate() {
                table.push(vec![Cell::from(row.epsilon), Cell::from(k), Cell::from(*s)]);
            }
            peaks.push(vec![
                Cell::from(row.epsilon),
                Cell::from(row.peak),
                Cell::from(row.peak_iteration),
                Cell::from(ideal_peak - row.peak),
            ]);
        }
        table.result("a0", a0);
        table.result("ideal_peak", ideal_peak);
        table.result("epsilon_prime_factor", 4.0 * PI);
        self.tables.push((None, table));
        self.tables.push((Some("peaks"), peaks));
        Ok(())
    }

    fn runtime_scaling(&mut self) -> CliResult<()> {
        let family_name = self.cfg.word(
            "family",
            "uniform",
            &["uniform", "modified", "cosine", "detuned"],
        )?;
        let (family, default_sizes) = match family_name.as_str() {
            "uniform" => (ScalingFamily::Uniform, "65,129,257,513,1025,2049,4097"),
            "modified" => (
                ScalingFamily::ModifiedPotential {
                    phi: self.cfg.get("phi", 2.0)?,
                    harmonics: self.cfg.get("harmonics", 100u32)?,
                },
                "1,2,4,8,16,32",
            ),
            "cosine" => (
                ScalingFamily::Cosine {
                    phi: self.cfg.get("phi", 2.0)?,
                },
                "1,2,4,8,16,32",
            ),
            _ => (
                ScalingFamily::Detuned {
                    shape: self.cfg.get("shape", 0.8)?,
                },
                "2,4,8,16,32",
            ),
        };
        let sizes: Vec<f64> = self.cfg.list("sizes", default_sizes)?;
        let cap = self
            .cfg
            .get("runtime_cap", qkr_core::grover::DEFAULT_RUNTIME_CAP)?;
        let res = runtime_scaling_with_cap(&family, &sizes, cap)?;
        let mut table = Table::new(&[
            "size",
            "sigma",
            "n_effective",
            "t_avg",
            "window_lo",
            "window_hi",
            "zero_sites",
            "capped_sites",
        ]);
        for row in &res.rows {
            let e = &row.estimate;
            table.push(vec![
                Cell::from(row.size),
                Cell::from(e.sigma),
                Cell::from(e.n_effective),
                Cell::from(e.t_avg),
                Cell::from(e.window.0),
                Cell::from(e.window.1),
                Cell::from(e.zero_sites),
                Cell::from(e.capped_sites),
            ]);
        }
        table.result("family", family.name());
        table.result("slope", res.slope);
        table.result("intercept", res.intercept);
        self.tables.push((None, table));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_heuristic() {
        assert!(truncation_diagnostic(32, 200.0).is_some());
        assert!(truncation_diagnostic(128, 40.0).is_none());
    }

    #[test]
    fn rounding_notice_fires_only_on_disagreement() {
        // pi/(4 theta) just above an integer: ceil(x - 1/2) = floor(x) + 1
        let hits: Vec<f64> = (1..400)
            .map(|i| i as f64 / 800.0)
            .filter(|&a| rounding_diagnostic(a).is_some())
            .collect();
        assert!(!hits.is_empty());
        for a in hits {
            assert_ne!(
                ceiling_iterations(a).unwrap(),
                loop_bound_iterations(a).unwrap()
            );
        }
        assert!(rounding_diagnostic(0.25).is_none());
        assert!(epsilon_diagnostic(0.2).is_none());
        assert!(epsilon_diagnostic(1.0).is_some());
    }
}

//! Python bindings: kicked-rotor state preparation, amplitude amplification,
//! amplitude estimation, runtime estimates and noisy amplification.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qkr_core::floquet::prepare_initial_auto;
use qkr_core::grover::{runtime_scaling_with_cap, DEFAULT_RUNTIME_CAP};
use qkr_core::robustness::{noisy_amplify as core_noisy_amplify, Sampling};
use qkr_core::{
    InitScheme, MomentumLattice, NoiseModel, OracleSpec, QkrError, RotorState, ScalingFamily,
};

create_exception!(
    qkr,
    TruncationError,
    PyRuntimeError,
    "Probability reached the lattice edge."
);

fn to_py(e: QkrError) -> PyErr {
    match e {
        QkrError::TruncationGuard { .. } => TruncationError::new_err(e.to_string()),
        QkrError::Numerical(_)
        | QkrError::InsufficientRealizations(_)
        | QkrError::Degenerate(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Initial-state preparation scheme.
#[pyclass(name = "Scheme", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScheme(InitScheme);

#[pymethods]
impl PyScheme {
    #[staticmethod]
    #[pyo3(signature = (phi, count=1))]
    fn resonant(phi: f64, count: u32) -> PyResult<Self> {
        let s = InitScheme::resonant(phi, count);
        s.validate().map_err(to_py)?;
        Ok(Self(s))
    }

    #[staticmethod]
    #[pyo3(signature = (phi, harmonics=100, count=1))]
    fn modified(phi: f64, harmonics: u32, count: u32) -> PyResult<Self> {
        let s = InitScheme::modified(phi, harmonics, count);
        s.validate().map_err(to_py)?;
        Ok(Self(s))
    }

    #[staticmethod]
    fn detuned_pair(phi: f64, epsilon: f64) -> PyResult<Self> {
        let s = InitScheme::detuned_pair(phi, epsilon);
        s.validate().map_err(to_py)?;
        Ok(Self(s))
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.0.phi
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Rotor state on a truncated momentum lattice.
#[pyclass(name = "State", frozen)]
struct PyState(RotorState);

#[pymethods]
impl PyState {
    #[getter]
    fn n_max(&self) -> usize {
        self.0.lattice().n_max()
    }

    fn momenta(&self) -> Vec<i64> {
        let lat = self.0.lattice();
        (0..lat.dim()).map(|j| lat.momentum(j)).collect()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.0.probabilities()
    }

    fn probability_at(&self, n: i64) -> f64 {
        self.0.probability_at(n)
    }

    fn mean_energy(&self) -> f64 {
        self.0.mean_energy()
    }

    fn mean_momentum(&self) -> f64 {
        self.0.mean_momentum()
    }

    fn momentum_std(&self) -> f64 {
        self.0.momentum_std()
    }

    fn success(&self, marked: Vec<i64>) -> f64 {
        qkr_core::success_probability(&self.0, &OracleSpec::new(marked))
    }
}

#[pyclass(name = "AmplifyResult", frozen, get_all)]
struct PyAmplifyResult {
    /// Success after 0..=r iterations.
    success: Vec<f64>,
    r_used: u64,
    a0: f64,
    theta_g: f64,
}

#[pyclass(name = "Estimate", frozen, get_all)]
struct PyEstimate {
    expectation: f64,
    theta_hat: f64,
    a_hat: f64,
    shots: u64,
    r_hat: u64,
}

#[pyclass(name = "Runtime", frozen, get_all)]
struct PyRuntime {
    t_avg: f64,
    sigma: f64,
    n_effective: f64,
    window: (i64, i64),
}

fn lattice_for(scheme: &InitScheme, n_max: Option<usize>) -> PyResult<MomentumLattice> {
    match n_max {
        Some(n) => MomentumLattice::new(n).map_err(to_py),
        None => Ok(prepare_initial_auto(scheme)
            .map_err(to_py)?
            .lattice()
            .clone()),
    }
}

/// `U|0>`; the lattice is sized automatically unless `n_max` is given.
#[pyfunction]
#[pyo3(signature = (scheme, n_max=None))]
fn prepare_initial(scheme: &PyScheme, n_max: Option<usize>) -> PyResult<PyState> {
    let lat = lattice_for(&scheme.0, n_max)?;
    Ok(PyState(
        qkr_core::prepare_initial(&lat, &scheme.0).map_err(to_py)?,
    ))
}

#[pyfunction]
fn optimal_iterations(a: f64) -> PyResult<u64> {
    qkr_core::optimal_iterations(a).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (scheme, marked, iterations=None, n_max=None))]
fn amplify(
    py: Python<'_>,
    scheme: &PyScheme,
    marked: Vec<i64>,
    iterations: Option<u64>,
    n_max: Option<usize>,
) -> PyResult<PyAmplifyResult> {
    let lat = lattice_for(&scheme.0, n_max)?;
    let oracle = OracleSpec::new(marked);
    let res = py
        .detach(|| qkr_core::amplify(&lat, &scheme.0, &oracle, iterations))
        .map_err(to_py)?;
    Ok(PyAmplifyResult {
        success: res.success_by_iteration,
        r_used: res.r_used,
        a0: res.a0,
        theta_g: res.theta_g,
    })
}

/// Spin-readout estimate of the marked overlap; `shots = 0` is the exact
/// expectation.
#[pyfunction]
#[pyo3(signature = (scheme, marked, shots, seed, n_max=None))]
fn estimate_amplitude(
    py: Python<'_>,
    scheme: &PyScheme,
    marked: Vec<i64>,
    shots: u64,
    seed: u64,
    n_max: Option<usize>,
) -> PyResult<PyEstimate> {
    let lat = lattice_for(&scheme.0, n_max)?;
    let oracle = OracleSpec::new(marked);
    let r = py
        .detach(|| qkr_core::estimate_amplitude(&lat, &scheme.0, &oracle, shots, seed))
        .map_err(to_py)?;
    Ok(PyEstimate {
        expectation: r.expectation,
        theta_hat: r.theta_hat,
        a_hat: r.a_hat,
        shots: r.shots,
        r_hat: r.r_hat,
    })
}

#[pyfunction]
fn average_runtime(state: &PyState) -> PyResult<PyRuntime> {
    let e = qkr_core::average_runtime(&state.0).map_err(to_py)?;
    Ok(PyRuntime {
        t_avg: e.t_avg,
        sigma: e.sigma,
        n_effective: e.n_effective,
        window: e.window,
    })
}

/// Returns `(slope, [(n_effective, t_avg), ...])` for the named family.
#[pyfunction]
#[pyo3(signature = (family, sizes, phi=2.0, harmonics=100, shape=0.8))]
fn runtime_scaling(
    py: Python<'_>,
    family: &str,
    sizes: Vec<f64>,
    phi: f64,
    harmonics: u32,
    shape: f64,
) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let family = match family {
        "uniform" => ScalingFamily::Uniform,
        "modified" => ScalingFamily::ModifiedPotential { phi, harmonics },
        "cosine" => ScalingFamily::Cosine { phi },
        "detuned" => ScalingFamily::Detuned { shape },
        other => return Err(PyValueError::new_err(format!("unknown family '{other}'"))),
    };
    let table = py
        .detach(|| runtime_scaling_with_cap(&family, &sizes, DEFAULT_RUNTIME_CAP))
        .map_err(to_py)?;
    Ok((
        table.slope,
        table
            .rows
            .iter()
            .map(|r| (r.estimate.n_effective, r.estimate.t_avg))
            .collect(),
    ))
}

/// Noise-averaged success per iteration under kick-strength noise of
/// relative width `gamma`; returns `(success, stderr)`.
#[pyfunction]
#[pyo3(signature = (scheme, marked, gamma, realizations, seed, k_max, antithetic=true, n_max=None))]
#[allow(clippy::too_many_arguments)]
fn noisy_amplify(
    py: Python<'_>,
    scheme: &PyScheme,
    marked: Vec<i64>,
    gamma: f64,
    realizations: usize,
    seed: u64,
    k_max: u64,
    antithetic: bool,
    n_max: Option<usize>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let lat = lattice_for(&scheme.0, n_max)?;
    let oracle = OracleSpec::new(marked);
    let model = NoiseModel::from_gamma(scheme.0.phi, gamma, seed, realizations).map_err(to_py)?;
    let sampling = if antithetic {
        Sampling::Antithetic
    } else {
        Sampling::Independent
    };
    let row = py
        .detach(|| core_noisy_amplify(&lat, &scheme.0, &oracle, &model, k_max, sampling))
        .map_err(to_py)?;
    Ok((row.success, row.stderr))
}

#[pymodule]
fn qkr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TruncationError", m.py().get_type::<TruncationError>())?;
    m.add_class::<PyScheme>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyAmplifyResult>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyRuntime>()?;
    m.add_function(wrap_pyfunction!(prepare_initial, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_iterations, m)?)?;
    m.add_function(wrap_pyfunction!(amplify, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(average_runtime, m)?)?;
    m.add_function(wrap_pyfunction!(runtime_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_amplify, m)?)?;
    Ok(())
}

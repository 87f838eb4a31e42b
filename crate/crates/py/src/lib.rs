//! Python bindings. Results are returned as plain dicts, lists and floats.

use lerrw::analytic;
use lerrw::environment::Environment;
use lerrw::harness::{self, ExperimentConfig};
use lerrw::oracle::{self, Arithmetic, Path};
use lerrw::simulator::{self, CheckpointSchedule, RunOptions, Trajectory};
use lerrw::special;
use lerrw::WalkConfig;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

fn err(e: lerrw::Error) -> PyErr {
    match e {
        lerrw::Error::Domain(_) | lerrw::Error::InvalidConfig(_) | lerrw::Error::SizeLimit(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn arithmetic(exact: Option<bool>) -> Arithmetic {
    match exact {
        None => Arithmetic::Auto,
        Some(true) => Arithmetic::Exact,
        Some(false) => Arithmetic::Float,
    }
}

fn schedule(n_steps: u64, checkpoints: Option<Vec<u64>>) -> PyResult<CheckpointSchedule> {
    match checkpoints {
        Some(points) => CheckpointSchedule::explicit(points).map_err(err),
        None => Ok(CheckpointSchedule::default_for(n_steps)),
    }
}

fn trajectory_rows(t: &Trajectory) -> Vec<(u64, u64, u64)> {
    t.checkpoints
        .iter()
        .map(|c| (c.n, c.position, c.max_position))
        .collect()
}

#[pyclass(name = "WalkConfig", frozen)]
struct PyWalkConfig(WalkConfig);

#[pymethods]
impl PyWalkConfig {
    #[new]
    fn new(alpha: f64, delta: f64) -> PyResult<Self> {
        WalkConfig::new(alpha, delta).map(Self).map_err(err)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    /// `f(0, x)`.
    fn initial_weight(&self, x: u64) -> f64 {
        self.0.initial_weight(x)
    }

    fn is_recurrent(&self) -> bool {
        self.0.classify(0).verdict == lerrw::scheme::Recurrence::Recurrent
    }

    fn __repr__(&self) -> String {
        format!("WalkConfig(alpha={}, delta={})", self.0.alpha(), self.0.delta())
    }
}

#[pyclass(name = "Environment")]
struct PyEnvironment(Environment);

#[pymethods]
impl PyEnvironment {
    /// A Beta environment drawn from `seed`.
    #[staticmethod]
    fn sampled(cfg: PyRef<'_, PyWalkConfig>, seed: u64) -> PyResult<Self> {
        Environment::sampled(cfg.0, seed).map(Self).map_err(err)
    }

    /// Up-probabilities of sites 1, 2, ... followed by a constant `tail`.
    #[staticmethod]
    fn fixed(p: Vec<f64>, tail: f64) -> PyResult<Self> {
        Environment::fixed(p, tail).map(Self).map_err(err)
    }

    fn p(&self, i: u64) -> f64 {
        self.0.p(i)
    }

    fn expected_hitting_time(&mut self, x: u64) -> f64 {
        self.0.expected_hitting_time(x)
    }

    fn log_expected_hitting_time(&mut self, x: u64) -> f64 {
        self.0.log_expected_hitting_time(x)
    }

    #[pyo3(signature = (x, z_cutoff = 10_000))]
    fn hitting_bounds<'py>(&mut self, py: Python<'py>, x: u64, z_cutoff: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.hitting_bounds(x, z_cutoff).map_err(err)?)
    }

    #[pyo3(signature = (seed, n_steps, checkpoints = None))]
    fn run(&self, seed: u64, n_steps: u64, checkpoints: Option<Vec<u64>>) -> PyResult<Vec<(u64, u64, u64)>> {
        let s = schedule(n_steps, checkpoints)?;
        let t = simulator::quenched_run(&self.0, seed, n_steps, &s, RunOptions::default()).map_err(err)?;
        Ok(trajectory_rows(&t))
    }
}

#[pyfunction]
fn log_gamma(z: f64) -> PyResult<f64> {
    special::log_gamma(z).map_err(err)
}

#[pyfunction]
fn digamma(z: f64) -> PyResult<f64> {
    special::digamma(z).map_err(err)
}

#[pyfunction]
fn trigamma(z: f64) -> PyResult<f64> {
    special::trigamma(z).map_err(err)
}

#[pyfunction]
fn k_constant(alpha: f64, delta: f64) -> PyResult<f64> {
    analytic::k_constant(alpha, delta).map_err(err)
}

/// `(E[S_x], Var[S_x])`.
#[pyfunction]
fn moments(cfg: PyRef<'_, PyWalkConfig>, x: u64) -> PyResult<(f64, f64)> {
    let m = analytic::moments(&cfg.0, x).map_err(err)?;
    Ok((m.mean, m.variance))
}

#[pyfunction]
fn predict_scaling<'py>(py: Python<'py>, cfg: PyRef<'_, PyWalkConfig>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &analytic::predict_scaling(&cfg.0).map_err(err)?)
}

/// Checkpoints `(n, X_n, max_{m<=n} X_m)` of one reinforced walk.
#[pyfunction]
#[pyo3(signature = (cfg, seed, n_steps, checkpoints = None))]
fn lerrw_run(
    cfg: PyRef<'_, PyWalkConfig>,
    seed: u64,
    n_steps: u64,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<Vec<(u64, u64, u64)>> {
    let s = schedule(n_steps, checkpoints)?;
    let t = simulator::lerrw_run(cfg.0, seed, n_steps, &s, RunOptions::default()).map_err(err)?;
    Ok(trajectory_rows(&t))
}

/// Law of the first `n` steps: `{"horizon", "exact", "paths": {path: {...}}}`.
#[pyfunction]
#[pyo3(signature = (cfg, n, exact = None))]
fn enumerate<'py>(py: Python<'py>, cfg: PyRef<'_, PyWalkConfig>, n: usize, exact: Option<bool>) -> PyResult<Bound<'py, PyAny>> {
    let law = oracle::enumerate_lerrw(&cfg.0, n, arithmetic(exact)).map_err(err)?;
    json_to_py(py, &law.to_json())
}

#[pyfunction]
#[pyo3(signature = (cfg, n, exact = None))]
fn equivalence_distance<'py>(py: Python<'py>, cfg: PyRef<'_, PyWalkConfig>, n: usize, exact: Option<bool>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &oracle::equivalence_distance(&cfg.0, n, arithmetic(exact)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (cfg, n, exact = None))]
fn martingale_check<'py>(py: Python<'py>, cfg: PyRef<'_, PyWalkConfig>, n: usize, exact: Option<bool>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &oracle::martingale_check(&cfg.0, n, arithmetic(exact)).map_err(err)?)
}

/// `Θ`, `M` and their decompositions along a path given as `"0,1,2,1"`.
#[pyfunction]
#[pyo3(signature = (cfg, path, exact = None))]
fn theta_along<'py>(py: Python<'py>, cfg: PyRef<'_, PyWalkConfig>, path: &str, exact: Option<bool>) -> PyResult<Bound<'py, PyAny>> {
    let path: Path = path.parse().map_err(err)?;
    to_py(py, &oracle::theta_along(&cfg.0, &path, arithmetic(exact)).map_err(err)?)
}

#[pyfunction]
fn s_values<'py>(py: Python<'py>, cfg: PyRef<'_, PyWalkConfig>, x: u64, j_max: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &oracle::s_values(&cfg.0, x, j_max).map_err(err)?)
}

/// Run an experiment from a JSON config; returns `{"records", "summaries"}`.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let ecfg: ExperimentConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("invalid configuration: {e}")))?;
    let out = py.detach(|| harness::run_experiment(&ecfg)).map_err(err)?;
    to_py(py, &out)
}

#[pymodule]
fn lerrw_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWalkConfig>()?;
    m.add_class::<PyEnvironment>()?;
    m.add("CSV_HEADER", harness::CSV_HEADER)?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(trigamma, m)?)?;
    m.add_function(wrap_pyfunction!(k_constant, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(predict_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(lerrw_run, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_distance, m)?)?;
    m.add_function(wrap_pyfunction!(martingale_check, m)?)?;
    m.add_function(wrap_pyfunction!(theta_along, m)?)?;
    m.add_function(wrap_pyfunction!(s_values, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

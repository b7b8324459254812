//! Python bindings for the convbf library: Gaussian beliefs, the (conv-)
//! Kalman step, density rescaling helpers, system simulation, and the Monte
//! Carlo benchmark runner.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convbf::bench::{run_experiment, Campaign, ExperimentConfig};
use convbf::convolution::gaussian_conv_closed_form;
use convbf::distributions::{gamma_from_rate as gamma_impl, ExponentialThreshold};
use convbf::kalman;
use convbf::models::{simulate, MismatchCase};

fn py_err(e: convbf::Error) -> PyErr {
    match e {
        convbf::Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        convbf::Error::Numerical(_) | convbf::Error::WeightDegeneracy { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_vector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows must be non-empty and equal length"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn threshold(rate: Option<f64>) -> PyResult<ExponentialThreshold> {
    match rate {
        None => Ok(ExponentialThreshold::Disabled),
        Some(r) => ExponentialThreshold::rate(r).map_err(py_err),
    }
}

/// Gaussian state belief: mean vector and SPD covariance matrix.
#[pyclass(name = "GaussianBelief", from_py_object)]
#[derive(Clone)]
struct PyGaussianBelief {
    inner: kalman::GaussianBelief,
}

#[pymethods]
impl PyGaussianBelief {
    #[new]
    fn new(mean: Vec<f64>, covariance: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = kalman::GaussianBelief::new(to_vector(mean), to_matrix(covariance)?)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean.iter().copied().collect()
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.covariance)
    }

    fn __repr__(&self) -> String {
        format!("GaussianBelief(dim={})", self.inner.dim())
    }
}

/// Tempering exponent gamma = rate / (rate + 1); rate=None means disabled
/// (gamma = 1).
#[pyfunction]
#[pyo3(signature = (rate=None))]
fn gamma_from_rate(rate: Option<f64>) -> PyResult<f64> {
    Ok(gamma_impl(threshold(rate)?))
}

/// Corollary-1 closed form: Q + 1/(2*rate) * I (rate=None returns Q).
#[pyfunction]
#[pyo3(signature = (q, rate=None))]
fn inflate_covariance(q: Vec<Vec<f64>>, rate: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let out = gaussian_conv_closed_form(&to_matrix(q)?, threshold(rate)?).map_err(py_err)?;
    Ok(matrix_rows(&out))
}

/// Linear prediction: mean <- A*mean, P <- A*P*A' + Q.
#[pyfunction]
fn kf_predict(
    belief: &PyGaussianBelief,
    a: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
) -> PyResult<PyGaussianBelief> {
    let inner =
        kalman::kf_predict(&belief.inner, &to_matrix(a)?, &to_matrix(q)?).map_err(py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// Joseph-form measurement update with measurement matrix C and noise R.
#[pyfunction]
fn kf_update(
    belief: &PyGaussianBelief,
    c: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    y: Vec<f64>,
) -> PyResult<PyGaussianBelief> {
    let inner = kalman::kf_update(&belief.inner, &to_matrix(c)?, &to_matrix(r)?, &to_vector(y))
        .map_err(py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// One convolutional-KF step: inflate Q by 1/(2*alpha)*I and R by
/// 1/(2*beta)*I, then a standard predict/update.
#[pyfunction]
#[pyo3(signature = (belief, a, q, c, r, y, alpha=None, beta=None))]
#[allow(clippy::too_many_arguments)]
fn convkf_step(
    belief: &PyGaussianBelief,
    a: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    y: Vec<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> PyResult<PyGaussianBelief> {
    let cfg = kalman::ConvConfig { alpha: threshold(alpha)?, beta: threshold(beta)? };
    let inner = kalman::convkf_step(
        &belief.inner,
        &to_matrix(a)?,
        &to_matrix(q)?,
        &to_matrix(c)?,
        &to_matrix(r)?,
        &to_vector(y),
        cfg,
    )
    .map_err(py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// Simulate one of the benchmark systems ("wiener", "sequence", "reactor")
/// under a mismatch case ("none", "a", "b"). Returns (states, measurements).
#[pyfunction]
fn simulate_system(
    system: &str,
    case: &str,
    steps: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let system = convbf::bench::SystemKind::parse(system).map_err(py_err)?;
    let case = MismatchCase::parse(case).map_err(py_err)?;
    let model = system.build(case);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = simulate(&model, steps, &mut rng).map_err(py_err)?;
    let states = traj.states.iter().map(|s| s.iter().copied().collect()).collect();
    let meas = traj.measurements.iter().map(|m| m.iter().copied().collect()).collect();
    Ok((states, meas))
}

/// Run a Monte Carlo benchmark campaign from a JSON config (same fields as
/// the CLI flags) and return the JSON report as a string.
#[pyfunction]
fn run_experiment_json(config_json: &str) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("invalid config: {e}")))?;
    let summary = run_experiment(&cfg).map_err(py_err)?;
    convbf::bench::to_json(&Campaign { config: cfg, summary }).map_err(py_err)
}

#[pymodule]
fn convbf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianBelief>()?;
    m.add_function(wrap_pyfunction!(gamma_from_rate, m)?)?;
    m.add_function(wrap_pyfunction!(inflate_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(kf_predict, m)?)?;
    m.add_function(wrap_pyfunction!(kf_update, m)?)?;
    m.add_function(wrap_pyfunction!(convkf_step, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_system, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    Ok(())
}

//! Python bindings. Reports come back as plain dicts (via their JSON form).

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use dgl_core::audit;
use dgl_core::error::Error;
use dgl_core::grid::{self, Region};
use dgl_core::minimizer;
use dgl_core::pipeline::{self, BcSpec, RunConfig};
use dgl_core::potential;
use dgl_core::profile1d::{self, Profile1D};
use dgl_core::snapshot;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parameter(_) | Error::Validation(_) | Error::Domain(_) | Error::Geometry(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "EnergyParams", from_py_object)]
#[derive(Clone)]
struct PyEnergyParams {
    inner: potential::EnergyParams,
}

#[pymethods]
impl PyEnergyParams {
    #[new]
    #[pyo3(signature = (n, p, m, eps_reg = None))]
    fn new(n: usize, p: f64, m: f64, eps_reg: Option<f64>) -> PyResult<Self> {
        let mut inner = potential::EnergyParams::new(n, p, m).map_err(py_err)?;
        inner.eps_reg = eps_reg;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }
    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }

    /// `pm/(m-p) - 1`.
    #[getter]
    fn gamma(&self) -> PyResult<f64> {
        self.inner.gamma().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("EnergyParams(n={}, p={}, m={})", self.inner.n, self.inner.p, self.inner.m)
    }
}

#[pyclass(name = "Potential", from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: potential::Potential,
}

#[pymethods]
impl PyPotential {
    /// `(1 - τ²)^m`.
    #[staticmethod]
    fn model(m: f64) -> PyResult<Self> {
        Ok(Self {
            inner: potential::Potential::model(m).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_table(m: f64, tau: Vec<f64>, w: Vec<f64>, dw: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: potential::Potential::from_table(m, tau, w, dw).map_err(py_err)?,
        })
    }

    fn __call__(&self, tau: f64) -> PyResult<f64> {
        self.inner.eval(tau).map_err(py_err)
    }

    fn deriv(&self, tau: f64) -> PyResult<f64> {
        self.inner.deriv(tau).map_err(py_err)
    }
}

#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: grid::Field,
}

#[pymethods]
impl PyField {
    /// Field on the box `[-L_a, L_a]` with cell centers on the faces; `values`
    /// in row-major order, or a constant.
    #[staticmethod]
    #[pyo3(signature = (half_widths, h, values = None, constant = 0.0))]
    fn centered_box(half_widths: Vec<f64>, h: f64, values: Option<Vec<f64>>, constant: f64) -> PyResult<Self> {
        let g = grid::Grid::centered_box(&half_widths, h).map_err(py_err)?;
        let inner = match values {
            Some(v) => grid::Field::from_values(g, v),
            None => grid::Field::constant(g, constant),
        }
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: snapshot::read_snapshot(&path).map_err(py_err)?,
        })
    }

    /// Writes `<stem>.json` and `<stem>.bin`; returns the header path.
    fn save(&self, path: PathBuf) -> PyResult<String> {
        let p = snapshot::write_snapshot(&self.inner, &path).map_err(py_err)?;
        Ok(p.display().to_string())
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.grid().shape().to_vec()
    }
    #[getter]
    fn h(&self) -> f64 {
        self.inner.grid().h()
    }
    #[getter]
    fn origin(&self) -> Vec<f64> {
        self.inner.grid().origin().to_vec()
    }
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    /// Discrete energy over the whole box.
    fn energy(&self, params: &PyEnergyParams, potential: &PyPotential) -> f64 {
        grid::total_energy(&self.inner, &params.inner, &potential.inner)
    }

    /// Discrete energy on the ball `B_radius(center)`.
    fn ball_energy(&self, params: &PyEnergyParams, potential: &PyPotential, center: Vec<f64>, radius: f64) -> PyResult<f64> {
        let ball = grid::ball_mask(self.inner.grid(), &center, radius).map_err(py_err)?;
        grid::energy(&self.inner, &ball, &params.inner, &potential.inner).map_err(py_err)
    }

    fn gradient(&self, params: &PyEnergyParams, potential: &PyPotential) -> Vec<f64> {
        grid::energy_gradient(&self.inner, &params.inner, &potential.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }
}

fn profile_dict<'py>(py: Python<'py>, prof: &Profile1D) -> PyResult<Bound<'py, PyAny>> {
    let d = to_py(py, &pipeline::profile_metadata(prof))?;
    d.set_item("t", prof.t.clone())?;
    d.set_item("u", prof.u.clone())?;
    d.set_item("du", prof.du.clone())?;
    Ok(d)
}

/// `(U(t), U'(t))` of the explicit comparison profile, `t < 0`.
#[pyfunction]
fn comparison_profile(p: f64, m: f64, t: f64) -> PyResult<(f64, f64)> {
    profile1d::comparison_profile(p, m, t).map_err(py_err)
}

/// One-dimensional energy of the comparison profile on `(-inf, -T]`.
#[pyfunction]
#[pyo3(signature = (p, m, big_t, potential = None))]
fn tail_energy(p: f64, m: f64, big_t: f64, potential: Option<&PyPotential>) -> PyResult<f64> {
    let pot = match potential {
        Some(pp) => pp.inner.clone(),
        None => potential::Potential::model(m).map_err(py_err)?,
    };
    profile1d::tail_energy(p, m, big_t, &pot).map_err(py_err)
}

#[pyfunction]
fn fit_decay_exponent(p: f64, m: f64, t_near: f64, t_far: f64, samples: usize) -> PyResult<f64> {
    let prof =
        profile1d::comparison_samples(p, m, &profile1d::log_spaced_negative(t_near, t_far, samples)).map_err(py_err)?;
    profile1d::fit_decay_exponent(&prof, (-t_far, -t_near)).map_err(py_err)
}

#[pyfunction]
fn heteroclinic_profile<'py>(py: Python<'py>, p: f64, potential: &PyPotential, t: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let prof = profile1d::heteroclinic_profile(p, &potential.inner, &t).map_err(py_err)?;
    profile_dict(py, &prof)
}

#[pyfunction]
fn supersolution_profile<'py>(
    py: Python<'py>,
    h: f64,
    p: f64,
    potential: &PyPotential,
    epsilon: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let prof = profile1d::supersolution_profile(h, p, &potential.inner, epsilon).map_err(py_err)?;
    let d = profile_dict(py, &prof)?;
    d.set_item("r_min_2d", profile1d::supersolution_min_radius(&prof, 2).map_err(py_err)?)?;
    Ok(d)
}

/// Minimizes from `field`; `bc` is `planar`, `planar:<lo>:<hi>`, `natural`
/// or `dirichlet:<v>`. Returns the minimizer and the solve report.
#[pyfunction]
#[pyo3(signature = (field, params, potential, bc = "planar", tol = 1e-6, max_iter = 100_000))]
fn minimize<'py>(
    py: Python<'py>,
    field: &PyField,
    params: &PyEnergyParams,
    potential: &PyPotential,
    bc: &str,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let bc = BcSpec::parse(bc).map_err(py_err)?.build(field.inner.grid().dim());
    let (u, rep) = minimizer::minimize(&field.inner, &bc, &params.inner, &potential.inner, tol, max_iter)
        .map_err(py_err)?;
    Ok((PyField { inner: u }, to_py(py, &rep.thinned(200))?))
}

#[pyfunction]
fn density_report<'py>(
    py: Python<'py>,
    field: &PyField,
    center: Vec<f64>,
    r0: usize,
    r_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &audit::density_report(&field.inner, &center, r0, r_max).map_err(py_err)?)
}

#[pyfunction]
fn measured_zero(field: &PyField) -> PyResult<Vec<f64>> {
    audit::measured_zero(&field.inner, &vec![0.0; field.inner.grid().dim()]).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (field, params, potential, center, r, t_window))]
fn main_inequality<'py>(
    py: Python<'py>,
    field: &PyField,
    params: &PyEnergyParams,
    potential: &PyPotential,
    center: Vec<f64>,
    r: usize,
    t_window: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let rec = audit::main_inequality_report(&field.inner, &center, r, t_window, &params.inner, &potential.inner)
        .map_err(py_err)?;
    to_py(py, &rec)
}

/// Fits `c1`, `C0` of the discrete inequality to the measured sequences.
#[pyfunction]
fn discrete_inequality_fit<'py>(
    py: Python<'py>,
    field: &PyField,
    params: &PyEnergyParams,
    potential: &PyPotential,
    center: Vec<f64>,
    r_max: usize,
    t_window: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let seq = audit::audit_sequences(&field.inner, &center, r_max, t_window, &params.inner, &potential.inner)
        .map_err(py_err)?;
    to_py(py, &audit::discrete_inequality_fit(&seq, field.inner.grid().dim()).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (field, params, potential, center, radius, trials = 20, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn q_minimality<'py>(
    py: Python<'py>,
    field: &PyField,
    params: &PyEnergyParams,
    potential: &PyPotential,
    center: Vec<f64>,
    radius: f64,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let region: Region = grid::ball_mask(field.inner.grid(), &center, radius).map_err(py_err)?;
    let rep = minimizer::q_minimality_audit(&field.inner, &region, &params.inner, &potential.inner, trials, seed)
        .map_err(py_err)?;
    to_py(py, &rep)
}

/// Worst-case induction from `M_r = σ r^n` seeds on the window ending at `r_start`.
#[pyfunction]
#[pyo3(signature = (n, sigma, t_window, big_c0, c1, gamma, r_start, r_stop))]
#[allow(clippy::too_many_arguments)]
fn simulate_induction<'py>(
    py: Python<'py>,
    n: usize,
    sigma: f64,
    t_window: usize,
    big_c0: f64,
    c1: f64,
    gamma: f64,
    r_start: usize,
    r_stop: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let seed = audit::power_seed(n, sigma, t_window, r_start);
    let trace = audit::induction_simulator(n, sigma, t_window, big_c0, c1, gamma, &seed, r_start, r_stop)
        .map_err(py_err)?;
    to_py(py, &trace)
}

/// Runs a JSON config and writes its artifacts to `out`; returns the manifest.
#[pyfunction]
fn run<'py>(py: Python<'py>, config_json: &str, out: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let config = RunConfig::from_json(config_json).map_err(py_err)?;
    let outcome = pipeline::run(&config, &out).map_err(py_err)?;
    let text = std::fs::read_to_string(&outcome.manifest).map_err(|e| py_err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pymodule]
fn dgl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnergyParams>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(comparison_profile, m)?)?;
    m.add_function(wrap_pyfunction!(tail_energy, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(heteroclinic_profile, m)?)?;
    m.add_function(wrap_pyfunction!(supersolution_profile, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(density_report, m)?)?;
    m.add_function(wrap_pyfunction!(measured_zero, m)?)?;
    m.add_function(wrap_pyfunction!(main_inequality, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_inequality_fit, m)?)?;
    m.add_function(wrap_pyfunction!(q_minimality, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_induction, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use dispersa_core::experiments::{self, Command, ExperimentConfig};
use dispersa_core::fractional::{self, SteinKernelSpec};
use dispersa_core::gkdv::{self, SolverConfig};
use dispersa_core::norms::{self, Order, WeightedNormSpec};
use dispersa_core::propagators;
use dispersa_core::spectral::{self, PresetDatum};
use dispersa_core::{Complex64, Error};

create_exception!(dispersa, SolverError, PyException, "Picard divergence or blow-up.");

fn err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::BlowupDetected { .. } => SolverError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn solver_config(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<SolverConfig> {
    let Some(kwargs) = kwargs else {
        return Ok(SolverConfig::default());
    };
    let text: String = py.import("json")?.call_method1("dumps", (kwargs,))?.extract()?;
    let cfg: SolverConfig = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("solver options: {e}")))?;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Uniform periodic grid on [-L/2, L/2).
#[pyclass(frozen, skip_from_py_object, name = "Grid", module = "dispersa")]
#[derive(Clone, Copy)]
struct PyGrid(dispersa_core::Grid1D);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, length: f64) -> PyResult<Self> {
        dispersa_core::Grid1D::new(n, length).map(Self).map_err(err)
    }

    #[staticmethod]
    fn desk() -> Self {
        Self(dispersa_core::Grid1D::desk())
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.0.dx()
    }

    fn points(&self) -> Vec<f64> {
        self.0.points()
    }

    fn frequencies(&self) -> Vec<f64> {
        self.0.frequencies()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, length={})", self.0.n(), self.0.length())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "GridFunction", module = "dispersa")]
#[derive(Clone)]
struct PyGridFunction(spectral::GridFunction);

#[pymethods]
impl PyGridFunction {
    /// Real samples on the grid points.
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        spectral::GridFunction::from_real(grid.0, &values).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_complex(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<Self> {
        spectral::GridFunction::new(grid.0, values).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    #[getter]
    fn is_real(&self) -> bool {
        self.0.is_real()
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    fn real(&self) -> Vec<f64> {
        self.0.re()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    fn lp_norm(&self, p: f64) -> f64 {
        self.0.lp_norm(p)
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    fn max_imag(&self) -> f64 {
        self.0.max_imag()
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(err)
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

fn sampled(preset: PresetDatum, grid: &PyGrid) -> PyResult<PyGridFunction> {
    spectral::sample(&preset, &grid.0).map(|d| PyGridFunction(d.value)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (grid, amplitude=1.0, width=1.0, center=0.0))]
fn gaussian(grid: &PyGrid, amplitude: f64, width: f64, center: f64) -> PyResult<PyGridFunction> {
    sampled(PresetDatum::gaussian(amplitude, width, center), grid)
}

#[pyfunction]
#[pyo3(signature = (grid, amplitude=1.0, scale=1.0, speed=0.0))]
fn sech(grid: &PyGrid, amplitude: f64, scale: f64, speed: f64) -> PyResult<PyGridFunction> {
    sampled(PresetDatum::sech(amplitude, scale, speed), grid)
}

/// Solitary wave of mKdV with the given speed, at time `t`.
#[pyfunction]
#[pyo3(signature = (grid, speed, t=0.0))]
fn solitary_wave(grid: &PyGrid, speed: f64, t: f64) -> PyResult<PyGridFunction> {
    spectral::sample_at(&PresetDatum::mkdv_solitary_wave(speed), &grid.0, t)
        .map(PyGridFunction)
        .map_err(err)
}

#[pyfunction]
fn riesz_derivative(f: &PyGridFunction, s: f64) -> PyResult<PyGridFunction> {
    fractional::riesz_derivative(&f.0, s).map(PyGridFunction).map_err(err)
}

#[pyfunction]
fn bessel_derivative(f: &PyGridFunction, s: f64) -> PyResult<PyGridFunction> {
    fractional::bessel_derivative(&f.0, s).map(PyGridFunction).map_err(err)
}

#[pyfunction]
fn hilbert_transform(f: &PyGridFunction) -> PyResult<PyGridFunction> {
    fractional::hilbert_transform(&f.0).map(PyGridFunction).map_err(err)
}

/// Difference-quotient derivative of order `alpha`. `constant` overrides the
/// closed-form normalization.
#[pyfunction]
#[pyo3(signature = (f, alpha, constant=None))]
fn stein_derivative(py: Python<'_>, f: &PyGridFunction, alpha: f64, constant: Option<f64>) -> PyResult<PyGridFunction> {
    let dx = f.0.grid().dx();
    let spec = match constant {
        Some(c) => SteinKernelSpec::calibrated(alpha, dx, c),
        None => SteinKernelSpec::formula(alpha, dx),
    };
    py.detach(|| fractional::stein_derivative(&f.0, &spec))
        .map(PyGridFunction)
        .map_err(err)
}

#[pyfunction]
fn calibrate_stein_constant(py: Python<'_>, f: &PyGridFunction, alpha: f64) -> PyResult<f64> {
    py.detach(|| fractional::calibrate_stein_constant(&f.0, alpha)).map_err(err)
}

#[pyfunction]
fn airy_propagate(f: &PyGridFunction, t: f64) -> PyGridFunction {
    PyGridFunction(propagators::airy_propagate(&f.0, t))
}

#[pyfunction]
fn dgbo_propagate(f: &PyGridFunction, t: f64, a: f64) -> PyResult<PyGridFunction> {
    propagators::dgbo_propagate(&f.0, t, a).map(PyGridFunction).map_err(err)
}

#[pyfunction]
fn gamma_commutation_residual<'py>(py: Python<'py>, f: &PyGridFunction, t: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = propagators::gamma_commutation_residual(&f.0, t);
    to_py(py, &r)
}

/// Residual of the weighted commutator identity; pass `beta` for the
/// two-exponent form.
#[pyfunction]
#[pyo3(signature = (f, t, alpha, beta=None))]
fn weighted_identity_residual<'py>(
    py: Python<'py>,
    f: &PyGridFunction,
    t: f64,
    alpha: f64,
    beta: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let phase = propagators::PhasePolynomial::airy(t);
    let r = py
        .detach(|| propagators::weighted_identity_residual_with(&f.0, &phase, alpha, beta))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (f, t_window, n_times=2001))]
fn strichartz_ratio(py: Python<'_>, f: &PyGridFunction, t_window: f64, n_times: usize) -> PyResult<f64> {
    py.detach(|| propagators::strichartz_ratio(&f.0, t_window, n_times)).map_err(err)
}

#[pyfunction]
fn weighted_norm(f: &PyGridFunction, s: f64, r: f64) -> PyResult<f64> {
    let spec = WeightedNormSpec::new(s, r).map_err(err)?;
    norms::weighted_norm(&f.0, &spec).map(|d| d.value).map_err(err)
}

/// Samples of a function of (t, x) on a uniform time grid.
#[pyclass(frozen, name = "SpaceTimeField", module = "dispersa")]
struct PySpaceTimeField(norms::SpaceTimeField);

#[pymethods]
impl PySpaceTimeField {
    #[staticmethod]
    fn linear_flow(u0: &PyGridFunction, dt: f64, steps: usize) -> PyResult<Self> {
        norms::SpaceTimeField::linear_flow(&u0.0, 0.0, dt, steps).map(Self).map_err(err)
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    fn times(&self) -> Vec<f64> {
        self.0.times()
    }

    fn frame(&self, i: usize) -> PyResult<PyGridFunction> {
        self.0
            .frames()
            .get(i)
            .cloned()
            .map(PyGridFunction)
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(i))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `L^q_t L^p_x` when `space_outer` is false, `L^p_x L^q_t` otherwise.
    #[pyo3(signature = (p, q, space_outer=false))]
    fn mixed_norm(&self, p: f64, q: f64, space_outer: bool) -> PyResult<f64> {
        let order = if space_outer { Order::SpaceOuter } else { Order::TimeOuter };
        norms::mixed_norm(&self.0, p, q, order).map_err(err)
    }

    fn mu1(&self) -> f64 {
        norms::mu1(&self.0)
    }

    fn mu2(&self) -> f64 {
        norms::mu2(&self.0)
    }

    fn mu3(&self, r: f64) -> PyResult<f64> {
        norms::mu3(&self.0, r).map_err(err)
    }

    fn mu1_terms<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &norms::mu1_terms(&self.0))
    }

    #[pyo3(signature = (k=2))]
    fn conserved_quantities<'py>(&self, py: Python<'py>, k: u32) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &gkdv::conserved_quantities(&self.0, k))
    }
}

/// Picard iteration on `[0, horizon]`. Keyword arguments are solver options.
#[pyfunction]
#[pyo3(signature = (u0, **options))]
fn picard_solve<'py>(
    py: Python<'py>,
    u0: &PyGridFunction,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<(PySpaceTimeField, Bound<'py, PyAny>)> {
    let cfg = solver_config(py, options)?;
    let (field, report) = py.detach(|| gkdv::picard_solve(&u0.0, &cfg)).map_err(err)?;
    Ok((PySpaceTimeField(field), to_py(py, &report)?))
}

#[pyfunction]
#[pyo3(signature = (u0, **options))]
fn reference_solve(py: Python<'_>, u0: &PyGridFunction, options: Option<&Bound<'_, PyDict>>) -> PyResult<PySpaceTimeField> {
    let cfg = solver_config(py, options)?;
    py.detach(|| gkdv::reference_solve(&u0.0, &cfg))
        .map(PySpaceTimeField)
        .map_err(err)
}

/// Patched Picard solve on `[0, t_star]`; returns the field and per-patch reports.
#[pyfunction]
#[pyo3(signature = (u0, t_star, **options))]
fn solve_global<'py>(
    py: Python<'py>,
    u0: &PyGridFunction,
    t_star: f64,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<(PySpaceTimeField, Bound<'py, PyAny>)> {
    let cfg = solver_config(py, options)?;
    let sol = py
        .detach(|| gkdv::solve_global(&u0.0, t_star, &cfg))
        .map_err(|e| err(e.into()))?;
    Ok((PySpaceTimeField(sol.field), to_py(py, &sol.patches)?))
}

#[pyfunction]
fn quarter_derivative_norm(u: &PyGridFunction) -> f64 {
    gkdv::quarter_derivative_norm(&u.0)
}

/// Runs an experiment from TOML text and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config, command=None))]
fn run_experiment<'py>(py: Python<'py>, config: &str, command: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match command {
        Some(c) => ExperimentConfig::parse_for(config, c.parse::<Command>().map_err(err)?),
        None => ExperimentConfig::parse(config),
    }
    .map_err(err)?;
    let report = py.detach(|| experiments::run(&cfg)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn dispersa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyGridFunction>()?;
    m.add_class::<PySpaceTimeField>()?;
    m.add_function(wrap_pyfunction!(gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(sech, m)?)?;
    m.add_function(wrap_pyfunction!(solitary_wave, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_transform, m)?)?;
    m.add_function(wrap_pyfunction!(stein_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_stein_constant, m)?)?;
    m.add_function(wrap_pyfunction!(airy_propagate, m)?)?;
    m.add_function(wrap_pyfunction!(dgbo_propagate, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_commutation_residual, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_identity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(strichartz_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_norm, m)?)?;
    m.add_function(wrap_pyfunction!(quarter_derivative_norm, m)?)?;
    m.add_function(wrap_pyfunction!(picard_solve, m)?)?;
    m.add_function(wrap_pyfunction!(reference_solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_global, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

//! Python bindings: dispersions, emitter and separable models, S(E), bound
//! states, the Levinson check and the CLI tasks. Reports come back as dicts.

use std::path::Path;

use dscatter::cli::{self, Overrides, Task};
use dscatter::dispersion::Dispersion as CoreDispersion;
use dscatter::levinson::{self, Spacing, SweepGrid};
use dscatter::models::{self, CMatrix, CVector, CouplingSpec, EmitterSpec, Passivity};
use dscatter::propagators::{self, ScatteringSystem};
use dscatter::smatrix::{self, Route};
use dscatter::{spectral, Error};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

create_exception!(dscatter, DscatterError, PyException, "Engine failure; args are (message, code).");

fn py_err(e: Error) -> PyErr {
    DscatterError::new_err((e.to_string(), e.code()))
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("KR must be a non-empty square list of rows"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[pyclass(module = "dscatter", frozen, from_py_object)]
#[derive(Clone)]
struct Dispersion {
    inner: CoreDispersion,
}

#[pymethods]
impl Dispersion {
    /// ε(k) = σ d |k|^m.
    #[staticmethod]
    #[pyo3(signature = (m, sigma = 1, d = 1.0))]
    fn power(m: u32, sigma: i8, d: f64) -> PyResult<Self> {
        Ok(Dispersion { inner: CoreDispersion::power(sigma, d, m).map_err(py_err)? })
    }

    /// ε(k) = |k|^a in D dimensions.
    #[staticmethod]
    fn isotropic(a: f64, dim: u32) -> PyResult<Self> {
        Ok(Dispersion { inner: CoreDispersion::isotropic(a, dim).map_err(py_err)? })
    }

    fn energy(&self, k: f64) -> f64 {
        self.inner.energy(k)
    }

    fn density_of_states(&self, e: f64) -> PyResult<f64> {
        self.inner.density_of_states(e).map_err(py_err)
    }

    fn in_continuum(&self, e: f64) -> bool {
        self.inner.in_continuum(e)
    }

    fn degenerate_momenta(&self, e: f64) -> PyResult<Vec<f64>> {
        self.inner.degenerate_momenta(e).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(module = "dscatter", frozen, from_py_object)]
#[derive(Clone)]
struct Coupling {
    inner: CouplingSpec,
}

#[pymethods]
impl Coupling {
    #[staticmethod]
    #[pyo3(signature = (amplitude = Complex64::new(1.0, 0.0), width = 1.0))]
    fn gaussian(amplitude: Complex64, width: f64) -> Self {
        Coupling { inner: CouplingSpec::gaussian(amplitude, width) }
    }

    #[staticmethod]
    #[pyo3(signature = (amplitude = Complex64::new(1.0, 0.0), width = 1.0, power = 2.0))]
    fn lorentzian(amplitude: Complex64, width: f64, power: f64) -> Self {
        Coupling { inner: CouplingSpec::lorentzian(amplitude, width, power) }
    }

    fn __call__(&self, k: f64) -> Complex64 {
        self.inner.value(k)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(module = "dscatter", frozen, from_py_object)]
#[derive(Clone)]
struct EmitterModel {
    inner: models::EmitterModel,
}

#[pymethods]
impl EmitterModel {
    #[new]
    fn new(kr: Vec<Vec<Complex64>>, u: Vec<Complex64>, coupling: Coupling) -> PyResult<Self> {
        let kr = matrix_from_rows(kr)?;
        let inner = models::EmitterModel::new(kr, CVector::from_vec(u), coupling.inner).map_err(py_err)?;
        Ok(EmitterModel { inner })
    }

    /// Random passive model, reduced block kept well conditioned.
    #[staticmethod]
    #[pyo3(signature = (n, seed, dissipative = false, coupling = None))]
    fn random(n: usize, seed: u64, dissipative: bool, coupling: Option<Coupling>) -> Self {
        let kind = if dissipative { Passivity::Dissipative } else { Passivity::Hermitian };
        let c = coupling.map(|c| c.inner).unwrap_or_else(|| CouplingSpec::gaussian(Complex64::new(1.0, 0.0), 1.0));
        EmitterModel { inner: models::random_emitter_model(n, seed, kind, c) }
    }

    /// Random Hermitian model carrying a bright zero-energy state.
    #[staticmethod]
    fn bright_tuned(n: usize, seed: u64) -> PyResult<Self> {
        Ok(EmitterModel { inner: models::construct_bright_tuned_model(n, seed).map_err(py_err)? })
    }

    fn perturb_reduced_block(&self, eps: f64, seed: u64) -> PyResult<Self> {
        Ok(EmitterModel { inner: models::perturb_reduced_block(&self.inner, eps, seed).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn kr(&self) -> Vec<Vec<Complex64>> {
        matrix_rows(self.inner.kr())
    }

    #[getter]
    fn u(&self) -> Vec<Complex64> {
        self.inner.u().iter().copied().collect()
    }

    fn is_hermitian(&self) -> bool {
        self.inner.is_hermitian()
    }

    /// Certificate dict when a bright zero-energy state exists, else None.
    #[pyo3(signature = (rank_tol = models::DEFAULT_RANK_TOL))]
    fn bright_state<'py>(&self, py: Python<'py>, rank_tol: f64) -> PyResult<Option<Bound<'py, PyAny>>> {
        models::detect_bright_zero_state(&self.inner, rank_tol).map(|c| to_dict(py, &c)).transpose()
    }

    fn validate<'py>(&self, py: Python<'py>, dispersion: &Dispersion) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &models::validate_model(&self.inner, &dispersion.inner, models::DEFAULT_RANK_TOL))
    }

    /// The configuration-file form of the model.
    fn to_spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &EmitterSpec::from(self.inner.clone()))
    }

    fn __repr__(&self) -> String {
        format!("EmitterModel(n={})", self.inner.n())
    }
}

#[pyclass(module = "dscatter", frozen, from_py_object)]
#[derive(Clone)]
struct System {
    inner: ScatteringSystem,
}

#[pymethods]
impl System {
    #[staticmethod]
    fn emitter(dispersion: &Dispersion, model: &EmitterModel) -> Self {
        System { inner: ScatteringSystem::emitter(dispersion.inner, model.inner.clone()) }
    }

    /// Separable potential g|v⟩⟨v| with form factor v, v(0) = 1.
    #[staticmethod]
    fn separable(dispersion: &Dispersion, g: f64, form_factor: &Coupling) -> PyResult<Self> {
        let sep = models::SeparableModel::new(g, form_factor.inner.clone()).map_err(py_err)?;
        Ok(System { inner: ScatteringSystem::separable(dispersion.inner, sep) })
    }

    /// S(E) as a list of rows, labelled by the degenerate momenta.
    #[pyo3(signature = (e, route = "t_matrix"))]
    fn s_matrix(&self, e: f64, route: &str) -> PyResult<Vec<Vec<Complex64>>> {
        let route = match route {
            "t_matrix" => Route::TMatrix,
            "j_ratio" => Route::JRatio,
            other => return Err(PyValueError::new_err(format!("unknown route {other:?}"))),
        };
        Ok(matrix_rows(&smatrix::s_matrix(e, &self.inner, route).map_err(py_err)?.entries))
    }

    fn det_s(&self, e: f64) -> PyResult<Complex64> {
        smatrix::det_s_via_j(e, &self.inner).map_err(py_err)
    }

    /// ‖S(E) − S(0±)‖, None when the continuum does not reach that side.
    fn distance_to_limit(&self, e: f64) -> PyResult<Option<f64>> {
        let s = smatrix::s_matrix(e, &self.inner, Route::TMatrix).map_err(py_err)?;
        let l = smatrix::universal_limit(&self.inner.dispersion).map_err(py_err)?;
        Ok(smatrix::distance_to_limit(&s, &l))
    }

    fn bound_states<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let states = spectral::bound_states(&self.inner).map_err(py_err)?;
        to_dict(py, &states)
    }

    /// Full winding report; verdict under report["verdict"]["status"].
    #[pyo3(signature = (tol = 0.05, e_min = None, e_max = None, points = 25, linear = false))]
    fn levinson<'py>(
        &self,
        py: Python<'py>,
        tol: f64,
        e_min: Option<f64>,
        e_max: Option<f64>,
        points: usize,
        linear: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let grid = SweepGrid { e_min, e_max, points, spacing: if linear { Spacing::Linear } else { Spacing::Log }, ..SweepGrid::default() };
        grid.validate().map_err(py_err)?;
        let report = levinson::levinson_check(&self.inner, &grid, tol).map_err(py_err)?;
        let out = to_dict(py, &report)?;
        // samples are skipped by the JSON form; attach them per branch
        let branches = out.get_item("branch_contributions")?;
        for (i, b) in report.branch_contributions.iter().enumerate() {
            let rows: Vec<(f64, Complex64, f64)> = b.samples.iter().map(|s| (s.energy, s.det_s, s.phase)).collect();
            branches.get_item(i)?.set_item("samples", rows)?;
        }
        Ok(out)
    }
}

/// Closed-form L(ω) off the continuum.
#[pyfunction]
fn l_closed(omega: Complex64, dispersion: &Dispersion) -> PyResult<Complex64> {
    propagators::l_closed(omega, &dispersion.inner).map_err(py_err)
}

/// L(ω) by direct quadrature, the independent check of `l_closed`.
#[pyfunction]
fn l_quadrature(omega: Complex64, dispersion: &Dispersion) -> PyResult<Complex64> {
    propagators::l_quadrature(omega, &dispersion.inner).map_err(py_err)
}

/// The analytic E → 0 limit of S; raises with code NonUniversal for m = 1.
#[pyfunction]
fn universal_limit<'py>(py: Python<'py>, dispersion: &Dispersion) -> PyResult<Bound<'py, PyAny>> {
    let l = smatrix::universal_limit(&dispersion.inner).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("from_above", l.from_above.as_ref().map(matrix_rows))?;
    d.set_item("from_below", l.from_below.as_ref().map(matrix_rows))?;
    d.set_item("symmetric_eigenvalue", l.symmetric_eigenvalue)?;
    d.set_item("antisymmetric_eigenvalue", l.antisymmetric_eigenvalue)?;
    Ok(d.into_any())
}

/// Runs a CLI task on a configuration file; returns the exit code.
#[pyfunction]
#[pyo3(signature = (task, config, out, tol_lev = None, e_min = None, e_max = None, points = None))]
fn run_task(
    task: &str,
    config: &str,
    out: &str,
    tol_lev: Option<f64>,
    e_min: Option<f64>,
    e_max: Option<f64>,
    points: Option<usize>,
) -> PyResult<i32> {
    let task: Task = serde_json::from_value(serde_json::Value::String(task.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown task {task:?}")))?;
    let o = Overrides { tol_lev, e_min, e_max, points };
    Ok(cli::main_with(task, Path::new(config), Some(Path::new(out)), &o))
}

#[pymodule(name = "dscatter")]
fn dscatter_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DscatterError", m.py().get_type::<DscatterError>())?;
    m.add_class::<Dispersion>()?;
    m.add_class::<Coupling>()?;
    m.add_class::<EmitterModel>()?;
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(l_closed, m)?)?;
    m.add_function(wrap_pyfunction!(l_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(universal_limit, m)?)?;
    m.add_function(wrap_pyfunction!(run_task, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings: `import activerods`.

use std::sync::Arc;

use activerods_core as core;
use core::decomposition::decompose as core_decompose;
use core::full_solver::{FullSolverConfig, Splitting, TimeStep};
use core::harness::config::RunConfig;
use core::limit_solver::BulkWallState;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// An angular profile V(φ) or Φ(φ).
#[pyclass(name = "Coefficient", module = "activerods", from_py_object)]
#[derive(Clone)]
struct PyCoefficient(core::AngularCoefficient);

#[pymethods]
impl PyCoefficient {
    #[staticmethod]
    fn constant(value: f64) -> Self {
        Self(core::AngularCoefficient::constant(value))
    }

    /// g0 + a (1 + sin φ).
    #[staticmethod]
    fn shifted_sine(g0: f64, a: f64) -> Self {
        Self(core::AngularCoefficient::shifted_sine(g0, a))
    }

    /// g − V_prop sin φ.
    #[staticmethod]
    fn shear_speed(g: f64, v_prop: f64) -> Self {
        Self(core::AngularCoefficient::shear_speed(g, v_prop))
    }

    /// −γ sin² φ.
    #[staticmethod]
    fn shear_turning(gamma: f64) -> Self {
        Self(core::AngularCoefficient::shear_turning(gamma))
    }

    #[pyo3(signature = (phi, order = 0))]
    fn __call__(&self, phi: f64, order: u8) -> PyResult<f64> {
        self.0.eval(phi, order).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Coefficient({:?})", self.0.family)
    }
}

#[pyclass(name = "Model", module = "activerods", skip_from_py_object)]
#[derive(Clone)]
struct PyModel(core::ModelParams);

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (epsilon, diffusion, t_final, speed, turning))]
    fn new(epsilon: f64, diffusion: f64, t_final: f64, speed: PyCoefficient, turning: PyCoefficient) -> Self {
        Self(core::ModelParams::new(epsilon, diffusion, t_final, speed.0, turning.0))
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn diffusion(&self) -> f64 {
        self.0.diffusion
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.0.t_final
    }

    fn __repr__(&self) -> String {
        format!("Model(epsilon={}, diffusion={}, t_final={})", self.0.epsilon, self.0.diffusion, self.0.t_final)
    }
}

/// Finite-volume cells in y times periodic nodes in φ.
#[pyclass(name = "Grid", module = "activerods", skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(Arc<core::PhaseGrid>);

#[pymethods]
impl PyGrid {
    /// Graded cells when `layer_width` is given, uniform otherwise.
    #[new]
    #[pyo3(signature = (y_max, n_y, n_phi, layer_width = None, layer_cells = 32))]
    fn new(y_max: f64, n_y: usize, n_phi: usize, layer_width: Option<f64>, layer_cells: usize) -> PyResult<Self> {
        let y = match layer_width {
            Some(w) => core::YGrid::graded(y_max, n_y, w, layer_cells),
            None => core::YGrid::uniform(y_max, n_y),
        }
        .map_err(to_py)?;
        Ok(Self(core::PhaseGrid::new(y, core::PhiGrid::new(n_phi).map_err(to_py)?)))
    }

    #[getter]
    fn n_y(&self) -> usize {
        self.0.n_y()
    }

    #[getter]
    fn n_phi(&self) -> usize {
        self.0.n_phi()
    }

    #[getter]
    fn y_centers(&self) -> Vec<f64> {
        self.0.y.centers().to_vec()
    }

    #[getter]
    fn y_faces(&self) -> Vec<f64> {
        self.0.y.faces().to_vec()
    }

    #[getter]
    fn phi_nodes(&self) -> Vec<f64> {
        self.0.phi.nodes()
    }
}

/// Cell-averaged density, stored φ-major.
#[pyclass(name = "Field", module = "activerods", skip_from_py_object)]
#[derive(Clone)]
struct PyField(core::PhaseField);

#[pymethods]
impl PyField {
    /// Builds a field from rows `values[j][i]` (angle j, cell i).
    #[staticmethod]
    fn from_columns(grid: &PyGrid, values: Vec<Vec<f64>>) -> PyResult<Self> {
        if values.len() != grid.0.n_phi() {
            return Err(PyValueError::new_err(format!("expected {} angle rows", grid.0.n_phi())));
        }
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        core::PhaseField::from_values(&grid.0, flat).map(Self).map_err(to_py)
    }

    /// Cell averages of e^{−y}/2π.
    #[staticmethod]
    fn exponential(grid: &PyGrid) -> Self {
        Self(core::harness::config::exponential_initial(&grid.0))
    }

    /// Exactly stationary wall layer (V/ε)e^{−Vy/ε} per angle, scaled by 1/2π.
    #[staticmethod]
    fn steady_layer(grid: &PyGrid, speed: &PyCoefficient, epsilon: f64) -> Self {
        let mut f = core::full_solver::steady_layer(&grid.0, &speed.0, epsilon);
        f.scale(1.0 / std::f64::consts::TAU);
        Self(f)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.0.grid().n_phi()).map(|j| self.0.column(j).to_vec()).collect()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let g = self.0.grid();
        if i >= g.n_y() || j >= g.n_phi() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(i, j))
    }

    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn l1_distance(&self, other: &PyField) -> PyResult<f64> {
        self.0.l1_distance(&other.0).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Field(n_y={}, n_phi={}, mass={:.6e})", self.0.grid().n_y(), self.0.grid().n_phi(), self.0.mass())
    }
}

fn solver_config(dt: Option<f64>, splitting: &str) -> PyResult<FullSolverConfig> {
    let splitting = match splitting {
        "lie" => Splitting::Lie,
        "strang" => Splitting::Strang,
        other => return Err(PyValueError::new_err(format!("unknown splitting '{other}'"))),
    };
    Ok(FullSolverConfig { dt: dt.map_or(TimeStep::Auto, TimeStep::Fixed), splitting, ..Default::default() })
}

/// Full kinetic solve; one field per snapshot time.
#[pyfunction]
#[pyo3(signature = (initial, model, times, dt = None, splitting = "strang"))]
fn run_full(initial: &PyField, model: &PyModel, times: Vec<f64>, dt: Option<f64>, splitting: &str) -> PyResult<Vec<PyField>> {
    let cfg = solver_config(dt, splitting)?;
    let out = core::full_solver::run_full(&initial.0, &model.0, &cfg, &times).map_err(to_py)?;
    Ok(out.into_iter().map(PyField).collect())
}

/// Bulk/wall limit solve from a bulk density with an empty wall; returns
/// `(bulk, wall)` per snapshot time.
#[pyfunction]
#[pyo3(signature = (bulk, model, times, dt = None, splitting = "strang"))]
fn run_limit(
    bulk: &PyField,
    model: &PyModel,
    times: Vec<f64>,
    dt: Option<f64>,
    splitting: &str,
) -> PyResult<Vec<(PyField, Vec<f64>)>> {
    let cfg = solver_config(dt, splitting)?;
    let init = BulkWallState::from_bulk(bulk.0.clone());
    let out = core::limit_solver::run_limit(&init, &model.0, &cfg, &times).map_err(to_py)?;
    Ok(out.into_iter().map(|s| (PyField(s.bulk), s.wall)).collect())
}

/// Wall amplitude m(φ) and remainder u of `field`.
#[pyfunction]
fn decompose(field: &PyField, speed: &PyCoefficient, epsilon: f64) -> PyResult<(Vec<f64>, PyField)> {
    let d = core_decompose(&field.0, &speed.0, epsilon).map_err(to_py)?;
    Ok((d.m, PyField(d.u)))
}

#[pyfunction]
fn epsilon_from_physical(d_tr: f64, d_rot: f64, length: f64) -> PyResult<f64> {
    core::coefficients::epsilon_from_physical(d_tr, d_rot, length).map_err(to_py)
}

/// ε-sweep from a TOML configuration string; one dict per row.
#[pyfunction]
fn sweep(py: Python<'_>, config: &str) -> PyResult<Vec<Py<pyo3::types::PyDict>>> {
    use pyo3::types::PyDict;
    let cfg: RunConfig = config.parse().map_err(to_py)?;
    let rows = core::harness::sweep_epsilon(&cfg);
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("epsilon", r.epsilon)?;
            d.set_item("t_final", r.t_final)?;
            d.set_item("l1_error", r.l1_error)?;
            d.set_item("l1_error_refined", r.l1_error_refined)?;
            d.set_item("l1_R", r.l1_residual_interior)?;
            d.set_item("l1_r", r.l1_residual_boundary)?;
            d.set_item("mass_full", r.mass_full)?;
            d.set_item("mass_limit_combined", r.mass_limit_combined)?;
            d.set_item("order_vs_prev", r.order_vs_prev)?;
            d.set_item("failure", r.failure.clone())?;
            Ok(d.unbind())
        })
        .collect()
}

/// Runs the acceptance suite: `(id, name, passed, detail)` per criterion.
#[pyfunction]
fn acceptance() -> Vec<(u8, String, bool, String)> {
    core::acceptance::run_all().into_iter().map(|r| (r.id, r.name.to_string(), r.passed, r.detail)).collect()
}

/// Runs the command-line interface with `args` (without the program name)
/// and returns its exit code.
#[pyfunction]
fn cli(args: Vec<String>) -> i32 {
    core::harness::cli::run(std::iter::once("activerods".to_string()).chain(args))
}

#[pymodule]
fn activerods(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoefficient>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(run_full, m)?)?;
    m.add_function(wrap_pyfunction!(run_limit, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_from_physical, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(acceptance, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}

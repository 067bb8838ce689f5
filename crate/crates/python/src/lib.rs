//! Python bindings: the window model, bearing geometry, guidance commands
//! and the simulators. Angles are radians unless a name says otherwise.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use winguide_core::experiments::noise::NoiseConfig;
use winguide_core::experiments::{self, MonteCarloSpec, Scenario, StartBox};
use winguide_core::geometry::{self, Vec3};
use winguide_core::guidance::{self, GuidanceConfig};
use winguide_core::sim_kinematic::{self, KinematicConfig};
use winguide_core::sim_sixdof::SixDofConfig;
use winguide_core::RunResult;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Rectangular window given by its vertices seen from the approach side:
/// top-left, top-right, bottom-right, bottom-left.
#[pyclass(name = "Window", module = "winguide", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWindow {
    inner: geometry::WindowSpec,
}

#[pymethods]
impl PyWindow {
    #[new]
    fn new(e1: [f64; 3], e2: [f64; 3], e3: [f64; 3], e4: [f64; 3]) -> PyResult<Self> {
        geometry::WindowSpec::new(vec3(e1), vec3(e2), vec3(e3), vec3(e4))
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// The 4 m x 3 m window of the reference scenario.
    #[staticmethod]
    fn reference() -> Self {
        Self {
            inner: geometry::WindowSpec::reference(),
        }
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.vertices().iter().map(arr).collect()
    }

    #[getter]
    fn centroid(&self) -> [f64; 3] {
        arr(&self.inner.centroid())
    }

    #[getter]
    fn width(&self) -> f64 {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> f64 {
        self.inner.height()
    }

    fn contains(&self, point: [f64; 3]) -> bool {
        self.inner.contains(&vec3(point))
    }

    fn __repr__(&self) -> String {
        let c = self.inner.centroid();
        format!(
            "Window(centroid=({}, {}, {}), {} x {})",
            c.x,
            c.y,
            c.z,
            self.inner.width(),
            self.inner.height()
        )
    }
}

fn window_or_reference(window: Option<&PyWindow>) -> geometry::WindowSpec {
    window.map_or_else(geometry::WindowSpec::reference, |w| w.inner.clone())
}

/// `(alpha, beta)`, each a list of four angles for E1..E4.
#[pyfunction]
#[pyo3(signature = (position, window=None))]
fn bearing_angles(position: [f64; 3], window: Option<&PyWindow>) -> PyResult<([f64; 4], [f64; 4])> {
    let b = geometry::bearing_angles(&vec3(position), &window_or_reference(window)).map_err(value_err)?;
    Ok((b.alpha, b.beta))
}

/// `(D_x, D_z)` computed from ranges and bearings.
#[pyfunction]
#[pyo3(signature = (position, window=None))]
fn displacements(position: [f64; 3], window: Option<&PyWindow>) -> PyResult<(f64, f64)> {
    let d = geometry::displacements(&vec3(position), &window_or_reference(window)).map_err(value_err)?;
    Ok((d.dx, d.dz))
}

/// `(W, dW/dt)` for the given offsets and commanded angles.
#[pyfunction]
#[pyo3(signature = (dx, dz, gamma, chi, speed=1.0))]
fn lyapunov(dx: f64, dz: f64, gamma: f64, chi: f64, speed: f64) -> (f64, f64) {
    let s = geometry::lyapunov(&geometry::DisplacementState { dx, dz }, gamma, chi, speed, 0.0);
    (s.w, s.w_dot)
}

#[pyfunction]
fn shaping_gamma(bisector: f64) -> PyResult<f64> {
    guidance::shaping_gamma(bisector).map_err(value_err)
}

#[pyfunction]
fn shaping_chi(beta1: f64, beta2: f64) -> PyResult<f64> {
    guidance::shaping_chi(beta1, beta2).map_err(value_err)
}

#[pyfunction]
fn gamma_des(alpha1: f64, alpha4: f64) -> PyResult<f64> {
    guidance::gamma_des(alpha1, alpha4).map_err(value_err)
}

#[pyfunction]
fn chi_des(beta1: f64, beta2: f64, alpha1: f64, alpha4: f64) -> PyResult<f64> {
    guidance::chi_des(beta1, beta2, alpha1, alpha4).map_err(value_err)
}

fn result_dict<'py>(py: Python<'py>, run: &RunResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("status", run.status.label())?;
    d.set_item("safe", run.safe())?;
    if let Some(tr) = run.traversal {
        d.set_item("point", arr(&tr.point))?;
        d.set_item("time", tr.time)?;
        d.set_item("miss", tr.miss)?;
        d.set_item("inside", tr.inside)?;
    } else {
        for key in ["point", "time", "miss", "inside"] {
            d.set_item(key, py.None())?;
        }
    }
    d.set_item("lyapunov_monotone", run.stats.lyapunov_monotone())?;
    d.set_item("max_tracking_error", run.stats.max_tracking_error)?;
    d.set_item("t", run.trace.iter().map(|s| s.t).collect::<Vec<_>>())?;
    d.set_item("position", run.trace.iter().map(|s| arr(&s.pos)).collect::<Vec<_>>())?;
    d.set_item("attitude", run.trace.iter().map(|s| arr(&s.att)).collect::<Vec<_>>())?;
    d.set_item("w", run.trace.iter().map(|s| s.w).collect::<Vec<_>>())?;
    Ok(d)
}

/// Noise-free 6-DOF run of the reference scenario.
#[pyfunction]
fn run_case1(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let run = py.detach(experiments::run_case1).map_err(value_err)?;
    result_dict(py, &run)
}

/// Ideal point-mass run; the trace lists are empty unless `trace` is set.
#[pyfunction]
#[pyo3(signature = (start, window=None, speed=1.0, dt=sim_kinematic::DEFAULT_DT, t_max=200.0, trace=true))]
fn run_kinematic<'py>(
    py: Python<'py>,
    start: [f64; 3],
    window: Option<&PyWindow>,
    speed: f64,
    dt: f64,
    t_max: f64,
    trace: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let w = window_or_reference(window);
    let cfg = GuidanceConfig {
        speed,
        ..Default::default()
    };
    let sim = KinematicConfig {
        dt,
        t_max,
        record_trace: trace,
    };
    let run = py
        .detach(|| sim_kinematic::run_kinematic(&vec3(start), &w, &cfg, &sim))
        .map_err(value_err)?;
    result_dict(py, &run)
}

/// Closed-loop 6-DOF run with the reference gains, optionally with
/// Gaussian bearing noise of `sigma_deg`.
#[pyfunction]
#[pyo3(signature = (start, window=None, sigma_deg=None, seed=0, trace=true))]
fn run_sixdof<'py>(
    py: Python<'py>,
    start: [f64; 3],
    window: Option<&PyWindow>,
    sigma_deg: Option<f64>,
    seed: u64,
    trace: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let scenario = Scenario {
        window: window_or_reference(window),
        start: vec3(start),
        sim: SixDofConfig {
            record_trace: trace,
            ..Default::default()
        },
        ..Scenario::reference()
    };
    let noise = sigma_deg.map(|s| NoiseConfig::from_degrees(s, seed));
    let run = py.detach(|| scenario.run(noise.as_ref())).map_err(value_err)?;
    result_dict(py, &run)
}

/// Per-sigma statistics as a list of dicts with keys `sigma_deg`,
/// `mean_miss`, `std_miss`, `success_rate` and `n`.
#[pyfunction]
#[pyo3(signature = (n_runs=100, sigma_deg=vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], master_seed=2024, start_box=None))]
fn run_monte_carlo<'py>(
    py: Python<'py>,
    n_runs: usize,
    sigma_deg: Vec<f64>,
    master_seed: u64,
    start_box: Option<([f64; 2], [f64; 2], [f64; 2])>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut spec = MonteCarloSpec::reference(master_seed);
    spec.n_runs = n_runs;
    spec.sigmas = sigma_deg.iter().map(|s| s.to_radians()).collect();
    if let Some((x, y, z)) = start_box {
        spec.start_box = StartBox { x, y, z };
    }
    let stats = py.detach(|| experiments::run_monte_carlo(&spec)).map_err(value_err)?;
    stats
        .per_sigma
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("sigma_deg", s.sigma.to_degrees())?;
            d.set_item("mean_miss", s.mean_miss)?;
            d.set_item("std_miss", s.std_miss)?;
            d.set_item("success_rate", s.success_rate)?;
            d.set_item("n", s.n)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn winguide(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_function(wrap_pyfunction!(bearing_angles, m)?)?;
    m.add_function(wrap_pyfunction!(displacements, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(shaping_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(shaping_chi, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_des, m)?)?;
    m.add_function(wrap_pyfunction!(chi_des, m)?)?;
    m.add_function(wrap_pyfunction!(run_case1, m)?)?;
    m.add_function(wrap_pyfunction!(run_kinematic, m)?)?;
    m.add_function(wrap_pyfunction!(run_sixdof, m)?)?;
    m.add_function(wrap_pyfunction!(run_monte_carlo, m)?)?;
    Ok(())
}

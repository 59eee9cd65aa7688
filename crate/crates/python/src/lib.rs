//! Python bindings: corridor design formulas, the slot ring, both planners,
//! scenario simulation, and randomized sweeps. Structured results cross the
//! boundary as plain dicts/lists (via their JSON form), so the Python side
//! needs no wrapper types beyond `CorridorConfig` and `SlotRing`.

use loiter_corridor::geometry;
use loiter_corridor::geometry::CorridorConfig;
use loiter_corridor::planner::{self, PlanError};
use loiter_corridor::scenario::ScenarioConfig;
use loiter_corridor::sim::{self, SimError};
use loiter_corridor::slots;
use loiter_corridor::sweep::{SweepParams, self};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(loiter_corridor_py, NoFeasibleSlotError, PyValueError);
create_exception!(loiter_corridor_py, HopTooSlowError, PyValueError);
create_exception!(loiter_corridor_py, SafetyViolationError, PyRuntimeError);

fn plan_err(err: PlanError) -> PyErr {
    match err {
        PlanError::NoFeasibleSlot => NoFeasibleSlotError::new_err(err.to_string()),
        PlanError::HopTooSlow { .. } => HopTooSlowError::new_err(err.to_string()),
    }
}

fn sim_err(err: SimError) -> PyErr {
    match &err {
        SimError::Plan(e) => plan_err(e.clone()),
        SimError::SafetyViolation { .. } => SafetyViolationError::new_err(err.to_string()),
        SimError::InvalidDesign(_) | SimError::BadScenario(_) => {
            PyValueError::new_err(err.to_string())
        }
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// Serializes any `Serialize` value and rebuilds it as Python objects, so
/// dict/list results match the JSON the CLI emits key for key.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

/// Corridor design parameters: slot count, speed band, radii, lane length,
/// separation floor.
#[pyclass(name = "CorridorConfig", module = "loiter_corridor_py", skip_from_py_object)]
#[derive(Clone)]
struct PyCorridorConfig {
    inner: CorridorConfig,
}

#[pymethods]
impl PyCorridorConfig {
    #[new]
    #[pyo3(signature = (n_slots, v_min, v_max, r_loiter, r_transit, d_lane, d_safe, v_loiter=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_slots: u32,
        v_min: f64,
        v_max: f64,
        r_loiter: f64,
        r_transit: f64,
        d_lane: f64,
        d_safe: f64,
        v_loiter: Option<f64>,
    ) -> Self {
        PyCorridorConfig {
            inner: CorridorConfig {
                n_slots,
                v_min,
                v_max,
                v_loiter_override: v_loiter,
                r_loiter,
                r_transit,
                d_lane,
                d_safe,
            },
        }
    }

    #[getter]
    fn n_slots(&self) -> u32 {
        self.inner.n_slots
    }

    #[getter]
    fn v_min(&self) -> f64 {
        self.inner.v_min
    }

    #[getter]
    fn v_max(&self) -> f64 {
        self.inner.v_max
    }

    #[getter]
    fn r_loiter(&self) -> f64 {
        self.inner.r_loiter
    }

    #[getter]
    fn r_transit(&self) -> f64 {
        self.inner.r_transit
    }

    #[getter]
    fn d_lane(&self) -> f64 {
        self.inner.d_lane
    }

    #[getter]
    fn d_safe(&self) -> f64 {
        self.inner.d_safe
    }

    /// Steady slot-rotation speed: the override if set, else v_min.
    #[getter]
    fn v_loiter(&self) -> f64 {
        self.inner.v_loiter()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// N equiangular slots rotating on the loiter circle, with per-slot
/// occupancy. Angles are 1-based by slot index and live in (0, 2π].
#[pyclass(name = "SlotRing", module = "loiter_corridor_py", skip_from_py_object)]
#[derive(Clone)]
struct PySlotRing {
    inner: slots::SlotRing,
}

impl PySlotRing {
    fn check_index(&self, index: u32) -> PyResult<()> {
        if index < 1 || index > self.inner.n_slots() {
            return Err(PyValueError::new_err(format!(
                "slot index {index} out of range 1..={}",
                self.inner.n_slots()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl PySlotRing {
    #[new]
    fn new(config: &PyCorridorConfig, slot1_gamma: f64, occupied: Vec<u32>) -> PyResult<Self> {
        let inner = slots::SlotRing::new(&config.inner, slot1_gamma, &occupied)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySlotRing { inner })
    }

    #[getter]
    fn n_slots(&self) -> u32 {
        self.inner.n_slots()
    }

    /// Current angle of the given slot, in radians.
    fn gamma(&self, index: u32) -> PyResult<f64> {
        self.check_index(index)?;
        Ok(self.inner.gamma(index))
    }

    /// Angles of all slots, list position i holding slot i+1.
    fn gammas(&self) -> Vec<f64> {
        self.inner.gammas()
    }

    fn is_occupied(&self, index: u32) -> PyResult<bool> {
        self.check_index(index)?;
        Ok(self.inner.is_occupied(index))
    }

    fn set_occupied(&mut self, index: u32, occupied: bool) -> PyResult<()> {
        self.check_index(index)?;
        self.inner.set_occupied(index, occupied);
        Ok(())
    }

    fn occupied_count(&self) -> u32 {
        self.inner.occupied_count()
    }

    /// The ring rotated forward by dt seconds (a new ring; self is unchanged).
    fn advance(&self, dt: f64) -> Self {
        PySlotRing {
            inner: slots::advance(&self.inner, dt),
        }
    }

    /// Per-slot state as a list of {"index", "gamma_rad", "occupied"} dicts.
    fn snapshot(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.snapshot())
    }

    fn __repr__(&self) -> String {
        format!(
            "SlotRing(n_slots={}, occupied={})",
            self.inner.n_slots(),
            self.inner.occupied_count()
        )
    }
}

/// Smallest loiter radius that keeps n_slots equiangular slots at least
/// d_safe apart.
#[pyfunction]
fn required_loiter_radius(n_slots: u32, d_safe: f64) -> PyResult<f64> {
    geometry::required_loiter_radius(n_slots, d_safe)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Minimum transit-lane length for which the arrival window spans at least
/// one slot gap.
#[pyfunction]
fn min_lane_separation(config: &PyCorridorConfig) -> PyResult<f64> {
    geometry::min_lane_separation(&config.inner).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Path length from the main-lane exit to the insertion point.
#[pyfunction]
fn transit_distance(config: &PyCorridorConfig) -> f64 {
    geometry::transit_distance(&config.inner)
}

/// Arrival window as {"phi_rad", "psi_rad", "t_min_s", "t_max_s"}.
#[pyfunction]
fn feasibility_window(py: Python<'_>, config: &PyCorridorConfig) -> PyResult<Py<PyAny>> {
    to_py(py, &geometry::feasibility_window(&config.inner))
}

/// All design-rule violations as strings; empty means the design is sound.
#[pyfunction]
fn validate_design(config: &PyCorridorConfig) -> Vec<String> {
    geometry::validate_design(&config.inner)
        .iter()
        .map(|v| v.to_string())
        .collect()
}

/// Time for one occupant to advance one slot gap at full overspeed.
#[pyfunction]
fn hop_duration(config: &PyCorridorConfig) -> f64 {
    planner::hop_duration(&config.inner)
}

/// Per-slot arrival times and feasibility sets for the ring right now, as a
/// dict of aligned lists (slot indices are 1-based).
#[pyfunction]
fn classify_slots(
    py: Python<'_>,
    config: &PyCorridorConfig,
    ring: &PySlotRing,
) -> PyResult<Py<PyAny>> {
    let window = geometry::feasibility_window(&config.inner);
    let t = slots::classify_slots(&ring.inner, &window, &config.inner);
    to_py(
        py,
        &serde_json::json!({
            "t_arrival": t.t_arrival,
            "feasible": t.feasible,
            "s_f": t.s_f, "t_f": t.t_f,
            "s_uf": t.s_uf, "t_uf": t.t_uf,
            "s_of": t.s_of, "t_of": t.t_of,
            "s_e": t.s_e, "t_e": t.t_e,
        }),
    )
}

/// Insertion plan for the ring right now, as {"desired_slot", "t_in_s",
/// "v_in_mps", "hop_slots", "t_hop_s"}. Raises NoFeasibleSlotError or
/// HopTooSlowError when no plan exists.
#[pyfunction]
fn plan_insertion(
    py: Python<'_>,
    config: &PyCorridorConfig,
    ring: &PySlotRing,
) -> PyResult<Py<PyAny>> {
    let window = geometry::feasibility_window(&config.inner);
    let timing = slots::classify_slots(&ring.inner, &window, &config.inner);
    let plan = planner::plan_insertion(&timing, &window, &config.inner).map_err(plan_err)?;
    to_py(py, &plan)
}

/// Exhaustive reference planner; same result shape as plan_insertion.
#[pyfunction]
fn oracle_plan(
    py: Python<'_>,
    config: &PyCorridorConfig,
    ring: &PySlotRing,
) -> PyResult<Py<PyAny>> {
    let window = geometry::feasibility_window(&config.inner);
    let timing = slots::classify_slots(&ring.inner, &window, &config.inner);
    let plan = planner::oracle_plan(&timing, &window, &config.inner).map_err(plan_err)?;
    to_py(py, &plan)
}

/// Runs a full scenario from TOML text; returns {"plan", "metrics",
/// "events", "final_ring"}. Raises SafetyViolationError if any pair closes
/// below d_safe.
#[pyfunction]
fn run_scenario(py: Python<'_>, scenario_toml: &str) -> PyResult<Py<PyAny>> {
    let scenario = ScenarioConfig::from_toml_str(scenario_toml)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let trace = sim::run_scenario(&scenario).map_err(sim_err)?;
    to_py(
        py,
        &serde_json::json!({
            "plan": trace.plan,
            "metrics": trace.metrics,
            "events": trace.events,
            "final_ring": trace.final_ring,
        }),
    )
}

/// Runs `runs` randomized variants of the scenario (random phase and
/// occupancy) and returns the aggregate outcome dict.
#[pyfunction]
#[pyo3(signature = (scenario_toml, runs, seed=0, dt=None))]
fn sweep_scenarios(
    py: Python<'_>,
    scenario_toml: &str,
    runs: u64,
    seed: u64,
    dt: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let base = ScenarioConfig::from_toml_str(scenario_toml)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = sweep::sweep(&base, &SweepParams { runs, seed, dt }).map_err(sim_err)?;
    to_py(py, &outcome)
}

#[pymodule]
fn loiter_corridor_py(py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorridorConfig>()?;
    m.add_class::<PySlotRing>()?;
    m.add_function(wrap_pyfunction!(required_loiter_radius, m)?)?;
    m.add_function(wrap_pyfunction!(min_lane_separation, m)?)?;
    m.add_function(wrap_pyfunction!(transit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_window, m)?)?;
    m.add_function(wrap_pyfunction!(validate_design, m)?)?;
    m.add_function(wrap_pyfunction!(hop_duration, m)?)?;
    m.add_function(wrap_pyfunction!(classify_slots, m)?)?;
    m.add_function(wrap_pyfunction!(plan_insertion, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_plan, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_scenarios, m)?)?;
    m.add("NoFeasibleSlotError", py.get_type::<NoFeasibleSlotError>())?;
    m.add("HopTooSlowError", py.get_type::<HopTooSlowError>())?;
    m.add(
        "SafetyViolationError",
        py.get_type::<SafetyViolationError>(),
    )?;
    Ok(())
}

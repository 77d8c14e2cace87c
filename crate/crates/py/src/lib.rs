//! Python bindings. Structured values cross the boundary as JSON text.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use skyway_core::harness::{self, AlgorithmSpec, ExperimentConfig, ScenarioConfig};
use skyway_core::{
    Algorithm, CompositionPlan, DroneSpec, Error, LookaheadDepth, PlannerConfig, PlanningContext,
    QualityDirection, WindSample,
};

create_exception!(skyway, ConfigInvalid, PyValueError);
create_exception!(skyway, InstanceTooLarge, PyValueError);
create_exception!(skyway, PlanningError, PyRuntimeError);

fn err(e: Error) -> PyErr {
    match e {
        Error::InstanceTooLarge { .. } => InstanceTooLarge::new_err(e.to_string()),
        Error::ConfigInvalid(_)
        | Error::UnknownNode(_)
        | Error::UnknownSegment(..)
        | Error::EmptyCandidateSet(_) => ConfigInvalid::new_err(e.to_string()),
        other => PlanningError::new_err(other.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    ConfigInvalid::new_err(e.to_string())
}

fn planner(depth: usize, node_limit: usize, prune: bool) -> PlannerConfig {
    PlannerConfig {
        depth: LookaheadDepth(depth),
        node_limit,
        prune,
        ..PlannerConfig::default()
    }
}

/// A skyway network, its drones, wind, perturbation settings and one delivery request.
#[pyclass(module = "skyway", frozen)]
struct Scenario {
    inner: harness::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        harness::Scenario::load(path)
            .map(|inner| Scenario { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        harness::Scenario::from_json(text)
            .map(|inner| Scenario { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (nodes, seed=42))]
    fn generate(nodes: usize, seed: u64) -> PyResult<Self> {
        harness::generate_scenario(&ScenarioConfig {
            node_count: nodes,
            seed,
            ..ScenarioConfig::default()
        })
        .map(|inner| Scenario { inner })
        .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.network.len()
    }

    #[getter]
    fn source(&self) -> usize {
        self.inner.request.source.0
    }

    #[getter]
    fn destination(&self) -> usize {
        self.inner.request.destination.0
    }

    /// Offline plan with the selected drone.
    #[pyo3(signature = (algo="lookahead", depth=1, node_limit=12, prune=false))]
    fn plan(&self, algo: &str, depth: usize, node_limit: usize, prune: bool) -> PyResult<Plan> {
        let algo: Algorithm = algo.parse().map_err(err)?;
        let s = &self.inner;
        let drone = select_drone(s)?;
        let ctx = PlanningContext::new(&s.network, &drone, &s.wind, s.request.package_weight)
            .with_energy(s.energy);
        let composed = skyway_core::compose(&ctx, &s.request, algo, &planner(depth, node_limit, prune))
            .map_err(err)?;
        Ok(Plan {
            inner: composed.plan,
            expanded: composed.stats.expanded,
        })
    }

    /// Plans, then flies the plan under seeded perturbations. Returns the
    /// execution trace as JSON.
    #[pyo3(signature = (algo="lookahead", failure_rate=None, seed=None, depth=1, node_limit=12, prune=false))]
    fn simulate(
        &self,
        algo: &str,
        failure_rate: Option<f64>,
        seed: Option<u64>,
        depth: usize,
        node_limit: usize,
        prune: bool,
    ) -> PyResult<String> {
        let mut s = self.inner.clone();
        if let Some(rate) = failure_rate {
            s.perturbation.failure_rate = rate;
        }
        if let Some(seed) = seed {
            s.perturbation.seed = seed;
        }
        s.perturbation.validate().map_err(err)?;
        let spec = AlgorithmSpec::try_from(algo.to_string()).map_err(err)?;
        let cfg = planner(depth, node_limit, prune);
        let exec = skyway_core::resilience::ExecutionConfig {
            recovery: spec.recovery,
            planner: cfg,
            ..Default::default()
        };
        let injected = s
            .perturbation
            .realize(&s.network, s.request.source)
            .map_err(err)?;
        let run = harness::run_once(&s, &spec, &cfg, &exec, &injected).map_err(err)?;
        serde_json::to_string(&run.trace).map_err(json_err)
    }
}

fn select_drone(s: &harness::Scenario) -> PyResult<DroneSpec> {
    skyway_core::select_drone(&s.drones, s.request.package_weight, &QualityDirection::default())
        .map_err(err)
}

/// A composed delivery plan.
#[pyclass(module = "skyway", frozen)]
struct Plan {
    inner: CompositionPlan,
    #[pyo3(get)]
    expanded: u64,
}

#[pymethods]
impl Plan {
    /// hours
    #[getter]
    fn delivery_time(&self) -> f64 {
        self.inner.total_delivery_time
    }

    /// km
    #[getter]
    fn distance(&self) -> f64 {
        self.inner.total_distance
    }

    #[getter]
    fn recharges(&self) -> usize {
        self.inner.recharge_count()
    }

    /// Visited node ids, source first.
    #[getter]
    fn route(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.inner.legs.iter().map(|l| l.from.0).collect();
        if let Some(last) = self.inner.legs.last() {
            out.push(last.to.0);
        }
        out
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(route={:?}, delivery_time={:.4}, distance={:.3}, recharges={})",
            self.route(),
            self.delivery_time(),
            self.distance(),
            self.recharges()
        )
    }
}

/// Skyline ids of a catalog given as a JSON array of drone specs, optionally
/// after dropping drones that cannot carry `weight` kg.
#[pyfunction]
#[pyo3(signature = (catalog_json, weight=None))]
fn skyline(catalog_json: &str, weight: Option<f64>) -> PyResult<Vec<String>> {
    let drones: Vec<DroneSpec> = serde_json::from_str(catalog_json).map_err(json_err)?;
    for d in &drones {
        d.validate().map_err(err)?;
    }
    let drones = match weight {
        Some(w) => skyway_core::payload_filter(&drones, w).map_err(err)?,
        None => drones,
    };
    Ok(skyway_core::bnl_skyline(&drones, &QualityDirection::default()).skyline)
}

/// Ground speed in km/h for a course (degrees) under a wind blowing from `wind_bearing`.
#[pyfunction]
fn ground_speed(air_speed: f64, wind_speed: f64, wind_bearing: f64, course: f64) -> PyResult<f64> {
    let wind = WindSample {
        speed: wind_speed,
        bearing: wind_bearing,
    };
    skyway_core::ground_speed(air_speed, wind, course)
        .map(|k| k.ground_speed)
        .map_err(err)
}

/// Runs an experiment sweep from a JSON config and returns the metrics CSV.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json).map_err(json_err)?;
    let out = harness::run_experiment(&cfg).map_err(err)?;
    let mut buf = Vec::new();
    harness::write_metrics(&out.records, &mut buf).map_err(err)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

#[pymodule]
fn skyway(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(skyline, m)?)?;
    m.add_function(wrap_pyfunction!(ground_speed, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("ConfigInvalid", m.py().get_type::<ConfigInvalid>())?;
    m.add("InstanceTooLarge", m.py().get_type::<InstanceTooLarge>())?;
    m.add("PlanningError", m.py().get_type::<PlanningError>())?;
    Ok(())
}

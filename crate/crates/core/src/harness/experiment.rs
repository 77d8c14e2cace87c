use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CompositionPlan;
use crate::planner::{compose, Algorithm, LookaheadDepth, PlannerConfig, PlanningContext};
use crate::resilience::{
    execute_resilient, ExecutionConfig, ExecutionTrace, Outcome, PerturbationModel, Perturbations,
    Recovery, DEFAULT_EPSILON,
};
use crate::skyline::{select_drone, QualityDirection};

use super::{derive_seed, generate_scenario, MetricsRecord, Scenario, ScenarioConfig};

/// Seconds charged per generated search state in [`Timing::Work`] mode.
pub const WORK_UNIT_SECS: f64 = 1e-6;

/// How computation time is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    /// search states generated times [`WORK_UNIT_SECS`]; reproducible
    #[default]
    Work,
    /// monotonic wall clock around planning calls
    Wall,
}

/// An offline composer paired with a recovery strategy.
///
/// Parsed from `"lookahead"` (with local recovery), `"greedy"` (with
/// replication), `"bruteforce"` (with global recovery), or an explicit
/// `"planner/recovery"` pair such as `"lookahead/global"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AlgorithmSpec {
    pub label: String,
    pub planner: Algorithm,
    pub recovery: Recovery,
}

impl FromStr for AlgorithmSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (planner, recovery) = match s.split_once('/') {
            Some((p, r)) => (p.parse()?, r.parse()?),
            None => {
                let planner: Algorithm = s.parse()?;
                let recovery = match planner {
                    Algorithm::Lookahead => Recovery::Local,
                    Algorithm::Greedy => Recovery::Replication,
                    Algorithm::Bruteforce => Recovery::Global,
                };
                (planner, recovery)
            }
        };
        Ok(Self {
            label: s.to_string(),
            planner,
            recovery,
        })
    }
}

impl TryFrom<String> for AlgorithmSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AlgorithmSpec> for String {
    fn from(spec: AlgorithmSpec) -> String {
        spec.label
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub node_counts: Vec<usize>,
    pub failure_rates: Vec<f64>,
    pub algorithms: Vec<AlgorithmSpec>,
    /// overrides the 10%-of-nodes default
    pub runs_per_point: Option<usize>,
    pub depth: LookaheadDepth,
    /// brute force refuses larger networks
    pub node_limit: usize,
    /// branch-and-bound for brute force; needed well before 20 nodes
    pub prune: bool,
    pub timing: Timing,
    /// hours
    pub epsilon: f64,
    pub abort_factor: f64,
    /// template; `node_count`, `seed` and `failure_rate` are set per cell
    pub scenario: ScenarioConfig,
    /// template for deviation sizes; rate and seed are set per run
    pub perturbation: PerturbationModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            node_counts: vec![10, 20],
            failure_rates: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            algorithms: ["lookahead", "greedy", "bruteforce"]
                .into_iter()
                .map(|s| s.parse().expect("built-in algorithm"))
                .collect(),
            runs_per_point: None,
            depth: LookaheadDepth(1),
            node_limit: 12,
            prune: false,
            timing: Timing::Work,
            epsilon: DEFAULT_EPSILON,
            abort_factor: 3.0,
            scenario: ScenarioConfig::default(),
            perturbation: PerturbationModel::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_counts.is_empty()
            || self.failure_rates.is_empty()
            || self.algorithms.is_empty()
        {
            return Err(Error::ConfigInvalid(
                "node_counts, failure_rates and algorithms must be non-empty".into(),
            ));
        }
        for &n in &self.node_counts {
            self.scenario_config(n, 0, self.failure_rates[0].clamp(0.1, 0.5))
                .validate()?;
        }
        for &rate in &self.failure_rates {
            PerturbationModel {
                failure_rate: rate,
                ..self.perturbation
            }
            .validate()?;
        }
        if self.runs_per_point == Some(0) {
            return Err(Error::ConfigInvalid(
                "runs_per_point must be at least 1".into(),
            ));
        }
        if !(self.epsilon >= 0.0) || !(self.abort_factor > 0.0) {
            return Err(Error::ConfigInvalid(
                "epsilon must be >= 0 and abort_factor > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            depth: self.depth,
            node_limit: self.node_limit,
            prune: self.prune,
            ..PlannerConfig::default()
        }
    }

    pub fn execution(&self, recovery: Recovery) -> ExecutionConfig {
        ExecutionConfig {
            recovery,
            epsilon: self.epsilon,
            abort_factor: self.abort_factor,
            planner: self.planner(),
        }
    }

    fn scenario_config(&self, node_count: usize, run: usize, failure_rate: f64) -> ScenarioConfig {
        ScenarioConfig {
            node_count,
            seed: derive_seed(self.seed, ((node_count as u64) << 32) | run as u64),
            failure_rate,
            runs_per_point: self.runs_per_point.or(self.scenario.runs_per_point),
            ..self.scenario.clone()
        }
    }

    pub fn runs(&self, node_count: usize) -> usize {
        self.scenario_config(node_count, 0, 0.1).runs()
    }

    /// The perturbation drawn for one (network size, failure rate, run).
    pub fn perturbation_for(
        &self,
        node_count: usize,
        failure_rate: f64,
        run: usize,
    ) -> PerturbationModel {
        let permille = (failure_rate * 1000.0).round() as u64;
        let stream = (1 << 63) | ((node_count as u64) << 40) | (permille << 24) | run as u64;
        PerturbationModel {
            failure_rate,
            seed: derive_seed(self.seed, stream),
            ..self.perturbation
        }
    }

    /// The scenario of run `run` at `node_count`, shared by every algorithm and rate.
    pub fn scenario_for(&self, node_count: usize, run: usize) -> Result<Scenario> {
        let rate = self.scenario.failure_rate;
        generate_scenario(&self.scenario_config(node_count, run, rate))
    }
}

/// One delivery: offline plan plus resilient execution.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub plan: CompositionPlan,
    pub trace: ExecutionTrace,
    pub plan_secs: f64,
    pub plan_expanded: u64,
}

impl RunResult {
    pub fn computation_time(&self, timing: Timing) -> f64 {
        match timing {
            Timing::Work => (self.plan_expanded + self.trace.expanded()) as f64 * WORK_UNIT_SECS,
            Timing::Wall => self.plan_secs + self.trace.compute_secs(),
        }
    }
}

/// Selects the drone, composes with `spec.planner` and executes under
/// `injected` with `spec.recovery`.
pub fn run_once(
    scenario: &Scenario,
    spec: &AlgorithmSpec,
    planner: &PlannerConfig,
    exec: &ExecutionConfig,
    injected: &Perturbations,
) -> Result<RunResult> {
    let drone = select_drone(
        &scenario.drones,
        scenario.request.package_weight,
        &QualityDirection::default(),
    )?;
    let ctx = PlanningContext::new(
        &scenario.network,
        &drone,
        &scenario.wind,
        scenario.request.package_weight,
    )
    .with_energy(scenario.energy);
    let clock = Instant::now();
    let composed = compose(&ctx, &scenario.request, spec.planner, planner)?;
    let plan_secs = clock.elapsed().as_secs_f64();
    let exec = ExecutionConfig {
        recovery: spec.recovery,
        ..*exec
    };
    let trace = execute_resilient(&ctx, &composed.plan, injected, &exec)?;
    Ok(RunResult {
        plan: composed.plan,
        trace,
        plan_secs,
        plan_expanded: composed.stats.expanded,
    })
}

/// Why some runs of a cell are missing from its averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub algorithm: String,
    pub node_count: usize,
    pub failure_rate: f64,
    pub failed_runs: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<MetricsRecord>,
    pub errors: Vec<CellError>,
}

struct Sample {
    delivery_time: f64,
    computation_time: f64,
    distance: f64,
}

/// Runs every (algorithm, node count, failure rate) cell over its seeded
/// runs and averages the completed ones. Runs execute in parallel; results
/// are identical to a sequential execution.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let planner = cfg.planner();

    let instances: Vec<(usize, usize)> = cfg
        .node_counts
        .iter()
        .flat_map(|&n| (0..cfg.runs(n)).map(move |r| (n, r)))
        .collect();
    let scenarios: Vec<Result<Scenario>> = instances
        .par_iter()
        .map(|&(n, r)| cfg.scenario_for(n, r))
        .collect();
    let scenario_of = |n: usize, r: usize| {
        let idx = instances
            .iter()
            .position(|&k| k == (n, r))
            .expect("instance exists");
        &scenarios[idx]
    };

    let mut cells = Vec::new();
    for spec in &cfg.algorithms {
        for &n in &cfg.node_counts {
            for &rate in &cfg.failure_rates {
                cells.push((spec, n, rate));
            }
        }
    }
    let tasks: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, &(_, n, _))| (0..cfg.runs(n)).map(move |r| (c, r)))
        .collect();

    let outcomes: Vec<std::result::Result<Sample, String>> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let (spec, n, rate) = cells[c];
            let scenario = scenario_of(n, r).as_ref().map_err(ToString::to_string)?;
            let injected = cfg
                .perturbation_for(n, rate, r)
                .realize(&scenario.network, scenario.request.source)
                .map_err(|e| e.to_string())?;
            let run = run_once(
                scenario,
                spec,
                &planner,
                &cfg.execution(spec.recovery),
                &injected,
            )
            .map_err(|e| e.to_string())?;
            match run.trace.outcome {
                Outcome::Delivered => {}
                Outcome::Aborted { at, time } => {
                    return Err(format!("delivery aborted at node {at}, t={time:.3} h"))
                }
                Outcome::Stranded { at, time } => {
                    return Err(format!("drone stranded at node {at}, t={time:.3} h"))
                }
            }
            Ok(Sample {
                delivery_time: run.trace.delivery_time(),
                computation_time: run.computation_time(cfg.timing),
                distance: run.trace.distance(),
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (c, &(spec, n, rate)) in cells.iter().enumerate() {
        let mut done = Vec::new();
        let mut failed = Vec::new();
        for (&(cell, _), outcome) in tasks.iter().zip(&outcomes) {
            if cell != c {
                continue;
            }
            match outcome {
                Ok(s) => done.push(s),
                Err(e) => failed.push(e),
            }
        }
        if let Some(first) = failed.first() {
            errors.push(CellError {
                algorithm: spec.label.clone(),
                node_count: n,
                failure_rate: rate,
                failed_runs: failed.len(),
                message: (*first).clone(),
            });
        }
        if done.is_empty() {
            continue;
        }
        let k = done.len() as f64;
        records.push(MetricsRecord {
            algorithm: spec.label.clone(),
            node_count: n,
            failure_rate: rate,
            avg_delivery_time: done.iter().map(|s| s.delivery_time).sum::<f64>() / k,
            avg_computation_time: done.iter().map(|s| s.computation_time).sum::<f64>() / k,
            avg_distance: done.iter().map(|s| s.distance).sum::<f64>() / k,
            runs: done.len(),
        });
    }
    Ok(ExperimentOutput { records, errors })
}

//! Seeded scenarios, experiment orchestration and the metrics CSV.

mod experiment;
mod metrics;
mod scenario;

pub use experiment::{
    run_experiment, run_once, AlgorithmSpec, CellError, ExperimentConfig, ExperimentOutput,
    RunResult, Timing, WORK_UNIT_SECS,
};
pub use metrics::{
    export_metrics, format_g, parse_metrics, write_metrics, MetricsRecord, CSV_HEADER,
};
pub use scenario::{
    generate_scenario, CongestionConfig, Scenario, ScenarioConfig, WindConfig, ARCHETYPES,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent sub-seed for one labelled stream of a master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

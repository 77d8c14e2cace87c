use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skyway_core::harness::{
    export_metrics, format_g, generate_scenario, run_experiment, run_once, AlgorithmSpec,
    ExperimentConfig, Scenario, ScenarioConfig,
};
use skyway_core::resilience::{ExecutionTrace, Outcome, Recovery};
use skyway_core::{
    bnl_skyline, compose, payload_filter, select_drone, Algorithm, CompositionPlan, DroneSpec,
    Error, LookaheadDepth, PlannerConfig, PlanningContext, QualityDirection,
};

#[derive(Parser)]
#[command(name = "skyway", version, about = "Drone delivery planning over skyway networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Skyline of a drone catalog (JSON array of drone specs)
    Skyline {
        #[arg(long)]
        catalog: PathBuf,
        /// drop drones that cannot carry this many kg first
        #[arg(long)]
        weight: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Compose an offline delivery plan
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "lookahead")]
        algo: Algorithm,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// brute force refuses larger networks
        #[arg(long, default_value_t = 12)]
        node_limit: usize,
        /// branch-and-bound for brute force (same result, far fewer states)
        #[arg(long)]
        prune: bool,
        #[arg(long)]
        json: bool,
    },
    /// Plan, then execute under seeded perturbations with recovery
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// defaults to the scenario's perturbation rate
        #[arg(long)]
        failure_rate: Option<f64>,
        /// defaults to the scenario's perturbation seed
        #[arg(long, env = "SKYWAY_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value = "lookahead")]
        algo: Algorithm,
        /// defaults to the algorithm's own strategy
        #[arg(long)]
        recovery: Option<Recovery>,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 12)]
        node_limit: usize,
        /// branch-and-bound for brute force (same result, far fewer states)
        #[arg(long)]
        prune: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run an experiment sweep and write the metrics CSV
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// overrides the config's master seed
        #[arg(long, env = "SKYWAY_SEED")]
        seed: Option<u64>,
    },
    /// Write a generated scenario file
    Generate {
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, env = "SKYWAY_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InstanceTooLarge { .. } => 3,
        Error::ConfigInvalid(_)
        | Error::UnknownNode(_)
        | Error::UnknownSegment(..)
        | Error::EmptyCandidateSet(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("skyway: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Skyline {
            catalog,
            weight,
            json,
        } => skyline(catalog, weight, json),
        Command::Plan {
            scenario,
            algo,
            depth,
            node_limit,
            prune,
            json,
        } => {
            let scenario = Scenario::load(scenario)?;
            let cfg = planner_config(depth, node_limit, prune);
            plan(&scenario, algo, &cfg, json)
        }
        Command::Simulate {
            scenario,
            failure_rate,
            seed,
            algo,
            recovery,
            depth,
            node_limit,
            prune,
            json,
        } => {
            let mut scenario = Scenario::load(scenario)?;
            if let Some(rate) = failure_rate {
                scenario.perturbation.failure_rate = rate;
            }
            if let Some(seed) = seed {
                scenario.perturbation.seed = seed;
            }
            scenario.perturbation.validate()?;
            let spec = AlgorithmSpec::try_from(match recovery {
                Some(r) => format!("{}/{}", algo.name(), r.name()),
                None => algo.name().to_string(),
            })?;
            simulate(&scenario, &spec, &planner_config(depth, node_limit, prune), json)
        }
        Command::Experiment { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let output = run_experiment(&cfg)?;
            for e in &output.errors {
                eprintln!(
                    "cell {} n={} rate={}: {} run(s) failed: {}",
                    e.algorithm,
                    e.node_count,
                    format_g(e.failure_rate),
                    e.failed_runs,
                    e.message
                );
            }
            export_metrics(&output.records, &out)?;
            println!(
                "wrote {} record(s) to {}",
                output.records.len(),
                out.display()
            );
            Ok(())
        }
        Command::Generate { nodes, seed, out } => {
            let scenario = generate_scenario(&ScenarioConfig {
                node_count: nodes,
                seed,
                ..ScenarioConfig::default()
            })?;
            scenario.save(&out)?;
            println!(
                "wrote {}-node scenario ({} -> {}) to {}",
                nodes,
                scenario.request.source,
                scenario.request.destination,
                out.display()
            );
            Ok(())
        }
    }
}

fn planner_config(depth: usize, node_limit: usize, prune: bool) -> PlannerConfig {
    PlannerConfig {
        depth: LookaheadDepth(depth),
        node_limit,
        prune,
        ..PlannerConfig::default()
    }
}

fn skyline(catalog: PathBuf, weight: Option<f64>, json: bool) -> Result<(), Error> {
    let drones: Vec<DroneSpec> = serde_json::from_str(&std::fs::read_to_string(catalog)?)?;
    for d in &drones {
        d.validate()?;
    }
    let drones = match weight {
        Some(w) => payload_filter(&drones, w)?,
        None => drones,
    };
    let result = bnl_skyline(&drones, &QualityDirection::default());
    if json {
        println!("{}", serde_json::to_string_pretty(&result)?);
        return Ok(());
    }
    println!(
        "{:<12} {:>9} {:>10} {:>11}  skyline",
        "id", "time_min", "range_km", "recharge_h"
    );
    for d in &drones {
        println!(
            "{:<12} {:>9} {:>10} {:>11}  {}",
            d.id,
            format_g(d.flight_time),
            format_g(d.flight_range),
            format_g(d.recharge_time_full),
            if result.is_skyline(&d.id) { "yes" } else { "no" }
        );
    }
    println!();
    println!("id,is_skyline,witness");
    for d in &drones {
        let witness = result.dominated.get(&d.id).map(String::as_str).unwrap_or("");
        println!("{},{},{}", d.id, result.is_skyline(&d.id), witness);
    }
    Ok(())
}

fn plan(scenario: &Scenario, algo: Algorithm, cfg: &PlannerConfig, json: bool) -> Result<(), Error> {
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
    let clock = std::time::Instant::now();
    let composed = compose(&ctx, &scenario.request, algo, cfg)?;
    let secs = clock.elapsed().as_secs_f64();
    if json {
        println!("{}", serde_json::to_string_pretty(&composed.plan)?);
        return Ok(());
    }
    print_legs(&composed.plan);
    println!(
        "# algorithm={} drone={} delivery_time_h={} distance_km={} recharges={} expanded={} compute_s={}",
        algo.name(),
        drone.id,
        format_g(composed.plan.total_delivery_time),
        format_g(composed.plan.total_distance),
        composed.plan.recharge_count(),
        composed.stats.expanded,
        format_g(secs)
    );
    Ok(())
}

fn simulate(
    scenario: &Scenario,
    spec: &AlgorithmSpec,
    cfg: &PlannerConfig,
    json: bool,
) -> Result<(), Error> {
    let injected = scenario
        .perturbation
        .realize(&scenario.network, scenario.request.source)?;
    let exec = skyway_core::resilience::ExecutionConfig {
        recovery: spec.recovery,
        planner: *cfg,
        ..Default::default()
    };
    let run = run_once(scenario, spec, cfg, &exec, &injected)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&run.trace)?);
        return Ok(());
    }
    print_legs(&run.trace.executed);
    print_trace(&run.trace);
    let per_episode = if run.trace.episodes.is_empty() {
        0.0
    } else {
        run.trace.compute_secs() / run.trace.episodes.len() as f64
    };
    println!(
        "# algorithm={} status={} delivery_time_h={} distance_km={} failures={} recompositions={} compute_s_per_recomposition={} planned_delivery_time_h={}",
        spec.label,
        status(&run.trace.outcome),
        format_g(run.trace.delivery_time()),
        format_g(run.trace.distance()),
        run.trace.failures.len(),
        run.trace.episodes.len(),
        format_g(per_episode),
        format_g(run.plan.total_delivery_time)
    );
    Ok(())
}

fn status(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Delivered => "delivered".into(),
        Outcome::Aborted { at, .. } => format!("aborted@{at}"),
        Outcome::Stranded { at, .. } => format!("stranded@{at}"),
    }
}

fn print_legs(plan: &CompositionPlan) {
    println!("leg,from,to,depart_h,arrive_h,wait_h,recharge_h,hold_h,battery_pct");
    for (k, l) in plan.legs.iter().enumerate() {
        println!(
            "{},{},{},{},{},{},{},{},{}",
            k + 1,
            l.from,
            l.to,
            format_g(l.depart_time),
            format_g(l.arrive_time),
            format_g(l.wait_duration),
            format_g(l.recharge_duration),
            format_g(l.hold_duration),
            format_g(l.battery_on_arrival)
        );
    }
}

fn print_trace(trace: &ExecutionTrace) {
    if trace.failures.is_empty() {
        return;
    }
    println!("failure,node,expected_h,actual_h,delta_h,recovery,depth,adopted,compute_s");
    // the destination's own deviation has no episode
    for (k, f) in trace.failures.iter().enumerate() {
        let episode = trace.episodes.get(k).map_or(",,,".to_string(), |e| {
            format!(
                "{},{},{},{}",
                e.recovery.name(),
                e.depth,
                e.adopted,
                format_g(e.compute_secs)
            )
        });
        println!(
            "{},{},{},{},{},{}",
            k + 1,
            f.node_id,
            format_g(f.expected_arrival),
            format_g(f.actual_arrival),
            format_g(f.delta),
            episode
        );
    }
}

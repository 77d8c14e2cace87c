use proptest::prelude::*;

use skyway_core::harness::{
    derive_seed, generate_scenario, run_experiment, AlgorithmSpec, ExperimentConfig, Scenario,
    ScenarioConfig,
};
use skyway_core::resilience::{execute_resilient, ExecutionConfig, PerturbationModel, Recovery};
use skyway_core::{
    commit_plan, compose, select_drone, validate_plan, Algorithm, DroneSpec, PlannerConfig,
    PlanningContext, QualityDirection,
};

fn scenario(nodes: usize, seed: u64) -> (Scenario, DroneSpec) {
    let s = generate_scenario(&ScenarioConfig {
        node_count: nodes,
        seed,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let d = select_drone(&s.drones, s.request.package_weight, &QualityDirection::default()).unwrap();
    (s, d)
}

fn ctx<'a>(s: &'a Scenario, d: &'a DroneSpec) -> PlanningContext<'a> {
    PlanningContext::new(&s.network, d, &s.wind, s.request.package_weight).with_energy(s.energy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_planner_returns_a_valid_plan(seed in any::<u64>(), nodes in 10usize..=12) {
        let (s, d) = scenario(nodes, seed);
        let ctx = ctx(&s, &d);
        let best = compose(&ctx, &s.request, Algorithm::Bruteforce, &PlannerConfig::default());
        for algo in [Algorithm::Lookahead, Algorithm::Greedy, Algorithm::Bruteforce] {
            let Ok(c) = compose(&ctx, &s.request, algo, &PlannerConfig::default()) else {
                continue;
            };
            let problems = validate_plan(&c.plan, &s.network, &s.request);
            prop_assert!(problems.is_empty(), "{algo:?}: {problems:?}");
            let optimum = best.as_ref().expect("brute force solves what others solve");
            prop_assert!(c.plan.arrival_time() >= optimum.plan.arrival_time() - 1e-9);
            prop_assert!(c.plan.total_distance
                >= s.network.straight_line(s.request.source, s.request.destination) - 1e-9);
        }
    }

    #[test]
    fn executed_traces_are_safe(seed in any::<u64>(), permille in 100u64..=500) {
        let (s, d) = scenario(10, seed);
        let ctx = ctx(&s, &d);
        let Ok(plan) = compose(&ctx, &s.request, Algorithm::Lookahead, &PlannerConfig::default())
        else {
            return Ok(());
        };
        let injected = PerturbationModel {
            failure_rate: permille as f64 / 1000.0,
            seed,
            ..PerturbationModel::default()
        }
        .realize(&s.network, s.request.source)
        .unwrap();
        for recovery in [Recovery::Replication, Recovery::Local, Recovery::Global] {
            let cfg = ExecutionConfig { recovery, ..ExecutionConfig::default() };
            let trace = execute_resilient(&ctx, &plan.plan, &injected, &cfg).unwrap();
            prop_assert!(trace.executed.legs.iter().all(|l| l.battery_on_arrival >= 0.0));
            // the drone's own charging fits next to the background traffic
            let mut net = s.network.clone();
            prop_assert!(commit_plan(&mut net, &trace.executed).is_ok());
            for node in net.nodes() {
                prop_assert!(node.calendar.max_overlap() <= node.pad_count);
            }
        }
    }
}

#[test]
fn scenario_file_round_trip() {
    let (s, d) = scenario(14, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    s.save(&path).unwrap();
    let back = Scenario::load(&path).unwrap();
    assert_eq!(back, s);
    let cfg = PlannerConfig::default();
    let a = compose(&ctx(&s, &d), &s.request, Algorithm::Lookahead, &cfg).unwrap();
    let b = compose(&ctx(&back, &d), &back.request, Algorithm::Lookahead, &cfg).unwrap();
    assert_eq!(a.plan, b.plan);
}

#[test]
fn no_perturbation_no_recomposition() {
    for i in 0..20 {
        let (s, d) = scenario(10 + i % 5, derive_seed(11, i as u64));
        let ctx = ctx(&s, &d);
        let plan = compose(&ctx, &s.request, Algorithm::Lookahead, &PlannerConfig::default())
            .unwrap()
            .plan;
        let none = PerturbationModel {
            failure_rate: 0.0,
            ..PerturbationModel::default()
        }
        .realize(&s.network, s.request.source)
        .unwrap();
        for recovery in [Recovery::Replication, Recovery::Local, Recovery::Global] {
            let cfg = ExecutionConfig {
                recovery,
                ..ExecutionConfig::default()
            };
            let trace = execute_resilient(&ctx, &plan, &none, &cfg).unwrap();
            assert_eq!(trace.executed, plan);
            assert!(trace.episodes.is_empty());
        }
    }
}

#[test]
fn delivery_time_grows_with_the_failure_rate() {
    let cfg = ExperimentConfig {
        seed: 3,
        node_counts: vec![10],
        failure_rates: vec![0.0, 0.1, 0.3, 0.5],
        algorithms: vec![AlgorithmSpec::try_from("lookahead".to_string()).unwrap()],
        runs_per_point: Some(30),
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    let times: Vec<f64> = out.records.iter().map(|r| r.avg_delivery_time).collect();
    assert_eq!(times.len(), 4);
    assert!(times.windows(2).all(|w| w[0] <= w[1]), "{times:?}");
}

#[test]
fn metrics_are_physically_plausible() {
    let cfg = ExperimentConfig {
        seed: 8,
        node_counts: vec![10, 12],
        failure_rates: vec![0.2],
        algorithms: ["lookahead", "bruteforce"]
            .map(|a| AlgorithmSpec::try_from(a.to_string()).unwrap())
            .to_vec(),
        runs_per_point: Some(5),
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), 4);
    for rec in &out.records {
        let mut shortest = 0.0;
        let mut fastest = 0.0_f64;
        for r in 0..5 {
            let s = cfg.scenario_for(rec.node_count, r).unwrap();
            shortest += s.network.straight_line(s.request.source, s.request.destination) / 5.0;
            let top = s.drones.iter().map(|d| d.speed).fold(0.0, f64::max) + s.wind.max_speed();
            fastest = fastest.max(top);
        }
        assert!(rec.runs == 5, "{rec:?}");
        assert!(rec.avg_distance >= shortest - 1e-9, "{rec:?}");
        assert!(rec.avg_delivery_time >= rec.avg_distance / fastest, "{rec:?}");
        assert!(rec.avg_computation_time >= 0.0);
    }
}

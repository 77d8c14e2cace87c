use super::*;
use crate::calendar::PadCalendar;
use crate::model::{validate_plan, DeliveryRequest, DroneSpec, Node};
use crate::planner::{compose_bruteforce, simulate_route, LookaheadDepth};
use crate::wind::WindField;

fn drone() -> DroneSpec {
    DroneSpec {
        id: "t1".into(),
        name: "test".into(),
        payload_capacity: 2.0,
        flight_time: 40.0,
        flight_range: 40.0,
        speed: 60.0,
        recharge_time_full: 1.0,
    }
}

fn network(points: &[(f64, f64)], edges: &[(usize, usize)]) -> SkywayNetwork {
    let nodes = points
        .iter()
        .enumerate()
        .map(|(i, &p)| Node::new(i, p, 5))
        .collect();
    SkywayNetwork::new(nodes, edges).unwrap()
}

fn busy(net: &mut SkywayNetwork, node: usize, from: f64, to: f64) {
    net.node_mut(NodeId(node)).unwrap().calendar =
        PadCalendar::from_intervals(vec![vec![(from, to)]; 5]).unwrap();
}

fn request(src: usize, dst: usize) -> DeliveryRequest {
    DeliveryRequest {
        source: NodeId(src),
        destination: NodeId(dst),
        package_weight: 1.0,
        start_time: 0.0,
    }
}

fn late(node: usize, hours: f64) -> Perturbations {
    Perturbations {
        delays: vec![InjectedDelay {
            node: NodeId(node),
            delay: hours,
        }],
        shifts: Vec::new(),
    }
}

fn ids(raw: &[usize]) -> Vec<NodeId> {
    raw.iter().map(|&i| NodeId(i)).collect()
}

// Stations every 10 km on a line; 7 legs.
fn line_plan(flags: &[bool]) -> (SkywayNetwork, CompositionPlan) {
    let points: Vec<_> = (0..8).map(|i| (i as f64 * 10.0, 0.0)).collect();
    let edges: Vec<_> = (1..8).map(|i| (i - 1, i)).collect();
    let net = network(&points, &edges);
    let (d, w) = (drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let nodes = ids(&(0..8).collect::<Vec<_>>());
    let (plan, _) = simulate_route(&ctx, (NodeId(0), 0.0, 100.0), &nodes, flags, true).unwrap();
    (net, plan)
}

#[test]
fn detection_tolerance() {
    assert!(!detect_failure(4.0, 4.0, DEFAULT_EPSILON));
    assert!(detect_failure(4.0, 4.25, DEFAULT_EPSILON));
    assert!(detect_failure(4.0, 3.5, DEFAULT_EPSILON));
    assert!(!detect_failure(4.0, 4.0 + 0.5 / 60.0, DEFAULT_EPSILON));
}

#[test]
fn absorbed_delay_gives_one() {
    let (_, plan) = line_plan(&[false; 7]);
    let mut td = vec![0.0; 7];
    td[1] = 0.2;
    td[2] = -0.05;
    td[3] = 0.1;
    assert_eq!(
        failure_analysis(&plan, 1, &td, &[false; 7]),
        LookaheadDepth(1)
    );
}

#[test]
fn congestion_ahead_caps_the_span() {
    let (_, plan) = line_plan(&[false; 7]);
    // failure on leg 1; delay survives legs 2..=4, congestion at leg 3 (2 hops on)
    let td = [0.0, 0.3, 0.3, 0.2, 0.1, -0.1, -0.1];
    let mut congested = [false; 7];
    congested[3] = true;
    assert_eq!(
        failure_analysis(&plan, 1, &td, &congested),
        LookaheadDepth(2)
    );
    // without congestion the failed span (4) decides
    assert_eq!(
        failure_analysis(&plan, 1, &td, &[false; 7]),
        LookaheadDepth(4)
    );
}

#[test]
fn global_impact_reaches_destination() {
    let (_, plan) = line_plan(&[false; 7]);
    let td = [0.0, 0.0, 0.4, 0.4, 0.4, 0.4, 0.4];
    assert_eq!(
        failure_analysis(&plan, 1, &td, &[false; 7]),
        LookaheadDepth(5)
    );
}

#[test]
fn analysis_stays_in_bounds() {
    let (_, plan) = line_plan(&[false; 7]);
    for cur in 0..6 {
        let left = 7 - cur - 1;
        for delta in [-0.5, 0.0, 0.5] {
            let td = project_delays(&plan, cur, delta);
            for congested in [[false; 7], [true; 7]] {
                let ld = failure_analysis(&plan, cur, &td, &congested).0;
                assert!((1..=left).contains(&ld));
            }
        }
    }
}

#[test]
fn slack_absorbs_projected_delay() {
    let (_, mut plan) = line_plan(&[false; 7]);
    plan.legs[2].wait_duration = 0.25;
    let td = project_delays(&plan, 1, 0.4);
    assert_eq!(td[0], 0.0);
    assert_eq!(td[1], 0.4);
    assert_eq!(td[2], 0.4);
    assert!((td[3] - 0.15).abs() < 1e-12);
    let td = project_delays(&plan, 1, 0.2);
    assert!(td[3] < 0.0);
    assert_eq!(
        failure_analysis(&plan, 1, &td, &[false; 7]),
        LookaheadDepth(2)
    );
}

#[test]
fn realize_is_seeded_and_excludes_source() {
    let (net, _) = line_plan(&[false; 7]);
    let model = PerturbationModel {
        failure_rate: 0.5,
        seed: 7,
        ..PerturbationModel::default()
    };
    let a = model.realize(&net, NodeId(3)).unwrap();
    assert_eq!(a, model.realize(&net, NodeId(3)).unwrap());
    assert_eq!(a.delays.len(), 4);
    assert!(a.delays.iter().all(|d| d.node != NodeId(3)));
    assert!(a
        .delays
        .iter()
        .all(|d| (-10.0 / 60.0..=0.5).contains(&d.delay)));
    let other = PerturbationModel { seed: 8, ..model };
    assert_ne!(a, other.realize(&net, NodeId(3)).unwrap());
    let bad = PerturbationModel {
        failure_rate: 1.5,
        ..model
    };
    assert!(bad.realize(&net, NodeId(0)).is_err());
}

// 15 km hops 0-1-2-3 with a bypass 1-4-3. The drone must recharge halfway;
// every pad at 1 is taken, and the pads at 2 fill up from t = 1.3 h on.
fn detour() -> SkywayNetwork {
    let mut net = network(
        &[
            (0.0, 0.0),
            (15.0, 0.0),
            (30.0, 0.0),
            (45.0, 0.0),
            (30.0, 4.0),
        ],
        &[(0, 1), (1, 2), (2, 3), (1, 4), (4, 3)],
    );
    busy(&mut net, 1, 0.0, 100.0);
    busy(&mut net, 2, 1.3, 3.0);
    net
}

#[test]
fn zero_perturbation_replays_the_plan() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let plan = compose_bruteforce(&ctx, &request(0, 3), &PlannerConfig::default())
        .unwrap()
        .plan;
    for recovery in [Recovery::Replication, Recovery::Local, Recovery::Global] {
        let cfg = ExecutionConfig {
            recovery,
            ..ExecutionConfig::default()
        };
        let trace = execute_resilient(&ctx, &plan, &Perturbations::none(), &cfg).unwrap();
        assert_eq!(trace.executed, plan);
        assert!(trace.failures.is_empty() && trace.episodes.is_empty());
        assert!(trace.delivered());
    }
}

#[test]
fn detour_beats_waiting_out_the_delay() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let req = request(0, 3);
    let plan = compose_bruteforce(&ctx, &req, &PlannerConfig::default())
        .unwrap()
        .plan;
    assert_eq!(plan.nodes(), ids(&[0, 1, 2, 3]));
    assert!((plan.arrival_time() - 1.5).abs() < 1e-9);

    let run = |recovery| {
        let cfg = ExecutionConfig {
            recovery,
            ..ExecutionConfig::default()
        };
        execute_resilient(&ctx, &plan, &late(1, 0.5), &cfg).unwrap()
    };
    let replication = run(Recovery::Replication);
    let local = run(Recovery::Local);
    let global = run(Recovery::Global);
    for t in [&replication, &local, &global] {
        assert!(t.delivered());
        assert_eq!(t.failures.len(), 1);
        assert!(validate_plan(&t.executed, &net, &req).is_empty());
        assert!(t.executed.legs.iter().all(|l| l.battery_on_arrival >= 0.0));
    }
    assert_eq!(replication.executed.nodes(), ids(&[0, 1, 2, 3]));
    assert!((replication.executed.arrival_time() - 4.0).abs() < 1e-9);
    assert_eq!(local.executed.nodes(), ids(&[0, 1, 4, 3]));
    assert_eq!(local.episodes[0].depth, 2);
    assert!(local.delivery_time() < replication.delivery_time());
    assert!(global.delivery_time() <= local.delivery_time() + 1e-12);
}

#[test]
fn late_arrival_shrinks_the_queue_at_a_congested_station() {
    // 0-1-2-3 line, recharge planned at 2 where pads are busy until 25 min
    // after the planned arrival; the drone reaches 1 fifteen minutes late.
    let mut net = network(
        &[(0.0, 0.0), (15.0, 0.0), (30.0, 0.0), (45.0, 0.0)],
        &[(0, 1), (1, 2), (2, 3)],
    );
    busy(&mut net, 2, 0.0, 0.5 + 25.0 / 60.0);
    let (d, w) = (drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let (plan, _) = simulate_route(
        &ctx,
        (NodeId(0), 0.0, 100.0),
        &ids(&[0, 1, 2, 3]),
        &[false, false, true],
        false,
    )
    .unwrap();
    assert!((plan.legs[1].wait_duration - 25.0 / 60.0).abs() < 1e-12);

    let trace =
        execute_resilient(&ctx, &plan, &late(1, 0.25), &ExecutionConfig::default()).unwrap();
    assert_eq!(trace.episodes.len(), 1);
    assert_eq!(trace.episodes[0].depth, 1);
    let after = trace.executed.legs[1].wait_duration;
    assert!((after - 10.0 / 60.0).abs() < 1e-9, "wait {after}");
    assert!(after <= plan.legs[1].wait_duration);
}

#[test]
fn identity_splice_only_retimes() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let req = request(0, 3);
    let plan = compose_bruteforce(&ctx, &req, &PlannerConfig::default())
        .unwrap()
        .plan;
    let t = plan.legs[0].arrive_time + 0.02;
    let b = plan.legs[0].battery_on_arrival;
    let frag = replicate(&ctx, &plan, 0, t, b).unwrap().plan;
    let spliced = update_plan(&ctx, &plan, &frag, 0).unwrap();
    assert_eq!(spliced.nodes(), plan.nodes());
    assert!((spliced.arrival_time() - plan.arrival_time() - 0.02).abs() < 1e-9);
    assert!(validate_plan(&spliced, &net, &req).is_empty());

    // a one-hop fragment rejoins the plan and the rest is re-timed
    let (short, _) =
        simulate_route(&ctx, (NodeId(1), t, b), &ids(&[1, 2]), &[false], false).unwrap();
    let spliced = update_plan(&ctx, &plan, &short, 0).unwrap();
    assert_eq!(spliced.nodes(), plan.nodes());
    assert!(validate_plan(&spliced, &net, &req).is_empty());
}

#[test]
fn detour_splice_replaces_the_remainder() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let req = request(0, 3);
    let plan = compose_bruteforce(&ctx, &req, &PlannerConfig::default())
        .unwrap()
        .plan;
    let (t, b) = (plan.legs[0].arrive_time, plan.legs[0].battery_on_arrival);
    let (frag, _) = simulate_route(
        &ctx,
        (NodeId(1), t, b),
        &ids(&[1, 4, 3]),
        &[false, true],
        false,
    )
    .unwrap();
    let spliced = update_plan(&ctx, &plan, &frag, 0).unwrap();
    assert_eq!(spliced.nodes(), ids(&[0, 1, 4, 3]));
    assert_eq!(spliced.arrival_time(), frag.arrival_time());
    assert!(validate_plan(&spliced, &net, &req).is_empty());
}

#[test]
fn misaligned_fragments_are_rejected() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let plan = compose_bruteforce(&ctx, &request(0, 3), &PlannerConfig::default())
        .unwrap()
        .plan;
    let (wrong_start, _) =
        simulate_route(&ctx, (NodeId(2), 1.0, 90.0), &ids(&[2, 3]), &[false], false).unwrap();
    assert!(matches!(
        update_plan(&ctx, &plan, &wrong_start, 0),
        Err(Error::SpliceMismatch(_))
    ));
    let (off_plan, _) =
        simulate_route(&ctx, (NodeId(1), 0.3, 60.0), &ids(&[1, 4]), &[false], false).unwrap();
    assert!(matches!(
        update_plan(&ctx, &plan, &off_plan, 0),
        Err(Error::SpliceMismatch(_))
    ));
}

#[test]
fn global_single_remaining_leg() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let plan = compose_bruteforce(&ctx, &request(0, 3), &PlannerConfig::default())
        .unwrap()
        .plan;
    let leg = &plan.legs[1];
    let frag = recompose_global_bruteforce(
        &ctx,
        &plan,
        1,
        leg.arrive_time,
        leg.battery_on_arrival,
        &PlannerConfig::default(),
    )
    .unwrap()
    .plan;
    assert_eq!(frag.nodes(), ids(&[2, 3]));
}

#[test]
fn local_on_single_route_keeps_the_route() {
    let (net, plan) = line_plan(&[false; 7]);
    let (d, w) = (drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let local = execute_resilient(&ctx, &plan, &late(2, 0.3), &ExecutionConfig::default()).unwrap();
    let rep = execute_resilient(
        &ctx,
        &plan,
        &late(2, 0.3),
        &ExecutionConfig {
            recovery: Recovery::Replication,
            ..ExecutionConfig::default()
        },
    )
    .unwrap();
    assert_eq!(local.executed.nodes(), plan.nodes());
    assert_eq!(rep.executed.nodes(), plan.nodes());
    // same stations, but local recovery may move the recharge
    assert!(local.delivery_time() <= rep.delivery_time());
}

#[test]
fn long_stall_aborts() {
    let (mut net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let plan = compose_bruteforce(&ctx, &request(0, 3), &PlannerConfig::default())
        .unwrap()
        .plan;
    // the pads at 2 stay busy long after the drone turns up there
    busy(&mut net, 2, 1.3, 10.0);
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let cfg = ExecutionConfig {
        recovery: Recovery::Replication,
        ..ExecutionConfig::default()
    };
    let trace = execute_resilient(&ctx, &plan, &late(1, 0.5), &cfg).unwrap();
    assert!(matches!(
        trace.outcome,
        Outcome::Aborted { at: NodeId(2), .. }
    ));
}

#[test]
fn injected_lateness_extends_the_horizon() {
    let (net, d, w) = (detour(), drone(), WindField::calm());
    let ctx = PlanningContext::new(&net, &d, &w, 1.0);
    let plan = compose_bruteforce(&ctx, &request(0, 3), &PlannerConfig::default())
        .unwrap()
        .plan;
    let cfg = ExecutionConfig {
        recovery: Recovery::Replication,
        ..ExecutionConfig::default()
    };
    let trace = execute_resilient(&ctx, &plan, &late(2, 5.0), &cfg).unwrap();
    assert!(trace.delivered());
}

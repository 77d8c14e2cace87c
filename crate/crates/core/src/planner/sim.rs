//! Leg-level timing shared by every planner, the recomposer and the executor.
//!
//! All time and battery arithmetic flows through [`dwell`] and [`hop`], so two
//! routes evaluated by different searches produce bit-identical numbers.

use crate::model::{CompositionPlan, NodeId, Origin, PlanLeg};
use crate::wind::{ground_speed, travel_time, LegKinematics};

use super::PlanningContext;

/// Outcome of arriving at a station and optionally recharging there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dwell {
    pub wait: f64,
    /// pad start; equals arrival when there is no recharge
    pub start: f64,
    pub recharge: f64,
    pub ready: f64,
    pub battery: f64,
}

/// Queue for a pad and charge to full, or do nothing when `recharge` is false
/// or the battery is already full.
pub fn dwell(
    ctx: &PlanningContext<'_>,
    node: NodeId,
    arrive: f64,
    battery: f64,
    recharge: bool,
) -> Dwell {
    if !recharge || battery >= 100.0 {
        return Dwell {
            wait: 0.0,
            start: arrive,
            recharge: 0.0,
            ready: arrive,
            battery,
        };
    }
    let duration = (100.0 - battery) / 100.0 * ctx.drone.recharge_time_full;
    let start = ctx.network.nodes()[node.0]
        .calendar
        .next_pad_available(arrive, duration);
    Dwell {
        wait: start - arrive,
        start,
        recharge: duration,
        ready: start + duration,
        battery: 100.0,
    }
}

/// One flown segment. `hold` is time grounded before departure waiting for a
/// wind epoch in which the leg is flyable with the battery on board.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub hold: f64,
    pub depart: f64,
    pub arrive: f64,
    pub consumed: f64,
    pub distance: f64,
    pub kinematics: LegKinematics,
}

/// Earliest feasible flight `from -> to` departing no sooner than `ready`.
///
/// Departure candidates are `ready` itself and every later wind-epoch boundary;
/// the wind at departure governs the whole leg. `None` if no epoch works.
pub fn hop(
    ctx: &PlanningContext<'_>,
    from: NodeId,
    to: NodeId,
    ready: f64,
    battery: f64,
) -> Option<Hop> {
    let seg = ctx.network.segment(from, to)?;
    let course = seg.bearing_from(from);
    std::iter::once(ready)
        .chain(ctx.wind.changes_after(ready))
        .find_map(|depart| {
            let kin = ground_speed(ctx.drone.speed, ctx.wind.at(depart), course).ok()?;
            let consumed = ctx
                .energy
                .battery_consumed(seg.distance, ctx.package_weight, &kin);
            (battery - consumed >= ctx.energy.reserve_margin).then(|| Hop {
                hold: depart - ready,
                depart,
                arrive: depart + travel_time(seg.distance, &kin),
                consumed,
                distance: seg.distance,
                kinematics: kin,
            })
        })
}

/// Replays a fixed node sequence with fixed recharge decisions (`flags[k]` is the
/// decision at `nodes[k]`). With `lazy_recharge`, a leg that cannot be flown
/// triggers a recharge at its departure node instead of failing.
///
/// Returns the plan and the effective recharge flags, or `None` when some leg
/// is infeasible.
pub fn simulate_route(
    ctx: &PlanningContext<'_>,
    start: (NodeId, f64, f64),
    nodes: &[NodeId],
    flags: &[bool],
    lazy_recharge: bool,
) -> Option<(CompositionPlan, Vec<bool>)> {
    let (origin_node, time, battery) = start;
    if nodes.len() < 2 || nodes[0] != origin_node || flags.len() + 1 < nodes.len() {
        return None;
    }
    let mut origin = Origin::at(origin_node, time, battery);
    let first = dwell(ctx, origin_node, time, battery, flags[0]);
    origin.wait_duration = first.wait;
    origin.recharge_duration = first.recharge;

    let mut legs: Vec<PlanLeg> = Vec::with_capacity(nodes.len() - 1);
    let mut used = Vec::with_capacity(nodes.len() - 1);
    let mut ready = first.ready;
    let mut charge = first.battery;
    // arrival time and battery at the current node, before any dwell
    let mut arrived = (time, battery);
    let mut distance = 0.0;
    let last = nodes.len() - 1;

    for k in 0..last {
        let (from, to) = (nodes[k], nodes[k + 1]);
        let mut recharged = flags[k] && arrived.1 < 100.0;
        let flown = match hop(ctx, from, to, ready, charge) {
            Some(h) => h,
            None if lazy_recharge && !recharged && arrived.1 < 100.0 => {
                let d = dwell(ctx, from, arrived.0, arrived.1, true);
                match legs.last_mut() {
                    Some(prev) => {
                        prev.wait_duration = d.wait;
                        prev.recharge_duration = d.recharge;
                    }
                    None => {
                        origin.wait_duration = d.wait;
                        origin.recharge_duration = d.recharge;
                    }
                }
                ready = d.ready;
                charge = d.battery;
                recharged = true;
                hop(ctx, from, to, ready, charge)?
            }
            None => return None,
        };
        used.push(recharged);
        match legs.last_mut() {
            Some(prev) => prev.hold_duration = flown.hold,
            None => origin.hold_duration = flown.hold,
        }
        distance += flown.distance;
        charge -= flown.consumed;
        legs.push(PlanLeg {
            from,
            to,
            depart_time: flown.depart,
            arrive_time: flown.arrive,
            wait_duration: 0.0,
            recharge_duration: 0.0,
            hold_duration: 0.0,
            battery_on_arrival: charge,
        });
        arrived = (flown.arrive, charge);
        if k + 1 < last {
            let d = dwell(ctx, to, flown.arrive, charge, flags[k + 1]);
            let leg = legs.last_mut().expect("leg just pushed");
            leg.wait_duration = d.wait;
            leg.recharge_duration = d.recharge;
            ready = d.ready;
            charge = d.battery;
        }
    }
    Some((
        CompositionPlan::new(ctx.drone.id.clone(), origin, legs, distance),
        used,
    ))
}

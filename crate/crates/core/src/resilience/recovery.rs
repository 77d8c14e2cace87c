//! Impact analysis and the three ways of repairing a plan after a failure.
//!
//! Indices follow the plan's legs: `cur_index` is the leg whose arrival
//! deviated, so the drone now stands at `plan.legs[cur_index].to`.

use crate::error::{Error, Result};
use crate::model::{CompositionPlan, NodeId, SkywayNetwork};
use crate::planner::{
    bruteforce_route, lookahead_route, simulate_route, Composed, LookaheadDepth, PlannerConfig,
    PlanningContext, RouteQuery, SearchStats,
};

fn remaining(plan: &CompositionPlan, cur_index: usize) -> usize {
    plan.legs.len().saturating_sub(cur_index + 1)
}

/// Projected arrival shift per leg when leg `cur_index` arrives `delta` hours
/// off plan. Planned slack (pad waits and wind holds) at each intermediate
/// station absorbs lateness; recharges do not. Entries before `cur_index` are 0.
pub fn project_delays(plan: &CompositionPlan, cur_index: usize, delta: f64) -> Vec<f64> {
    let mut td = vec![0.0; plan.legs.len()];
    if cur_index >= plan.legs.len() {
        return td;
    }
    td[cur_index] = delta;
    for j in cur_index + 1..plan.legs.len() {
        let before = &plan.legs[j - 1];
        td[j] = td[j - 1] - (before.wait_duration + before.hold_duration);
    }
    td
}

/// Per leg: is its arrival station congested? A station counts as congested if
/// the plan queues there or all of its pads are busy at the planned arrival.
pub fn congestion_view(network: &SkywayNetwork, plan: &CompositionPlan) -> Vec<bool> {
    plan.legs
        .iter()
        .map(|leg| {
            leg.wait_duration > 0.0
                || network.nodes()[leg.to.0]
                    .calendar
                    .is_congested_at(leg.arrive_time)
        })
        .collect()
}

/// How many services ahead a failure at `cur_index` reaches.
///
/// The affected span runs to the first congested station ahead (or to the
/// destination); the failed span is the failed service plus every following
/// one whose projected delay stays non-negative. The smaller span wins, and
/// the result is clamped to `[1, remaining legs]`.
pub fn failure_analysis(
    plan: &CompositionPlan,
    cur_index: usize,
    projected_delays: &[f64],
    congested: &[bool],
) -> LookaheadDepth {
    let left = remaining(plan, cur_index);
    let ahead = cur_index + 1..plan.legs.len();

    let affected = ahead
        .clone()
        .find(|&j| congested.get(j).copied().unwrap_or(false))
        .map_or(left, |j| j - cur_index);

    let failed = 1 + ahead
        .take_while(|&j| projected_delays.get(j).is_some_and(|&td| td >= 0.0))
        .count();

    LookaheadDepth(affected.min(failed).clamp(1, left.max(1)))
}

/// Re-flies the remaining route unchanged from the drone's actual state,
/// recharging wherever the shifted timing makes a leg infeasible.
pub fn replicate(
    ctx: &PlanningContext<'_>,
    plan: &CompositionPlan,
    cur_index: usize,
    cur_time: f64,
    battery: f64,
) -> Result<Composed> {
    let nodes = plan.nodes();
    let p = cur_index + 1;
    if p + 1 > nodes.len() - 1 {
        return Err(Error::SpliceMismatch("no legs left to replicate".into()));
    }
    let all = plan.recharge_flags();
    let (fragment, _) = simulate_route(
        ctx,
        (nodes[p], cur_time, battery),
        &nodes[p..],
        &all[p..],
        true,
    )
    .ok_or(Error::UnreachableDestination {
        origin: nodes[p],
        destination: plan.destination(),
    })?;
    Ok(Composed {
        stats: SearchStats {
            expanded: fragment.legs.len() as u64,
        },
        plan: fragment,
    })
}

/// Locally optimal fragment from the current station to the planned station
/// `ld` hops ahead, found by lookahead of depth `ld`.
///
/// Already-flown stations and the planned stations beyond the local target are
/// off limits, so the spliced route stays simple. If the target is unreachable
/// it is moved one planned station further, up to the destination.
pub fn recompose(
    ctx: &PlanningContext<'_>,
    plan: &CompositionPlan,
    cur_index: usize,
    ld: LookaheadDepth,
    cur_time: f64,
    battery: f64,
) -> Result<Composed> {
    let nodes = plan.nodes();
    let p = cur_index + 1;
    let last = nodes.len() - 1;
    if p >= last {
        return Err(Error::SpliceMismatch("no legs left to recompose".into()));
    }
    let mut expanded = 0;
    for q in (p + ld.0.max(1)).min(last)..=last {
        let avoid: Vec<NodeId> = nodes[..p].iter().chain(&nodes[q + 1..]).copied().collect();
        let query = RouteQuery {
            source: nodes[p],
            destination: nodes[q],
            start_time: cur_time,
            start_battery: battery,
            avoid,
        };
        match lookahead_route(ctx, &query, ld, 3) {
            Ok(mut found) => {
                found.stats.expanded += expanded;
                return Ok(found);
            }
            Err(Error::UnreachableDestination { .. } | Error::LivelockGuard { .. }) => {
                expanded += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::UnreachableLocalDestination(nodes[p]))
}

/// All-paths optimal re-plan from the current station to the destination,
/// never revisiting a station already flown through.
pub fn recompose_global_bruteforce(
    ctx: &PlanningContext<'_>,
    plan: &CompositionPlan,
    cur_index: usize,
    cur_time: f64,
    battery: f64,
    cfg: &PlannerConfig,
) -> Result<Composed> {
    let nodes = plan.nodes();
    let p = cur_index + 1;
    if p >= nodes.len() - 1 {
        return Err(Error::SpliceMismatch("no legs left to recompose".into()));
    }
    let query = RouteQuery {
        source: nodes[p],
        destination: plan.destination(),
        start_time: cur_time,
        start_battery: battery,
        avoid: nodes[..p].to_vec(),
    };
    bruteforce_route(ctx, &query, cfg)
}

/// Splices `fragment` into `plan` after leg `cur_index`.
///
/// The fragment must start where leg `cur_index` ends and finish on a later
/// planned station. Leg `cur_index` takes the fragment's start time and
/// battery as its actual arrival; the planned legs after the fragment are
/// re-timed from the fragment's arrival, keeping their recharge decisions and
/// recharging on demand.
pub fn update_plan(
    ctx: &PlanningContext<'_>,
    plan: &CompositionPlan,
    fragment: &CompositionPlan,
    cur_index: usize,
) -> Result<CompositionPlan> {
    let nodes = plan.nodes();
    let p = cur_index + 1;
    if p >= nodes.len() || fragment.legs.is_empty() {
        return Err(Error::SpliceMismatch("nothing to splice".into()));
    }
    if fragment.origin.node != nodes[p] {
        return Err(Error::SpliceMismatch(format!(
            "fragment starts at {} but the drone is at {}",
            fragment.origin.node, nodes[p]
        )));
    }
    let end = fragment.destination();
    let q = nodes[p + 1..]
        .iter()
        .position(|&n| n == end)
        .map(|i| i + p + 1)
        .ok_or_else(|| {
            Error::SpliceMismatch(format!(
                "fragment ends at {end}, which is not ahead on the plan"
            ))
        })?;

    let mut legs = plan.legs[..p].to_vec();
    {
        let at = legs.last_mut().expect("p >= 1");
        at.arrive_time = fragment.origin.time;
        at.battery_on_arrival = fragment.origin.battery;
        at.wait_duration = fragment.origin.wait_duration;
        at.recharge_duration = fragment.origin.recharge_duration;
        at.hold_duration = fragment.origin.hold_duration;
    }
    legs.extend(fragment.legs.iter().cloned());

    let last = nodes.len() - 1;
    if q < last {
        let tail = fragment.legs.last().expect("non-empty fragment");
        let all = plan.recharge_flags();
        let (suffix, _) = simulate_route(
            ctx,
            (end, tail.arrive_time, tail.battery_on_arrival),
            &nodes[q..],
            &all[q..],
            true,
        )
        .ok_or(Error::UnreachableDestination {
            origin: end,
            destination: plan.destination(),
        })?;
        let joint = legs.last_mut().expect("fragment legs present");
        joint.wait_duration = suffix.origin.wait_duration;
        joint.recharge_duration = suffix.origin.recharge_duration;
        joint.hold_duration = suffix.origin.hold_duration;
        legs.extend(suffix.legs);
    }

    let mut distance = 0.0;
    for leg in &legs {
        distance += ctx
            .network
            .segment(leg.from, leg.to)
            .ok_or(Error::UnknownSegment(leg.from, leg.to))?
            .distance;
    }
    Ok(CompositionPlan::new(
        plan.drone.clone(),
        plan.origin.clone(),
        legs,
        distance,
    ))
}

//! Offline composition over the state tree.
//!
//! A state is a drone at a station at some time with some charge. From a state
//! the drone may recharge (queueing for a pad first) or fly to a neighbour
//! (grounded until the wind allows, if needed). Three composers search this tree:
//! depth-limited lookahead, the greedy nearest-hop baseline, and exhaustive
//! brute force.

mod bruteforce;
mod greedy;
mod lookahead;
pub mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CompositionPlan, DeliveryRequest, DroneSpec, NodeId, SkywayNetwork};
use crate::wind::{EnergyModel, WindField};

pub use bruteforce::{bruteforce_route, compose_bruteforce};
pub use greedy::{compose_greedy, greedy_route};
pub use lookahead::{compose_lookahead, lookahead_route};
pub use sim::{dwell, hop, simulate_route, Dwell, Hop};

/// Everything a composer reads. Calendars are taken from `network` as-is.
#[derive(Debug, Clone, Copy)]
pub struct PlanningContext<'a> {
    pub network: &'a SkywayNetwork,
    pub drone: &'a DroneSpec,
    pub wind: &'a WindField,
    pub package_weight: f64,
    pub energy: EnergyModel,
}

impl<'a> PlanningContext<'a> {
    pub fn new(
        network: &'a SkywayNetwork,
        drone: &'a DroneSpec,
        wind: &'a WindField,
        package_weight: f64,
    ) -> Self {
        Self {
            network,
            drone,
            wind,
            package_weight,
            energy: EnergyModel::default(),
        }
    }

    pub fn with_energy(mut self, energy: EnergyModel) -> Self {
        self.energy = energy;
        self
    }

    /// Admissible bound on the arrival time at `destination` from `node` at
    /// time `t` holding `battery` percent.
    pub(crate) fn arrival_lower_bound(
        &self,
        node: NodeId,
        t: f64,
        battery: f64,
        destination: NodeId,
    ) -> f64 {
        let top_speed = self.drone.speed + self.wind.max_speed();
        t + self.network.route_distance(node, destination) / top_speed
            + self.recharge_lower_bound(node, battery, destination)
    }

    /// Least charging time any route to `destination` must include: the energy
    /// for the shortest remaining route flown with the strongest tailwind on
    /// record, minus what is on board.
    pub fn recharge_lower_bound(&self, node: NodeId, battery: f64, destination: NodeId) -> f64 {
        let remaining = self.network.route_distance(node, destination);
        let best_factor = self.drone.speed / (self.drone.speed + self.wind.max_speed());
        let need = self.energy.base_rate
            * (remaining / 10.0)
            * self.energy.weight_factor(self.package_weight)
            * best_factor
            + self.energy.reserve_margin;
        self.charging_time(battery, need)
    }

    /// Charging time to cover `need` percent from `battery`. Charges go to
    /// full and the battery only drains before the first one, so that first
    /// charge alone takes at least `100 - battery` percent worth.
    fn charging_time(&self, battery: f64, need: f64) -> f64 {
        if need <= battery {
            return 0.0;
        }
        (need - battery).max(100.0 - battery) / 100.0 * self.drone.recharge_time_full
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub node_id: NodeId,
    /// hours
    pub timestamp: f64,
    /// percent
    pub battery: f64,
    /// km flown so far
    pub accumulated_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Travel { to: NodeId, hold: f64 },
    Recharge { wait: f64, duration: f64 },
}

/// Levels inspected beyond the immediate children before committing. Zero is greedy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LookaheadDepth(pub usize);

impl Default for LookaheadDepth {
    fn default() -> Self {
        LookaheadDepth(1)
    }
}

/// A composition sub-problem: reach `destination` from a given drone state,
/// never touching nodes in `avoid`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteQuery {
    pub source: NodeId,
    pub destination: NodeId,
    pub start_time: f64,
    pub start_battery: f64,
    pub avoid: Vec<NodeId>,
}

impl RouteQuery {
    pub fn from_request(request: &DeliveryRequest) -> Self {
        Self {
            source: request.source,
            destination: request.destination,
            start_time: request.start_time,
            start_battery: 100.0,
            avoid: Vec::new(),
        }
    }

    pub(crate) fn blocked(&self, n: usize) -> Vec<bool> {
        let mut blocked = vec![false; n];
        for a in &self.avoid {
            if let Some(slot) = blocked.get_mut(a.0) {
                *slot = true;
            }
        }
        blocked
    }

    pub(crate) fn check(&self, network: &SkywayNetwork) -> Result<()> {
        network.node(self.source)?;
        network.node(self.destination)?;
        if self.source == self.destination {
            return Err(Error::ConfigInvalid("source equals destination".into()));
        }
        if self.avoid.contains(&self.destination) || self.avoid.contains(&self.source) {
            return Err(Error::ConfigInvalid(
                "route endpoints are in the avoid set".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchStats {
    /// states generated by the search
    pub expanded: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composed {
    pub plan: CompositionPlan,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub depth: LookaheadDepth,
    /// greedy aborts when a node is entered more often than this
    pub revisit_limit: usize,
    /// brute force refuses networks larger than this
    pub node_limit: usize,
    /// branch-and-bound in brute force; exact either way, off enumerates every route
    pub prune: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            depth: LookaheadDepth(1),
            revisit_limit: 3,
            node_limit: 12,
            prune: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lookahead,
    Greedy,
    Bruteforce,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lookahead => "lookahead",
            Algorithm::Greedy => "greedy",
            Algorithm::Bruteforce => "bruteforce",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lookahead" => Ok(Algorithm::Lookahead),
            "greedy" | "without-lookahead" => Ok(Algorithm::Greedy),
            "bruteforce" | "brute-force" => Ok(Algorithm::Bruteforce),
            other => Err(Error::ConfigInvalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Runs the chosen composer on a sub-problem.
pub fn compose_route(
    ctx: &PlanningContext<'_>,
    query: &RouteQuery,
    algorithm: Algorithm,
    cfg: &PlannerConfig,
) -> Result<Composed> {
    match algorithm {
        Algorithm::Lookahead => lookahead_route(ctx, query, cfg.depth, cfg.revisit_limit),
        Algorithm::Greedy => greedy_route(ctx, query, cfg.revisit_limit),
        Algorithm::Bruteforce => bruteforce_route(ctx, query, cfg),
    }
}

pub fn compose(
    ctx: &PlanningContext<'_>,
    request: &DeliveryRequest,
    algorithm: Algorithm,
    cfg: &PlannerConfig,
) -> Result<Composed> {
    request.validate(ctx.network)?;
    compose_route(ctx, &RouteQuery::from_request(request), algorithm, cfg)
}

/// Children of a state that has not recharged at its current node yet.
/// A full battery prunes the recharge child; wind-infeasible legs are dropped.
pub fn expand(ctx: &PlanningContext<'_>, state: &State) -> Result<Vec<(Action, State)>> {
    let children = children(ctx, state, false, &[]);
    if children.is_empty() {
        return Err(Error::DeadEnd(state.node_id));
    }
    Ok(children)
}

pub(crate) fn children(
    ctx: &PlanningContext<'_>,
    state: &State,
    recharged_here: bool,
    blocked: &[bool],
) -> Vec<(Action, State)> {
    let mut out = Vec::new();
    for (nb, _) in ctx.network.neighbors(state.node_id) {
        if blocked.get(nb.0).copied().unwrap_or(false) {
            continue;
        }
        if let Some(h) = hop(ctx, state.node_id, nb, state.timestamp, state.battery) {
            out.push((
                Action::Travel {
                    to: nb,
                    hold: h.hold,
                },
                State {
                    node_id: nb,
                    timestamp: h.arrive,
                    battery: state.battery - h.consumed,
                    accumulated_distance: state.accumulated_distance + h.distance,
                },
            ));
        }
    }
    if !recharged_here && state.battery < 100.0 {
        let d = dwell(ctx, state.node_id, state.timestamp, state.battery, true);
        out.push((
            Action::Recharge {
                wait: d.wait,
                duration: d.recharge,
            },
            State {
                timestamp: d.ready,
                battery: d.battery,
                ..*state
            },
        ));
    }
    out
}

/// Battery percent assumed left over at the destination once a route needs charging.
const EXPECTED_LEFTOVER: f64 = 50.0;

/// Committed time plus an estimate of the rest: the shortest skyway route at
/// the ground speed the current wind gives toward the destination, plus the
/// charging that route needs with the battery on board. Lower is better.

pub fn score_state(ctx: &PlanningContext<'_>, state: &State, destination: NodeId) -> f64 {
    if state.node_id == destination {
        return state.timestamp;
    }
    let remaining = ctx.network.route_distance(state.node_id, destination);
    let course = crate::model::compass_bearing(
        ctx.network.nodes()[state.node_id.0].position,
        ctx.network.nodes()[destination.0].position,
    );
    let gs = crate::wind::ground_speed(ctx.drone.speed, ctx.wind.at(state.timestamp), course)
        .map(|k| k.ground_speed)
        .unwrap_or(ctx.drone.speed);
    let need = ctx.energy.base_rate
        * (remaining / 10.0)
        * ctx.energy.weight_factor(ctx.package_weight)
        * (ctx.drone.speed / gs)
        + ctx.energy.reserve_margin;
    let charging = if need <= state.battery {
        0.0
    } else {
        // charges go to full, so some battery is still unused on arrival
        (need - state.battery + EXPECTED_LEFTOVER).max(100.0 - state.battery) / 100.0
            * ctx.drone.recharge_time_full
    };
    state.timestamp + remaining / gs + charging
}

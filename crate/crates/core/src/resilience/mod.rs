//! Executing a plan in a perturbed world and repairing it on the fly.
//!
//! The executor flies the current plan leg by leg against the live pad
//! calendars, injects arrival deviations, and whenever an arrival misses its
//! planned time by more than the detection tolerance it asks the configured
//! [`Recovery`] strategy for a new remainder.

mod recovery;

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CompositionPlan, NodeId, Origin, PlanLeg, SkywayNetwork};
use crate::planner::{dwell, hop, Composed, PlannerConfig, PlanningContext};

pub use recovery::{
    congestion_view, failure_analysis, project_delays, recompose, recompose_global_bruteforce,
    replicate, update_plan,
};

/// One minute.
pub const DEFAULT_EPSILON: f64 = 1.0 / 60.0;

/// True iff the actual arrival deviates from the expected one by more than `epsilon`.
pub fn detect_failure(expected: f64, actual: f64, epsilon: f64) -> bool {
    (actual - expected).abs() > epsilon
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub node_id: NodeId,
    pub expected_arrival: f64,
    pub actual_arrival: f64,
    /// actual minus expected, hours
    pub delta: f64,
}

/// Random arrival deviations at a fraction of the stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationModel {
    /// fraction of stations (source excluded) whose arrival deviates
    pub failure_rate: f64,
    /// hours; deviations are drawn uniformly from `[-max_early, max_late]`
    pub max_early: f64,
    pub max_late: f64,
    /// hours; each perturbed station's background pad traffic moves later by up to this much
    pub calendar_shift: f64,
    pub seed: u64,
}

impl Default for PerturbationModel {
    fn default() -> Self {
        Self {
            failure_rate: 0.1,
            max_early: 10.0 / 60.0,
            max_late: 30.0 / 60.0,
            calendar_shift: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedDelay {
    pub node: NodeId,
    /// hours; negative is early
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarShift {
    pub node: NodeId,
    pub offset: f64,
}

/// A concrete draw from a [`PerturbationModel`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbations {
    pub delays: Vec<InjectedDelay>,
    pub shifts: Vec<CalendarShift>,
}

impl Perturbations {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.iter().all(|d| d.delay == 0.0) && self.shifts.iter().all(|s| s.offset == 0.0)
    }
}

impl PerturbationModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.failure_rate) {
            return Err(Error::ConfigInvalid(format!(
                "failure rate {} outside [0, 1]",
                self.failure_rate
            )));
        }
        for (name, v) in [
            ("max_early", self.max_early),
            ("max_late", self.max_late),
            ("calendar_shift", self.calendar_shift),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ConfigInvalid(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Picks `round(failure_rate * n)` stations other than `source` and draws a
    /// deviation (and calendar shift) for each. Deterministic in `seed`.
    pub fn realize(&self, network: &SkywayNetwork, source: NodeId) -> Result<Perturbations> {
        self.validate()?;
        let n = network.len();
        let pool = n.saturating_sub(1);
        let count = ((self.failure_rate * n as f64).round() as usize).min(pool);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut picked: Vec<NodeId> = sample(&mut rng, pool, count)
            .into_iter()
            .map(|i| NodeId(if i >= source.0 { i + 1 } else { i }))
            .collect();
        picked.sort();

        let mut out = Perturbations::default();
        for node in picked {
            let delay = if self.max_early + self.max_late > 0.0 {
                rng.gen_range(-self.max_early..=self.max_late)
            } else {
                0.0
            };
            out.delays.push(InjectedDelay { node, delay });
            if self.calendar_shift > 0.0 {
                out.shifts.push(CalendarShift {
                    node,
                    offset: rng.gen_range(0.0..=self.calendar_shift),
                });
            }
        }
        Ok(out)
    }
}

/// How the executor repairs a plan once a failure is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recovery {
    /// keep the route, absorb the delay
    Replication,
    /// adaptive-depth lookahead over the affected span
    Local,
    /// brute force from the failure point to the destination
    Global,
}

impl Recovery {
    pub fn name(self) -> &'static str {
        match self {
            Recovery::Replication => "replication",
            Recovery::Local => "local",
            Recovery::Global => "global",
        }
    }
}

impl std::str::FromStr for Recovery {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replication" | "replicate" => Ok(Recovery::Replication),
            "local" | "adaptive" => Ok(Recovery::Local),
            "global" => Ok(Recovery::Global),
            other => Err(Error::ConfigInvalid(format!("unknown recovery {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutionConfig {
    pub recovery: Recovery,
    /// detection tolerance, hours
    pub epsilon: f64,
    /// give up once the drone is this many initial delivery times past its first
    /// departure; injected lateness extends the horizon
    pub abort_factor: f64,
    /// brute-force limits for global recovery
    pub planner: PlannerConfig,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            recovery: Recovery::Local,
            epsilon: DEFAULT_EPSILON,
            abort_factor: 3.0,
            planner: PlannerConfig::default(),
        }
    }
}

/// One call into a recovery strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub node: NodeId,
    /// index of the leg whose arrival failed
    pub leg_index: usize,
    pub recovery: Recovery,
    /// services ahead considered (the adaptive depth for local recovery)
    pub depth: usize,
    /// wall-clock seconds spent in planning calls
    pub compute_secs: f64,
    /// states generated by those calls
    pub expanded: u64,
    /// false when local recovery fell back to replication
    pub adopted: bool,
    /// arrival the repaired plan promises; `None` when nothing could be flown
    pub planned_arrival: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Delivered,
    /// past the abort horizon
    Aborted {
        at: NodeId,
        time: f64,
    },
    /// no feasible way forward from this station
    Stranded {
        at: NodeId,
        time: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// the plan as actually flown
    pub executed: CompositionPlan,
    pub injected: Perturbations,
    pub failures: Vec<FailureEvent>,
    pub episodes: Vec<Episode>,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    pub fn delivered(&self) -> bool {
        self.outcome == Outcome::Delivered
    }

    pub fn delivery_time(&self) -> f64 {
        self.executed.total_delivery_time
    }

    pub fn distance(&self) -> f64 {
        self.executed.total_distance
    }

    pub fn compute_secs(&self) -> f64 {
        self.episodes.iter().map(|e| e.compute_secs).sum()
    }

    pub fn expanded(&self) -> u64 {
        self.episodes.iter().map(|e| e.expanded).sum()
    }
}

struct World {
    network: SkywayNetwork,
    delays: Vec<f64>,
}

impl World {
    fn new(base: &SkywayNetwork, injected: &Perturbations) -> Self {
        let mut network = base.clone();
        let mut delays = vec![0.0; network.len()];
        for d in &injected.delays {
            if let Some(slot) = delays.get_mut(d.node.0) {
                *slot += d.delay;
            }
        }
        for s in &injected.shifts {
            if let Ok(node) = network.node_mut(s.node) {
                for pad in 0..node.calendar.pad_count() {
                    node.calendar.shift_pad(pad, s.offset);
                }
            }
        }
        Self { network, delays }
    }

    fn reserve(&mut self, node: NodeId, start: f64, duration: f64) -> Result<()> {
        if duration > 0.0 {
            self.network
                .node_mut(node)?
                .calendar
                .reserve(start, duration)?;
        }
        Ok(())
    }
}

/// Flies `plan` through a world perturbed by `injected`, repairing it with
/// `cfg.recovery` after every detected failure.
///
/// Background pad traffic comes from `ctx.network`; the drone's own recharges
/// are booked into a private copy as they happen. Each perturbed station's
/// deviation applies to the drone's arrival there (an early arrival never
/// shortens a flight below half its nominal duration).
pub fn execute_resilient(
    ctx: &PlanningContext<'_>,
    plan: &CompositionPlan,
    injected: &Perturbations,
    cfg: &ExecutionConfig,
) -> Result<ExecutionTrace> {
    if plan.legs.is_empty() {
        return Err(Error::ConfigInvalid("cannot execute an empty plan".into()));
    }
    let mut world = World::new(ctx.network, injected);
    let destination = plan.destination();
    let mut deadline = plan.legs[0].depart_time + cfg.abort_factor * plan.total_delivery_time;

    let mut current = plan.clone();
    let mut origin = Origin::at(plan.origin.node, plan.origin.time, plan.origin.battery);
    let mut flown: Vec<PlanLeg> = Vec::with_capacity(plan.legs.len());
    let mut failures = Vec::new();
    let mut episodes = Vec::new();
    let mut distance = 0.0;

    let (mut node, mut time, mut battery) = (origin.node, origin.time, origin.battery);
    let outcome = loop {
        let cur = flown.len();
        let next = current.legs[cur].to;
        let wants_recharge = match cur {
            0 => current.origin.recharges(),
            k => current.legs[k - 1].recharges(),
        };

        let here = PlanningContext {
            network: &world.network,
            ..*ctx
        };
        let mut d = dwell(&here, node, time, battery, wants_recharge);
        let mut h = hop(&here, node, next, d.ready, d.battery);
        if h.is_none() && d.recharge == 0.0 && battery < 100.0 {
            d = dwell(&here, node, time, battery, true);
            h = hop(&here, node, next, d.ready, d.battery);
        }
        let Some(h) = h else {
            break Outcome::Stranded { at: node, time };
        };
        if h.depart > deadline {
            break Outcome::Aborted { at: node, time };
        }
        world.reserve(node, d.start, d.recharge)?;

        let (wait, recharge, hold) = (d.wait, d.recharge, h.hold);
        match flown.last_mut() {
            Some(prev) => {
                prev.wait_duration = wait;
                prev.recharge_duration = recharge;
                prev.hold_duration = hold;
            }
            None => {
                origin.wait_duration = wait;
                origin.recharge_duration = recharge;
                origin.hold_duration = hold;
            }
        }

        let deviation = world.delays[next.0];
        let arrive = (h.arrive + deviation).max(h.depart + 0.5 * (h.arrive - h.depart));
        deadline += (arrive - h.arrive).max(0.0);
        distance += h.distance;
        battery = d.battery - h.consumed;
        time = arrive;
        node = next;
        flown.push(PlanLeg {
            from: current.legs[cur].from,
            to: next,
            depart_time: h.depart,
            arrive_time: arrive,
            wait_duration: 0.0,
            recharge_duration: 0.0,
            hold_duration: 0.0,
            battery_on_arrival: battery,
        });

        let expected = current.legs[cur].arrive_time;
        let failed = detect_failure(expected, time, cfg.epsilon);
        if failed {
            failures.push(FailureEvent {
                node_id: node,
                expected_arrival: expected,
                actual_arrival: time,
                delta: time - expected,
            });
        }
        if node == destination {
            break Outcome::Delivered;
        }
        if time > deadline {
            break Outcome::Aborted { at: node, time };
        }
        if !failed {
            continue;
        }

        // The plan as known now: what was flown, then the planned dwell here.
        let fi = cur;
        current.origin = origin.clone();
        current.legs[..fi].clone_from_slice(&flown[..fi]);
        current.legs[fi].depart_time = flown[fi].depart_time;

        let here = PlanningContext {
            network: &world.network,
            ..*ctx
        };
        let (next_plan, episode) =
            recover(&here, &current, fi, time, battery, time - expected, cfg)?;
        episodes.push(episode);
        match next_plan {
            Some(p) => current = p,
            None => break Outcome::Stranded { at: node, time },
        }
    };

    let executed = CompositionPlan::new(plan.drone.clone(), origin, flown, distance);
    Ok(ExecutionTrace {
        executed,
        injected: injected.clone(),
        failures,
        episodes,
        outcome,
    })
}

fn recover(
    ctx: &PlanningContext<'_>,
    plan: &CompositionPlan,
    fi: usize,
    time: f64,
    battery: f64,
    delta: f64,
    cfg: &ExecutionConfig,
) -> Result<(Option<CompositionPlan>, Episode)> {
    let mut episode = Episode {
        node: plan.legs[fi].to,
        leg_index: fi,
        recovery: cfg.recovery,
        depth: plan.legs.len() - fi - 1,
        compute_secs: 0.0,
        expanded: 0,
        adopted: true,
        planned_arrival: None,
    };
    let mut call = |f: &dyn Fn() -> Result<Composed>| -> Result<Option<CompositionPlan>> {
        let clock = Instant::now();
        let out = f();
        episode_add(&mut episode, clock.elapsed().as_secs_f64(), &out);
        match out {
            Ok(c) => Ok(update_plan(ctx, plan, &c.plan, fi).ok()),
            Err(
                Error::UnreachableDestination { .. }
                | Error::UnreachableLocalDestination(_)
                | Error::LivelockGuard { .. },
            ) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let replication = || replicate(ctx, plan, fi, time, battery);

    let (chosen, depth, adopted) = match cfg.recovery {
        Recovery::Replication => (call(&replication)?, None, true),
        Recovery::Local => {
            let td = project_delays(plan, fi, delta);
            let congested = congestion_view(ctx.network, plan);
            let ld = failure_analysis(plan, fi, &td, &congested);
            let local = call(&|| recompose(ctx, plan, fi, ld, time, battery))?;
            let base = call(&replication)?;
            match (local, base) {
                (Some(l), Some(b)) if l.arrival_time() > b.arrival_time() => {
                    (Some(b), Some(ld.0), false)
                }
                (Some(l), _) => (Some(l), Some(ld.0), true),
                (None, b) => (b, Some(ld.0), false),
            }
        }
        Recovery::Global => {
            match call(&|| recompose_global_bruteforce(ctx, plan, fi, time, battery, &cfg.planner))?
            {
                Some(g) => (Some(g), None, true),
                None => (call(&replication)?, None, false),
            }
        }
    };
    if let Some(d) = depth {
        episode.depth = d;
    }
    episode.adopted = adopted;
    episode.planned_arrival = chosen.as_ref().map(CompositionPlan::arrival_time);
    Ok((chosen, episode))
}

fn episode_add(episode: &mut Episode, secs: f64, out: &Result<Composed>) {
    episode.compute_secs += secs;
    if let Ok(c) = out {
        episode.expanded += c.stats.expanded;
    }
}

#[cfg(test)]
mod tests;

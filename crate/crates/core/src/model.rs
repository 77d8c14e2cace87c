//! Skyway network, drones, delivery requests and composition plans.
//!
//! Units are fixed across the crate: kilometres, hours, km/h, degrees and
//! battery percent. Positions are planar `(x, y)` km; bearings follow the
//! compass convention (0 = +y / north, 90 = +x / east).

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calendar::PadCalendar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Quality-of-service tuple of a candidate drone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneSpec {
    pub id: String,
    pub name: String,
    /// kg
    pub payload_capacity: f64,
    /// minutes at full charge
    pub flight_time: f64,
    /// km at full charge
    pub flight_range: f64,
    /// air speed, km/h
    pub speed: f64,
    /// hours for a 0 to 100% charge
    pub recharge_time_full: f64,
}

impl DroneSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("payload_capacity", self.payload_capacity),
            ("flight_time", self.flight_time),
            ("flight_range", self.flight_range),
            ("speed", self.speed),
            ("recharge_time_full", self.recharge_time_full),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ConfigInvalid(format!(
                    "drone {}: {name} must be positive, got {v}",
                    self.id
                )));
            }
        }
        let reachable = self.speed * self.flight_time / 60.0 * 1.05;
        if self.flight_range > reachable {
            return Err(Error::ConfigInvalid(format!(
                "drone {}: range {} km exceeds speed x flight time ({reachable:.3} km incl. slack)",
                self.id, self.flight_range
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub position: (f64, f64),
    pub pad_count: usize,
    pub calendar: PadCalendar,
}

impl Node {
    pub fn new(id: usize, position: (f64, f64), pad_count: usize) -> Self {
        Self {
            id: NodeId(id),
            position,
            pad_count,
            calendar: PadCalendar::new(pad_count),
        }
    }
}

/// Undirected segment, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkywaySegment {
    pub i: NodeId,
    pub j: NodeId,
    /// km, Euclidean
    pub distance: f64,
    /// compass bearing from `i` toward `j`, degrees in `[0, 360)`
    pub bearing: f64,
}

impl SkywaySegment {
    /// Bearing of travel `from -> to` along this segment.
    pub fn bearing_from(&self, from: NodeId) -> f64 {
        if from == self.i {
            self.bearing
        } else {
            (self.bearing + 180.0).rem_euclid(360.0)
        }
    }

    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.i {
            self.j
        } else {
            self.i
        }
    }
}

/// Compass bearing of the displacement `a -> b`.
pub fn compass_bearing(a: (f64, f64), b: (f64, f64)) -> f64 {
    let deg = (b.0 - a.0).atan2(b.1 - a.1).to_degrees();
    let norm = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if norm >= 360.0 {
        0.0
    } else {
        norm
    }
}

pub fn euclidean(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.0).hypot(b.1 - a.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRecord", into = "NetworkRecord")]
pub struct SkywayNetwork {
    nodes: Vec<Node>,
    segments: Vec<SkywaySegment>,
    /// per node: (neighbour, segment index), sorted by neighbour id
    adjacency: Vec<Vec<(NodeId, usize)>>,
    /// all-pairs shortest skyway distance, row-major
    route_km: Vec<f64>,
}

impl SkywayNetwork {
    /// Builds a network from nodes (ids must be `0..n` in order) and undirected edges.
    /// Distances and bearings are derived from node positions.
    pub fn new(nodes: Vec<Node>, edges: &[(usize, usize)]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::ConfigInvalid("network has no nodes".into()));
        }
        for (idx, node) in nodes.iter().enumerate() {
            if node.id.0 != idx {
                return Err(Error::ConfigInvalid(format!(
                    "node ids must be contiguous from 0; found {} at position {idx}",
                    node.id
                )));
            }
            if node.pad_count == 0 || node.calendar.pad_count() != node.pad_count {
                return Err(Error::ConfigInvalid(format!(
                    "node {idx}: pad_count {} does not match calendar ({} pads)",
                    node.pad_count,
                    node.calendar.pad_count()
                )));
            }
            if !(node.position.0.is_finite() && node.position.1.is_finite()) {
                return Err(Error::ConfigInvalid(format!(
                    "node {idx}: non-finite position"
                )));
            }
        }
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                if nodes[a].position == nodes[b].position {
                    return Err(Error::ConfigInvalid(format!(
                        "nodes {a} and {b} share a position"
                    )));
                }
            }
        }

        let n = nodes.len();
        let mut segments = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::ConfigInvalid(format!(
                    "edge ({a}, {b}) names a missing node"
                )));
            }
            if a == b {
                return Err(Error::ConfigInvalid(format!("self-loop at node {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if adjacency[i].iter().any(|&(nb, _)| nb == NodeId(j)) {
                continue;
            }
            let (pi, pj) = (nodes[i].position, nodes[j].position);
            let idx = segments.len();
            segments.push(SkywaySegment {
                i: NodeId(i),
                j: NodeId(j),
                distance: euclidean(pi, pj),
                bearing: compass_bearing(pi, pj),
            });
            adjacency[i].push((NodeId(j), idx));
            adjacency[j].push((NodeId(i), idx));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(nb, _)| nb);
        }
        let route_km = all_pairs_distances(n, &segments);
        let network = Self {
            nodes,
            segments,
            adjacency,
            route_km,
        };
        if !network.is_connected() {
            return Err(Error::ConfigInvalid("network is not connected".into()));
        }
        Ok(network)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn segments(&self) -> &[SkywaySegment] {
        &self.segments
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut Node> {
        self.nodes.get_mut(id.0).ok_or(Error::UnknownNode(id))
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, &SkywaySegment)> + '_ {
        self.adjacency
            .get(id.0)
            .into_iter()
            .flatten()
            .map(move |&(nb, seg)| (nb, &self.segments[seg]))
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency.get(id.0).map_or(0, Vec::len)
    }

    pub fn segment(&self, a: NodeId, b: NodeId) -> Option<&SkywaySegment> {
        let list = self.adjacency.get(a.0)?;
        list.binary_search_by_key(&b, |&(nb, _)| nb)
            .ok()
            .map(|pos| &self.segments[list[pos].1])
    }

    pub fn straight_line(&self, a: NodeId, b: NodeId) -> f64 {
        euclidean(self.nodes[a.0].position, self.nodes[b.0].position)
    }

    /// Length of the shortest skyway route between two nodes.
    pub fn route_distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.route_km[a.0 * self.nodes.len() + b.0]
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v.0] {
                    seen[v.0] = true;
                    count += 1;
                    queue.push_back(v.0);
                }
            }
        }
        count == n
    }

    /// Number of segment services offered by a fleet: every drone on every segment.
    pub fn service_count(&self, drones: usize) -> usize {
        self.segments.len() * drones
    }
}

/// Floyd-Warshall over segment lengths.
fn all_pairs_distances(n: usize, segments: &[SkywaySegment]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n * n];
    for v in 0..n {
        d[v * n + v] = 0.0;
    }
    for s in segments {
        d[s.i.0 * n + s.j.0] = s.distance;
        d[s.j.0 * n + s.i.0] = s.distance;
    }
    for k in 0..n {
        for i in 0..n {
            let via = d[i * n + k];
            if via.is_infinite() {
                continue;
            }
            for j in 0..n {
                let alt = via + d[k * n + j];
                if alt < d[i * n + j] {
                    d[i * n + j] = alt;
                }
            }
        }
    }
    d
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: NodeId,
    position: (f64, f64),
    pad_count: usize,
    calendar: Vec<Vec<(f64, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRecord {
    nodes: Vec<NodeRecord>,
    segments: Vec<SkywaySegment>,
}

impl TryFrom<NetworkRecord> for SkywayNetwork {
    type Error = Error;

    fn try_from(rec: NetworkRecord) -> Result<Self> {
        let nodes = rec
            .nodes
            .into_iter()
            .map(|n| {
                let calendar = if n.calendar.is_empty() {
                    PadCalendar::new(n.pad_count)
                } else {
                    PadCalendar::from_intervals(n.calendar)?
                };
                Ok(Node {
                    id: n.id,
                    position: n.position,
                    pad_count: n.pad_count,
                    calendar,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges: Vec<_> = rec.segments.iter().map(|s| (s.i.0, s.j.0)).collect();
        let network = SkywayNetwork::new(nodes, &edges)?;
        for given in &rec.segments {
            let derived = network
                .segment(given.i, given.j)
                .ok_or(Error::UnknownSegment(given.i, given.j))?;
            let bearing = if given.i < given.j {
                derived.bearing
            } else {
                derived.bearing_from(derived.j)
            };
            let bearing_gap = (given.bearing - bearing).rem_euclid(360.0);
            if (given.distance - derived.distance).abs() > 1e-6
                || bearing_gap.min(360.0 - bearing_gap) > 1e-6
            {
                return Err(Error::ConfigInvalid(format!(
                    "segment ({}, {}) distance/bearing disagree with node positions",
                    given.i, given.j
                )));
            }
        }
        Ok(network)
    }
}

impl From<SkywayNetwork> for NetworkRecord {
    fn from(net: SkywayNetwork) -> Self {
        NetworkRecord {
            nodes: net
                .nodes
                .into_iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    position: n.position,
                    pad_count: n.pad_count,
                    calendar: n.calendar.pads().to_vec(),
                })
                .collect(),
            segments: net.segments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRequest {
    pub source: NodeId,
    pub destination: NodeId,
    /// kg
    pub package_weight: f64,
    /// hours since epoch
    pub start_time: f64,
}

impl DeliveryRequest {
    pub fn validate(&self, network: &SkywayNetwork) -> Result<()> {
        network.node(self.source)?;
        network.node(self.destination)?;
        if self.source == self.destination {
            return Err(Error::ConfigInvalid("source equals destination".into()));
        }
        if !(self.package_weight > 0.0 && self.package_weight.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "package weight must be positive, got {}",
                self.package_weight
            )));
        }
        if !self.start_time.is_finite() {
            return Err(Error::ConfigInvalid("start time must be finite".into()));
        }
        Ok(())
    }
}

/// One flown segment plus the dwell at its arrival node.
///
/// The next leg departs at `arrive_time + wait_duration + recharge_duration + hold_duration`.
/// `wait_duration` is time spent queueing for a pad, `hold_duration` is time
/// spent grounded until the wind allows the next departure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanLeg {
    pub from: NodeId,
    pub to: NodeId,
    pub depart_time: f64,
    pub arrive_time: f64,
    pub wait_duration: f64,
    pub recharge_duration: f64,
    #[serde(default)]
    pub hold_duration: f64,
    pub battery_on_arrival: f64,
}

impl PlanLeg {
    pub fn ready_time(&self) -> f64 {
        self.arrive_time + self.wait_duration + self.recharge_duration + self.hold_duration
    }

    pub fn recharges(&self) -> bool {
        self.recharge_duration > 0.0
    }

    /// Pad interval occupied by the recharge at `to`, if any.
    pub fn pad_interval(&self) -> Option<(f64, f64)> {
        self.recharges().then(|| {
            let start = self.arrive_time + self.wait_duration;
            (start, start + self.recharge_duration)
        })
    }
}

/// Where a plan (or plan fragment) begins and what happens there before the first departure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub node: NodeId,
    pub time: f64,
    pub battery: f64,
    pub wait_duration: f64,
    pub recharge_duration: f64,
    pub hold_duration: f64,
}

impl Origin {
    pub fn at(node: NodeId, time: f64, battery: f64) -> Self {
        Self {
            node,
            time,
            battery,
            wait_duration: 0.0,
            recharge_duration: 0.0,
            hold_duration: 0.0,
        }
    }

    pub fn recharges(&self) -> bool {
        self.recharge_duration > 0.0
    }

    pub fn pad_interval(&self) -> Option<(f64, f64)> {
        self.recharges().then(|| {
            let start = self.time + self.wait_duration;
            (start, start + self.recharge_duration)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionPlan {
    pub drone: String,
    pub origin: Origin,
    pub legs: Vec<PlanLeg>,
    pub total_delivery_time: f64,
    pub total_distance: f64,
}

impl CompositionPlan {
    /// Assembles a plan and fills in the aggregate totals.
    pub fn new(
        drone: impl Into<String>,
        origin: Origin,
        legs: Vec<PlanLeg>,
        distance: f64,
    ) -> Self {
        let total_delivery_time = match (legs.first(), legs.last()) {
            (Some(first), Some(last)) => last.arrive_time - first.depart_time,
            _ => 0.0,
        };
        Self {
            drone: drone.into(),
            origin,
            legs,
            total_delivery_time,
            total_distance: distance,
        }
    }

    /// Node sequence including the origin.
    pub fn nodes(&self) -> Vec<NodeId> {
        std::iter::once(self.origin.node)
            .chain(self.legs.iter().map(|l| l.to))
            .collect()
    }

    /// Recharge decision at every node except the last.
    pub fn recharge_flags(&self) -> Vec<bool> {
        std::iter::once(self.origin.recharges())
            .chain(self.legs.iter().map(PlanLeg::recharges))
            .take(self.legs.len())
            .collect()
    }

    pub fn arrival_time(&self) -> f64 {
        self.legs.last().map_or(self.origin.time, |l| l.arrive_time)
    }

    pub fn destination(&self) -> NodeId {
        self.legs.last().map_or(self.origin.node, |l| l.to)
    }

    /// Total pad waiting time along the plan, origin included.
    pub fn total_wait(&self) -> f64 {
        self.origin.wait_duration + self.legs.iter().map(|l| l.wait_duration).sum::<f64>()
    }

    pub fn recharge_count(&self) -> usize {
        usize::from(self.origin.recharges()) + self.legs.iter().filter(|l| l.recharges()).count()
    }

    /// Every pad interval this plan occupies, as `(node, start, end)`.
    pub fn reservations(&self) -> Vec<(NodeId, f64, f64)> {
        let origin = self
            .origin
            .pad_interval()
            .map(|(s, e)| (self.origin.node, s, e));
        origin
            .into_iter()
            .chain(
                self.legs
                    .iter()
                    .filter_map(|l| l.pad_interval().map(|(s, e)| (l.to, s, e))),
            )
            .collect()
    }
}

/// Commits the plan's recharges to the pad calendars of `network`.
pub fn commit_plan(network: &mut SkywayNetwork, plan: &CompositionPlan) -> Result<()> {
    for (node, start, end) in plan.reservations() {
        network
            .node_mut(node)?
            .calendar
            .reserve(start, end - start)?;
    }
    Ok(())
}

/// Releases the plan's recharges from the pad calendars of `network`.
pub fn release_plan(network: &mut SkywayNetwork, plan: &CompositionPlan) -> Result<()> {
    for (node, start, end) in plan.reservations() {
        network.node_mut(node)?.calendar.release(start, end);
    }
    Ok(())
}

const TIME_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Checks the structural invariants of a plan. An empty list means the plan is valid.
pub fn validate_plan(
    plan: &CompositionPlan,
    network: &SkywayNetwork,
    request: &DeliveryRequest,
) -> Vec<String> {
    let mut violations = Vec::new();
    let Some(first) = plan.legs.first() else {
        violations.push("plan has no legs".to_string());
        return violations;
    };
    if plan.origin.node != first.from {
        violations.push("origin does not match first leg".to_string());
    }
    if first.from != request.source {
        violations.push(format!(
            "plan starts at {} but request source is {}",
            first.from, request.source
        ));
    }
    if plan.destination() != request.destination {
        violations.push(format!(
            "plan ends at {} but request destination is {}",
            plan.destination(),
            request.destination
        ));
    }
    for (k, pair) in plan.legs.windows(2).enumerate() {
        if pair[0].to != pair[1].from {
            violations.push(format!("chain break at leg {}", k + 2));
        }
    }

    let mut distance = 0.0;
    let mut ready = plan.origin.time
        + plan.origin.wait_duration
        + plan.origin.recharge_duration
        + plan.origin.hold_duration;
    for (k, leg) in plan.legs.iter().enumerate() {
        let n = k + 1;
        match network.segment(leg.from, leg.to) {
            Some(seg) => distance += seg.distance,
            None => violations.push(format!("leg {n}: no segment {} -> {}", leg.from, leg.to)),
        }
        if leg.arrive_time <= leg.depart_time {
            violations.push(format!("leg {n}: arrival not after departure"));
        }
        if leg.wait_duration < 0.0 || leg.recharge_duration < 0.0 || leg.hold_duration < 0.0 {
            violations.push(format!("leg {n}: negative dwell"));
        }
        if !(0.0..=100.0).contains(&leg.battery_on_arrival) {
            violations.push(format!(
                "leg {n}: battery {} outside [0, 100]",
                leg.battery_on_arrival
            ));
        }
        if !close(leg.depart_time, ready) {
            violations.push(format!("leg {n}: departure does not follow previous dwell"));
        }
        ready = leg.ready_time();
    }
    if !close(distance, plan.total_distance) {
        violations.push("distance aggregation mismatch".to_string());
    }
    let span = plan.legs.last().map_or(0.0, |l| l.arrive_time) - first.depart_time;
    if !close(span, plan.total_delivery_time) {
        violations.push("delivery time aggregation mismatch".to_string());
    }
    violations
}

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{DeliveryRequest, NodeId};

use super::{
    dwell, hop, simulate_route, Composed, PlannerConfig, PlanningContext, RouteQuery, SearchStats,
};

/// All-paths optimum for a delivery request with a full battery.
pub fn compose_bruteforce(
    ctx: &PlanningContext<'_>,
    request: &DeliveryRequest,
    cfg: &PlannerConfig,
) -> Result<Composed> {
    request.validate(ctx.network)?;
    bruteforce_route(ctx, &RouteQuery::from_request(request), cfg)
}

/// Enumerates every simple path to the destination together with every choice
/// of recharge stops along it, and returns the earliest arrival.
///
/// Ties go to the shorter route, then the lexicographically smaller node
/// sequence, then the lexicographically smaller recharge pattern (no-recharge
/// first). With `cfg.prune`, partial routes whose admissible arrival bound is
/// strictly later than the incumbent are cut; the result is unchanged.
pub fn bruteforce_route(
    ctx: &PlanningContext<'_>,
    query: &RouteQuery,
    cfg: &PlannerConfig,
) -> Result<Composed> {
    if ctx.network.len() > cfg.node_limit {
        return Err(Error::InstanceTooLarge {
            nodes: ctx.network.len(),
            limit: cfg.node_limit,
        });
    }
    query.check(ctx.network)?;
    let mut search = Enumeration {
        ctx,
        destination: query.destination,
        prune: cfg.prune,
        visited: query.blocked(ctx.network.len()),
        path: vec![query.source],
        flags: Vec::new(),
        best: None,
        stats: SearchStats::default(),
    };
    search.visited[query.source.0] = true;
    search.visit(query.source, query.start_time, query.start_battery, 0.0);

    let best = search.best.ok_or(Error::UnreachableDestination {
        origin: query.source,
        destination: query.destination,
    })?;
    let (plan, _) = simulate_route(
        ctx,
        (query.source, query.start_time, query.start_battery),
        &best.nodes,
        &best.flags,
        false,
    )
    .expect("enumerated route replays");
    Ok(Composed {
        plan,
        stats: search.stats,
    })
}

#[derive(Debug, Clone)]
struct Incumbent {
    arrival: f64,
    distance: f64,
    nodes: Vec<NodeId>,
    flags: Vec<bool>,
}

/// Total order used to pick the winning route.
pub(crate) fn route_order(
    a: (f64, f64, &[NodeId], &[bool]),
    b: (f64, f64, &[NodeId], &[bool]),
) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then_with(|| a.2.cmp(b.2))
        .then_with(|| a.3.cmp(b.3))
}

struct Enumeration<'c, 'a> {
    ctx: &'c PlanningContext<'a>,
    destination: NodeId,
    prune: bool,
    visited: Vec<bool>,
    path: Vec<NodeId>,
    flags: Vec<bool>,
    best: Option<Incumbent>,
    stats: SearchStats,
}

impl Enumeration<'_, '_> {
    fn offer(&mut self, arrival: f64, distance: f64) {
        let better = match &self.best {
            None => true,
            Some(b) => {
                route_order(
                    (arrival, distance, &self.path, &self.flags),
                    (b.arrival, b.distance, &b.nodes, &b.flags),
                ) == Ordering::Less
            }
        };
        if better {
            self.best = Some(Incumbent {
                arrival,
                distance,
                nodes: self.path.clone(),
                flags: self.flags.clone(),
            });
        }
    }

    fn hopeless(&self, node: NodeId, t: f64, battery: f64) -> bool {
        match &self.best {
            Some(b) if self.prune => {
                // slack keeps a bound that is tight up to rounding from cutting a tie
                let bound = self
                    .ctx
                    .arrival_lower_bound(node, t, battery, self.destination);
                bound > b.arrival + 1e-9
            }
            _ => false,
        }
    }

    fn visit(&mut self, node: NodeId, arrive: f64, battery: f64, distance: f64) {
        let mut neighbors: Vec<NodeId> = self
            .ctx
            .network
            .neighbors(node)
            .map(|(nb, _)| nb)
            .filter(|nb| !self.visited[nb.0])
            .collect();
        if self.prune {
            let net = self.ctx.network;
            let dst = self.destination;
            neighbors.sort_by(|a, b| {
                net.straight_line(*a, dst)
                    .total_cmp(&net.straight_line(*b, dst))
                    .then(a.cmp(b))
            });
        }
        for recharge in [false, true] {
            if recharge && battery >= 100.0 {
                continue;
            }
            let d = dwell(self.ctx, node, arrive, battery, recharge);
            if self.hopeless(node, d.ready, d.battery) {
                continue;
            }
            self.flags.push(recharge);
            for &nb in &neighbors {
                let Some(h) = hop(self.ctx, node, nb, d.ready, d.battery) else {
                    continue;
                };
                self.stats.expanded += 1;
                let reached = distance + h.distance;
                self.path.push(nb);
                if nb == self.destination {
                    self.offer(h.arrive, reached);
                } else if !self.hopeless(nb, h.arrive, d.battery - h.consumed) {
                    self.visited[nb.0] = true;
                    self.visit(nb, h.arrive, d.battery - h.consumed, reached);
                    self.visited[nb.0] = false;
                }
                self.path.pop();
            }
            self.flags.pop();
        }
    }
}

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{DeliveryRequest, NodeId};

use super::{
    children, greedy_route, score_state, simulate_route, Action, Composed, LookaheadDepth,
    PlanningContext, RouteQuery, SearchStats, State,
};

/// Lookahead composition from a delivery request with a full battery.
pub fn compose_lookahead(
    ctx: &PlanningContext<'_>,
    request: &DeliveryRequest,
    depth: LookaheadDepth,
) -> Result<Composed> {
    request.validate(ctx.network)?;
    lookahead_route(ctx, &RouteQuery::from_request(request), depth, 3)
}

/// Repeatedly evaluates every child of the committed state by the best leaf
/// score reachable within `depth` further hops, commits the best child, and
/// backtracks out of committed states whose subtrees all dead-end.
///
/// Recharging does not consume a lookahead level; a recharge is always paired
/// with the hop that follows it. Depth zero is the greedy composer.
pub fn lookahead_route(
    ctx: &PlanningContext<'_>,
    query: &RouteQuery,
    depth: LookaheadDepth,
    revisit_limit: usize,
) -> Result<Composed> {
    query.check(ctx.network)?;
    if depth.0 == 0 {
        return greedy_route(ctx, query, revisit_limit);
    }
    let mut search = Search {
        ctx,
        destination: query.destination,
        visited: query.blocked(ctx.network.len()),
        stats: SearchStats::default(),
    };
    search.visited[query.source.0] = true;

    let root = Node {
        state: State {
            node_id: query.source,
            timestamp: query.start_time,
            battery: query.start_battery,
            accumulated_distance: 0.0,
        },
        recharged_here: false,
        via: None,
    };
    let root_candidates = search.rank(&root, depth.0);
    let mut frames = vec![Frame {
        node: root,
        candidates: root_candidates,
        next: 0,
    }];

    loop {
        let top = frames.last_mut().expect("frame stack never empty here");
        if top.node.state.node_id == query.destination {
            break;
        }
        if top.next >= top.candidates.len() {
            let dead = frames.pop().expect("non-empty");
            if let Some(Action::Travel { to, .. }) = dead.node.via {
                search.visited[to.0] = false;
            }
            if frames.is_empty() {
                return Err(Error::UnreachableDestination {
                    origin: query.source,
                    destination: query.destination,
                });
            }
            continue;
        }
        let chosen = top.candidates[top.next].node.clone();
        top.next += 1;
        if let Some(Action::Travel { to, .. }) = chosen.via {
            search.visited[to.0] = true;
        }
        let candidates = if chosen.state.node_id == query.destination {
            Vec::new()
        } else {
            search.rank(&chosen, depth.0)
        };
        frames.push(Frame {
            node: chosen,
            candidates,
            next: 0,
        });
    }

    let mut nodes = vec![query.source];
    let mut flags = vec![false];
    for frame in &frames[1..] {
        match frame.node.via {
            Some(Action::Travel { to, .. }) => {
                nodes.push(to);
                flags.push(false);
            }
            Some(Action::Recharge { .. }) => {
                *flags.last_mut().expect("flag per node") = true;
            }
            None => {}
        }
    }
    flags.pop();
    let (plan, _) = simulate_route(
        ctx,
        (query.source, query.start_time, query.start_battery),
        &nodes,
        &flags,
        false,
    )
    .expect("committed route replays");
    Ok(Composed {
        plan,
        stats: search.stats,
    })
}

#[derive(Debug, Clone)]
struct Node {
    state: State,
    recharged_here: bool,
    via: Option<Action>,
}

struct Candidate {
    value: f64,
    node: Node,
}

struct Frame {
    node: Node,
    candidates: Vec<Candidate>,
    next: usize,
}

struct Search<'c, 'a> {
    ctx: &'c PlanningContext<'a>,
    destination: NodeId,
    visited: Vec<bool>,
    stats: SearchStats,
}

fn level_cost(action: &Action) -> usize {
    match action {
        Action::Travel { .. } => 1,
        Action::Recharge { .. } => 0,
    }
}

fn tie_break(a: &Candidate, b: &Candidate) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.node.state.timestamp.total_cmp(&b.node.state.timestamp))
        .then(
            a.node
                .state
                .accumulated_distance
                .total_cmp(&b.node.state.accumulated_distance),
        )
        .then(a.node.state.node_id.cmp(&b.node.state.node_id))
        .then(a.node.recharged_here.cmp(&b.node.recharged_here))
}

impl Search<'_, '_> {
    fn expand(&mut self, node: &Node) -> Vec<Node> {
        let kids = children(self.ctx, &node.state, node.recharged_here, &self.visited);
        self.stats.expanded += kids.len() as u64;
        kids.into_iter()
            .map(|(action, state)| Node {
                state,
                recharged_here: matches!(action, Action::Recharge { .. }),
                via: Some(action),
            })
            .collect()
    }

    fn lower_bound(&self, node: &Node) -> f64 {
        self.ctx.arrival_lower_bound(
            node.state.node_id,
            node.state.timestamp,
            node.state.battery,
            self.destination,
        )
    }

    /// Children of a committed node with exact subtree values, best first.
    /// Children whose whole subtree dead-ends are dropped.
    fn rank(&mut self, node: &Node, depth: usize) -> Vec<Candidate> {
        let kids = self.expand(node);
        let mut ranked = Vec::with_capacity(kids.len());
        for kid in kids {
            let action = kid.via.expect("child has an action");
            let budget = depth + 1 - level_cost(&action);
            let value = self.with_visit(&action, |s| s.value(&kid, budget, f64::INFINITY));
            if value.is_finite() {
                ranked.push(Candidate { value, node: kid });
            }
        }
        ranked.sort_by(tie_break);
        ranked
    }

    fn with_visit<T>(&mut self, action: &Action, f: impl FnOnce(&mut Self) -> T) -> T {
        if let Action::Travel { to, .. } = action {
            self.visited[to.0] = true;
            let out = f(self);
            self.visited[to.0] = false;
            out
        } else {
            f(self)
        }
    }

    /// Minimum leaf score under `node` within `budget` hops. Values at or above
    /// `bound` are only guaranteed to be `>= bound`.
    fn value(&mut self, node: &Node, budget: usize, bound: f64) -> f64 {
        if node.state.node_id == self.destination {
            return node.state.timestamp;
        }
        if budget == 0 {
            return score_state(self.ctx, &node.state, self.destination);
        }
        let mut kids: Vec<(f64, Node)> = self
            .expand(node)
            .into_iter()
            .map(|k| (self.lower_bound(&k), k))
            .collect();
        kids.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for (lb, kid) in kids {
            if lb >= best.min(bound) {
                break;
            }
            let action = kid.via.expect("child has an action");
            let next_budget = budget - level_cost(&action);
            let cap = best.min(bound);
            let v = self.with_visit(&action, |s| s.value(&kid, next_budget, cap));
            best = best.min(v);
        }
        best
    }
}

use crate::error::{Error, Result};
use crate::model::{DeliveryRequest, NodeId};

use super::{dwell, hop, simulate_route, Composed, PlanningContext, RouteQuery, SearchStats};

/// Without-lookahead baseline from a delivery request.
pub fn compose_greedy(
    ctx: &PlanningContext<'_>,
    request: &DeliveryRequest,
    revisit_limit: usize,
) -> Result<Composed> {
    request.validate(ctx.network)?;
    greedy_route(ctx, &RouteQuery::from_request(request), revisit_limit)
}

/// Always flies the shortest segment that brings the drone closer to the
/// destination (the shortest segment overall if none does), recharging only
/// when that segment cannot be flown on the current charge.
pub fn greedy_route(
    ctx: &PlanningContext<'_>,
    query: &RouteQuery,
    revisit_limit: usize,
) -> Result<Composed> {
    query.check(ctx.network)?;
    let network = ctx.network;
    let blocked = query.blocked(network.len());
    let mut visits = vec![0usize; network.len()];
    visits[query.source.0] = 1;

    let mut stats = SearchStats::default();
    let mut nodes = vec![query.source];
    let mut flags = Vec::new();
    let mut cur = query.source;
    let mut arrive = query.start_time;
    let mut battery = query.start_battery;

    while cur != query.destination {
        let here = network.straight_line(cur, query.destination);
        let mut options: Vec<(NodeId, f64)> = network
            .neighbors(cur)
            .filter(|(nb, _)| !blocked[nb.0])
            .map(|(nb, seg)| (nb, seg.distance))
            .collect();
        if options
            .iter()
            .any(|&(nb, _)| network.straight_line(nb, query.destination) < here)
        {
            options.retain(|&(nb, _)| network.straight_line(nb, query.destination) < here);
        }
        options.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

        let mut chosen = None;
        for (nb, _) in options {
            stats.expanded += 1;
            if let Some(h) = hop(ctx, cur, nb, arrive, battery) {
                chosen = Some((nb, false, h.arrive, battery - h.consumed));
                break;
            }
            if battery < 100.0 {
                let d = dwell(ctx, cur, arrive, battery, true);
                if let Some(h) = hop(ctx, cur, nb, d.ready, d.battery) {
                    chosen = Some((nb, true, h.arrive, d.battery - h.consumed));
                    break;
                }
            }
        }
        let Some((next, recharge, next_arrive, next_battery)) = chosen else {
            return Err(Error::UnreachableDestination {
                origin: query.source,
                destination: query.destination,
            });
        };
        visits[next.0] += 1;
        if visits[next.0] > revisit_limit {
            return Err(Error::LivelockGuard {
                node: next,
                limit: revisit_limit,
            });
        }
        flags.push(recharge);
        nodes.push(next);
        cur = next;
        arrive = next_arrive;
        battery = next_battery;
    }

    let (plan, _) = simulate_route(
        ctx,
        (query.source, query.start_time, query.start_battery),
        &nodes,
        &flags,
        false,
    )
    .expect("greedy route replays");
    Ok(Composed { plan, stats })
}

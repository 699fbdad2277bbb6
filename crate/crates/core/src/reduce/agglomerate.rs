use std::collections::VecDeque;

use crate::net::{Net, NetError, PlaceId, TransId};

use super::{CandidateOrder, ReduceError};

/// `Pre(t) = {(p,1)}` and `Post(t) = {(q,1)}`.
fn unit_move(net: &Net, t: TransId) -> Option<(PlaceId, PlaceId)> {
    match (net.pre(t).as_slice(), net.post(t).as_slice()) {
        ([(p, 1)], [(q, 1)]) => Some((*p, *q)),
        _ => None,
    }
}

pub(crate) fn chain(net: &Net, order: CandidateOrder) -> Option<(PlaceId, PlaceId, TransId)> {
    let adj = net.adjacency();
    order.transitions(net).into_iter().find_map(|t| {
        let (p, q) = unit_move(net, t)?;
        (p != q && adj.producers[q.index()] == [t] && net.initial(q) == 0).then_some((p, q, t))
    })
}

/// Shortest cycle of unit moves through some place, tried in candidate order.
pub(crate) fn shortest_loop(net: &Net, order: CandidateOrder, max_n: usize) -> Option<Vec<PlaceId>> {
    let n = net.num_places();
    let mut succ: Vec<Vec<PlaceId>> = vec![Vec::new(); n];
    for t in order.transitions(net) {
        if let Some((p, q)) = unit_move(net, t) {
            if p != q && !succ[p.index()].contains(&q) {
                succ[p.index()].push(q);
            }
        }
    }
    for start in order.places(net) {
        let mut parent: Vec<Option<PlaceId>> = vec![None; n];
        let mut depth = vec![usize::MAX; n];
        depth[start.index()] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if depth[u.index()] + 1 > max_n {
                break;
            }
            for &v in &succ[u.index()] {
                if v == start {
                    let mut cycle = vec![u];
                    let mut cur = u;
                    while let Some(prev) = parent[cur.index()] {
                        cycle.push(prev);
                        cur = prev;
                    }
                    cycle.reverse();
                    return Some(cycle);
                }
                if depth[v.index()] == usize::MAX {
                    depth[v.index()] = depth[u.index()] + 1;
                    parent[v.index()] = Some(u);
                    queue.push_back(v);
                }
            }
        }
    }
    None
}

/// First chain `p -t-> q` that can be agglomerated: `t` moves one token from
/// `p` to `q` and nothing else, `t` is the only producer of `q`, and `q` is
/// initially empty.
pub fn find_chain_agglomeration(net: &Net) -> Option<(PlaceId, PlaceId, TransId)> {
    chain(net, CandidateOrder::Declaration)
}

/// A cycle `π0 → π1 → … → π0` of at most `max_n` places where each hop is a
/// transition moving exactly one token and nothing else.
pub fn find_loop_agglomeration(net: &Net, max_n: usize) -> Option<Vec<PlaceId>> {
    shortest_loop(net, CandidateOrder::Declaration, max_n)
}

/// Replaces `parts` by a fresh place carrying the sum of their initial
/// markings and arcs. Transitions that become identities are kept.
pub fn apply_agglomeration(net: &Net, parts: &[PlaceId], fresh: &str) -> Result<Net, ReduceError> {
    if parts.is_empty() {
        return Err(ReduceError::EmptyParts);
    }
    if net.has_name(fresh) {
        return Err(ReduceError::NameCollision(fresh.to_string()));
    }
    for (i, &p) in parts.iter().enumerate() {
        if p.index() >= net.num_places() {
            return Err(NetError::UnknownPlace(format!("#{}", p.index())).into());
        }
        if parts[..i].contains(&p) {
            return Err(ReduceError::NameCollision(net.place_name(p).to_string()));
        }
    }
    let mut out = net.clone();
    out.merge_places(parts, fresh);
    Ok(out)
}

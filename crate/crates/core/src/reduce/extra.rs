use crate::net::{Net, PlaceId, TransId};

use super::CandidateOrder;

pub(crate) fn source_sink(net: &Net, order: CandidateOrder) -> Option<(PlaceId, TransId)> {
    let adj = net.adjacency();
    order.places(net).into_iter().find_map(|p| {
        if !adj.producers[p.index()].is_empty() {
            return None;
        }
        let [t] = adj.consumers[p.index()].as_slice() else {
            return None;
        };
        (net.pre(*t).as_slice() == [(p, 1)] && net.post(*t).is_empty()).then_some((p, *t))
    })
}

pub(crate) fn fire_once(net: &Net) -> Option<TransId> {
    let m0 = net.initial_dense();
    let mut enabled = net.transition_ids().filter(|&t| net.enabled_dense(m0, t));
    let t = enabled.next()?;
    if enabled.next().is_some() {
        return None;
    }
    let adj = net.adjacency();
    net.pre(t)
        .iter()
        .any(|&(p, w)| {
            adj.producers[p.index()].is_empty()
                && net.initial(p) < 2 * w
                && adj.consumers[p.index()] == [t]
        })
        .then_some(t)
}

pub(crate) fn dead_transitions(net: &Net, order: CandidateOrder) -> Vec<TransId> {
    let adj = net.adjacency();
    order
        .transitions(net)
        .into_iter()
        .filter(|&t| {
            net.pre(t)
                .iter()
                .any(|&(p, w)| adj.producers[p.index()].is_empty() && net.initial(p) < w)
        })
        .collect()
}

/// First place `p` with no producer, consumed only by a transition `t` with
/// `Pre(t) = {(p,1)}` and no output. Such a pair just drains `p`.
pub fn find_source_sink(net: &Net) -> Option<(PlaceId, TransId)> {
    source_sink(net, CandidateOrder::Declaration)
}

/// The transition enabled at the initial marking if it is the only one and
/// can provably fire at most once: one of its inputs is never refilled, is
/// consumed by nothing else and holds less than twice the required tokens.
pub fn find_fire_once(net: &Net) -> Option<TransId> {
    fire_once(net)
}

/// Transitions needing more tokens than some never-refilled input holds.
pub fn find_dead_transitions(net: &Net) -> Vec<TransId> {
    dead_transitions(net, CandidateOrder::Declaration)
}

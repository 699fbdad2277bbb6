//! Explicit breadth-first construction of reachability sets.
//!
//! This is the ground truth the reductions are checked against, and the way
//! residual nets are explored when counting.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use indexmap::IndexSet;
use num_bigint::BigUint;
use thiserror::Error;

use crate::net::{FiringSequence, Marking, Net, TransId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreLimits {
    pub max_markings: usize,
    /// Exploration stops if any place exceeds this many tokens.
    pub max_token_per_place: Option<u64>,
    pub time_budget: Option<Duration>,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_markings: 1_000_000,
            max_token_per_place: None,
            time_budget: None,
        }
    }
}

impl ExploreLimits {
    pub fn with_max_markings(max_markings: usize) -> Self {
        ExploreLimits {
            max_markings: max_markings.max(1),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("exploration incomplete after {explored} markings ({reason})")]
    Incomplete { explored: usize, reason: StopReason },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MarkingLimit,
    TokenLimit,
    TimeBudget,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::MarkingLimit => "marking limit reached",
            StopReason::TokenLimit => "token limit exceeded",
            StopReason::TimeBudget => "time budget exhausted",
        })
    }
}

/// Markings found from the initial one, in discovery order.
#[derive(Clone, Debug)]
pub struct ReachabilitySet {
    markings: IndexSet<Box<[u64]>>,
    parents: Vec<Option<(usize, TransId)>>,
    /// Closed under firing: every successor of every marking is present.
    pub complete: bool,
    /// The breadth-first frontier was emptied.
    pub frontier_exhausted: bool,
    pub stop_reason: Option<StopReason>,
}

impl ReachabilitySet {
    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }

    pub fn contains(&self, m: &Marking, num_places: usize) -> bool {
        self.markings.contains(m.to_dense(num_places).as_slice())
    }

    pub fn dense(&self) -> impl Iterator<Item = &[u64]> {
        self.markings.iter().map(|m| &m[..])
    }

    pub fn markings(&self) -> impl Iterator<Item = Marking> + '_ {
        self.markings.iter().map(|m| Marking::from_dense(m))
    }

    /// A firing sequence from the initial marking to marking number `ix`.
    pub fn path_to(&self, ix: usize) -> FiringSequence {
        let mut steps = Vec::new();
        let mut cur = ix;
        while let Some((prev, t)) = self.parents[cur] {
            steps.push(t);
            cur = prev;
        }
        steps.reverse();
        FiringSequence::new(steps)
    }

    /// One marking per line, `place:count` pairs for nonzero places.
    pub fn dump(&self, net: &Net) -> String {
        let mut out = String::new();
        for m in self.markings() {
            writeln!(out, "{}", net.marking_to_string(&m)).unwrap();
        }
        out
    }
}

/// Breadth-first closure of the initial marking under firing.
pub fn reachability_set(net: &Net, limits: &ExploreLimits) -> ReachabilitySet {
    let start = Instant::now();
    let mut markings: IndexSet<Box<[u64]>> = IndexSet::new();
    let mut parents = Vec::new();
    markings.insert(net.initial_dense().into());
    parents.push(None);
    let mut stop = None;
    let over_tokens = |m: &[u64]| limits.max_token_per_place.is_some_and(|k| m.iter().any(|&x| x > k));
    if over_tokens(net.initial_dense()) {
        stop = Some(StopReason::TokenLimit);
    }
    let mut next = 0;
    let mut scratch = vec![0u64; net.num_places()];
    'bfs: while stop.is_none() && next < markings.len() {
        if limits.time_budget.is_some_and(|b| start.elapsed() > b) {
            stop = Some(StopReason::TimeBudget);
            break;
        }
        for t in net.transition_ids() {
            let m = &markings[next];
            if !net.enabled_dense(m, t) {
                continue;
            }
            scratch.copy_from_slice(m);
            net.fire_dense_unchecked(&mut scratch, t);
            if markings.contains(scratch.as_slice()) {
                continue;
            }
            if markings.len() >= limits.max_markings {
                stop = Some(StopReason::MarkingLimit);
                break 'bfs;
            }
            if over_tokens(&scratch) {
                stop = Some(StopReason::TokenLimit);
                break 'bfs;
            }
            markings.insert(scratch.clone().into_boxed_slice());
            parents.push(Some((next, t)));
        }
        next += 1;
    }
    let exhausted = stop.is_none();
    ReachabilitySet {
        markings,
        parents,
        complete: exhausted,
        frontier_exhausted: exhausted,
        stop_reason: stop,
    }
}

/// `|R(net)|`, or an error if exploration hits a limit.
pub fn count_reachable(net: &Net, limits: &ExploreLimits) -> Result<BigUint, ExploreError> {
    let rs = reachability_set(net, limits);
    if rs.complete {
        Ok(BigUint::from(rs.len()))
    } else {
        Err(ExploreError::Incomplete {
            explored: rs.len(),
            reason: rs.stop_reason.expect("incomplete sets record a reason"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_net;

    #[test]
    fn single_move() {
        let net = parse_net("pl p (1)\ntr t p -> q").unwrap();
        let rs = reachability_set(&net, &ExploreLimits::default());
        assert!(rs.complete);
        assert_eq!(rs.dump(&net), "p:1\nq:1\n");
    }

    #[test]
    fn ring_of_three_with_two_tokens() {
        let net = parse_net("pl a (2)\ntr t0 a -> b\ntr t1 b -> c\ntr t2 c -> a").unwrap();
        assert_eq!(count_reachable(&net, &ExploreLimits::default()).unwrap(), BigUint::from(6u32));
    }

    #[test]
    fn unbounded_producer_stops_at_limit() {
        let net = parse_net("tr t -> p").unwrap();
        let rs = reachability_set(&net, &ExploreLimits::with_max_markings(100));
        assert!(!rs.complete);
        assert_eq!(rs.len(), 100);
        assert_eq!(rs.stop_reason, Some(StopReason::MarkingLimit));
        assert!(count_reachable(&net, &ExploreLimits::with_max_markings(100)).is_err());
        let limits = ExploreLimits {
            max_token_per_place: Some(5),
            ..ExploreLimits::default()
        };
        assert_eq!(reachability_set(&net, &limits).stop_reason, Some(StopReason::TokenLimit));
    }

    #[test]
    fn trivial_nets() {
        assert_eq!(count_reachable(&Net::new("e"), &ExploreLimits::default()).unwrap(), BigUint::from(1u32));
        let net = parse_net("pl p (3)").unwrap();
        assert_eq!(count_reachable(&net, &ExploreLimits::default()).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn chain_has_n_plus_one_markings() {
        for n in 0..8u64 {
            let net = parse_net(&format!("pl p ({n})\ntr t p -> q")).unwrap();
            assert_eq!(
                count_reachable(&net, &ExploreLimits::default()).unwrap(),
                BigUint::from(n + 1)
            );
        }
    }

    #[test]
    fn paths_replay_to_their_marking() {
        let net = parse_net("pl a (2)\ntr t0 a -> b\ntr t1 b -> c\ntr t2 c -> a").unwrap();
        let rs = reachability_set(&net, &ExploreLimits::default());
        for (ix, m) in rs.markings().enumerate() {
            let mut cur = net.initial_marking();
            for &t in &rs.path_to(ix).steps {
                cur = net.fire(&cur, t).unwrap();
            }
            assert_eq!(cur, m);
        }
    }
}

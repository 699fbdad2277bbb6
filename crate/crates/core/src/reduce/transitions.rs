use std::collections::{HashSet, VecDeque};

use crate::net::{Displacement, FiringSequence, Marking, Net, NetError, TransId};

use super::CandidateOrder;

/// `k` with `d = k·base`, `k >= 1`, if any.
fn multiple_of(d: &Displacement, base: &Displacement) -> Option<i64> {
    let (p, b) = base.iter().next()?;
    let x = d.get(p);
    if x == 0 || x % b != 0 || x / b < 1 {
        return None;
    }
    let k = x / b;
    let support_matches = d.iter().count() == base.iter().count();
    (support_matches && base.iter().all(|(q, y)| d.get(q) == k * y)).then_some(k)
}

fn pre_marking(net: &Net, t: TransId) -> Marking {
    Marking::from_pairs(net.pre(t).iter().copied())
}

fn post_marking(net: &Net, t: TransId) -> Marking {
    Marking::from_pairs(net.post(t).iter().copied())
}

/// Identity or duplicate witness for `t`, honouring the tie-break between
/// identical transitions (the one ranked later is the redundant one).
fn special_witness(net: &Net, t: TransId, order: CandidateOrder) -> Option<FiringSequence> {
    let dt = net.delta(t);
    if dt.is_zero() {
        return Some(FiringSequence::empty());
    }
    let ht = pre_marking(net, t);
    for u in order.transitions(net) {
        if u == t {
            continue;
        }
        let du = net.delta(u);
        let Some(k) = multiple_of(&dt, &du) else {
            continue;
        };
        let sigma = FiringSequence::new(vec![u; k as usize]);
        let hu = net.hurdle(&sigma).expect("transition of this net");
        if !ht.covers(&hu) {
            continue;
        }
        let identical = k == 1 && hu == ht;
        if identical && order.transition_before(net, t, u) {
            continue;
        }
        return Some(sigma);
    }
    None
}

/// Breadth-first search from `Pre(t)` for a sequence over `T \ {t}` of at
/// most `max_len` steps reaching `Post(t)`. Such a sequence has the same
/// displacement as `t` and a hurdle no larger than that of `t`.
fn sequence_witness(net: &Net, t: TransId, max_len: usize) -> Option<FiringSequence> {
    let start = pre_marking(net, t);
    let goal = post_marking(net, t);
    let mut seen: HashSet<Marking> = HashSet::from([start.clone()]);
    let mut queue: VecDeque<(Marking, Vec<TransId>)> = VecDeque::from([(start, Vec::new())]);
    while let Some((m, path)) = queue.pop_front() {
        if path.len() == max_len {
            continue;
        }
        for u in net.transition_ids() {
            if u == t || !net.enabled(&m, u).unwrap_or(false) {
                continue;
            }
            let next = net.fire(&m, u).expect("enabled");
            let mut p = path.clone();
            p.push(u);
            if next == goal {
                return Some(FiringSequence::new(p));
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, p));
            }
        }
    }
    None
}

pub(crate) fn special_redundant(net: &Net, order: CandidateOrder) -> Option<TransId> {
    order
        .transitions(net)
        .into_iter()
        .find(|&t| special_witness(net, t, order).is_some())
}

pub(crate) fn general_redundant(net: &Net, order: CandidateOrder, max_len: usize) -> Option<TransId> {
    order
        .transitions(net)
        .into_iter()
        .find(|&t| sequence_witness(net, t, max_len).is_some())
}

/// A witness that `t` is redundant: a sequence over the other transitions
/// with the same displacement and a hurdle no larger than `Pre(t)`.
///
/// Identity and duplicate transitions are recognized whatever `max_len`;
/// other witnesses are searched up to `max_len` steps.
pub fn find_redundant_transition(
    net: &Net,
    t: TransId,
    max_len: usize,
) -> Result<Option<FiringSequence>, NetError> {
    net.enabled(&Marking::new(), t)?;
    let order = CandidateOrder::Declaration;
    Ok(special_witness(net, t, order).or_else(|| sequence_witness(net, t, max_len)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_net;

    fn names(net: &Net, s: &FiringSequence) -> Vec<String> {
        s.steps
            .iter()
            .map(|&t| net.transition_name(t).to_string())
            .collect()
    }

    #[test]
    fn identity_has_empty_witness() {
        let net = parse_net("pl p (1)\ntr t p -> p").unwrap();
        let t = net.transition("t").unwrap();
        assert_eq!(find_redundant_transition(&net, t, 0).unwrap(), Some(FiringSequence::empty()));
    }

    #[test]
    fn duplicate_witness() {
        let net = parse_net("tr t1 p -> q\ntr t2 p r -> q r").unwrap();
        let t2 = net.transition("t2").unwrap();
        let w = find_redundant_transition(&net, t2, 0).unwrap().unwrap();
        assert_eq!(names(&net, &w), ["t1"]);
        // t1 has the smaller hurdle, so it is not redundant
        let t1 = net.transition("t1").unwrap();
        assert_eq!(find_redundant_transition(&net, t1, 0).unwrap(), None);
    }

    #[test]
    fn duplicate_with_multiplier_needs_hurdle() {
        let net = parse_net("tr t1 p -> q\ntr t2 p*2 -> q*2").unwrap();
        let t2 = net.transition("t2").unwrap();
        let w = find_redundant_transition(&net, t2, 0).unwrap().unwrap();
        assert_eq!(names(&net, &w), ["t1", "t1"]);
        // with a smaller hurdle than t1·t1 the multiple is not a witness
        let net = parse_net("tr t1 p*2 -> q p\ntr t2 p*2 -> q*2").unwrap();
        let t2 = net.transition("t2").unwrap();
        assert_eq!(find_redundant_transition(&net, t2, 0).unwrap(), None);
    }

    #[test]
    fn identical_transitions_keep_the_first() {
        let net = parse_net("tr t p -> q\ntr u p -> q").unwrap();
        let t = net.transition("t").unwrap();
        let u = net.transition("u").unwrap();
        assert_eq!(special_redundant(&net, CandidateOrder::Declaration), Some(u));
        // each is still a witness for the other
        assert!(find_redundant_transition(&net, u, 0).unwrap().is_some());
        let _ = t;
    }

    #[test]
    fn two_step_witness() {
        let net = parse_net("tr t1 p -> q\ntr t2 q -> r\ntr t p -> r").unwrap();
        let t = net.transition("t").unwrap();
        assert_eq!(find_redundant_transition(&net, t, 1).unwrap(), None);
        let w = find_redundant_transition(&net, t, 2).unwrap().unwrap();
        assert_eq!(names(&net, &w), ["t1", "t2"]);
        assert_eq!(net.displacement(&w).unwrap(), net.delta(t));
        assert!(pre_marking(&net, t).covers(&net.hurdle(&w).unwrap()));
    }

    #[test]
    fn unknown_transition() {
        let net = parse_net("tr t p -> q").unwrap();
        assert!(find_redundant_transition(&net, TransId::from_index(5), 2).is_err());
    }
}

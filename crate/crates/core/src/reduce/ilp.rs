//! Bounded integer search for redundant-place valuations.
//!
//! Unknowns are `w = v(p) − 1` and `x_q = v(q)` for the other places, with
//! `x_q = 0` meaning `q` is outside the support. The three clauses become:
//!
//! * per transition, `v(p)·Δ(t)(p) = Σ x_q·Δ(t)(q)`;
//! * `b = v(p)·m0(p) − Σ x_q·m0(q) >= 0`;
//! * per transition, `Σ x_q·(m0(q) − Pre(t)(q)) <= v(p)·(m0(p) − Pre(t)(p))`.

use std::collections::VecDeque;

use crate::linear::{first_solution_within, LinSystem, LinearConstraint, Relation, Valuation};
use crate::net::{Net, PlaceId};

use super::places::RedundantPlaceCertificate;

const NODE_BUDGET: u64 = 4000;

/// `Σ c·x ⋈ b`
type Row = (Vec<(String, i64)>, Relation, i64);

fn var(ix: usize) -> String {
    format!("x{ix}")
}

/// Places ordered by distance from `p` in the place/transition graph, so that
/// the search branches on neighbours first.
fn by_distance(net: &Net, p: PlaceId) -> Vec<PlaceId> {
    let adj = net.adjacency();
    let mut dist = vec![usize::MAX; net.num_places()];
    dist[p.index()] = 0;
    let mut queue = VecDeque::from([p]);
    let mut out = Vec::new();
    while let Some(q) = queue.pop_front() {
        if q != p {
            out.push(q);
        }
        for &t in adj.producers[q.index()].iter().chain(&adj.consumers[q.index()]) {
            for &(r, _) in net.pre(t).iter().chain(net.post(t)) {
                if dist[r.index()] == usize::MAX {
                    dist[r.index()] = dist[q.index()] + 1;
                    queue.push_back(r);
                }
            }
        }
    }
    for q in net.place_ids() {
        if dist[q.index()] == usize::MAX {
            out.push(q);
        }
    }
    out
}

fn row(coeffs: &[(String, i64)], relation: Relation, rhs: i64) -> Option<Result<LinearConstraint, ()>> {
    let lhs: Vec<(String, i64)> = coeffs.iter().filter(|c| c.1 != 0).cloned().collect();
    if lhs.is_empty() {
        let ok = match relation {
            Relation::Eq => rhs == 0,
            Relation::Le => rhs >= 0,
        };
        return if ok { None } else { Some(Err(())) };
    }
    Some(Ok(LinearConstraint::new(lhs, relation, Vec::new(), rhs).expect("nonzero lhs")))
}

pub(crate) fn search(net: &Net, p: PlaceId, coeff_bound: u64) -> Option<RedundantPlaceCertificate> {
    if coeff_bound == 0 {
        return None;
    }
    let others = by_distance(net, p);
    let m0p = net.initial(p) as i64;
    let mut q = LinSystem::new();
    q.push(LinearConstraint::upper_bound("w", coeff_bound as i64 - 1));
    for &o in &others {
        q.push(LinearConstraint::upper_bound(&var(o.index()), coeff_bound as i64));
    }
    let mut rows: Vec<Row> = Vec::new();
    for t in net.transition_ids() {
        let dp = net.delta_at(t, p);
        let mut eq = vec![("w".to_string(), dp)];
        eq.extend(others.iter().map(|&o| (var(o.index()), -net.delta_at(t, o))));
        rows.push((eq, Relation::Eq, -dp));

        let slack_p = m0p - net.pre_weight(t, p) as i64;
        let mut le = vec![("w".to_string(), -slack_p)];
        le.extend(
            others
                .iter()
                .map(|&o| (var(o.index()), net.initial(o) as i64 - net.pre_weight(t, o) as i64)),
        );
        rows.push((le, Relation::Le, slack_p));
    }
    let mut b_row = vec![("w".to_string(), -m0p)];
    b_row.extend(others.iter().map(|&o| (var(o.index()), net.initial(o) as i64)));
    rows.push((b_row, Relation::Le, m0p));

    for (coeffs, rel, rhs) in rows {
        match row(&coeffs, rel, rhs) {
            None => {}
            Some(Err(())) => return None,
            Some(Ok(c)) => q.push(c),
        }
    }
    let sol: Valuation = first_solution_within(&q, &Valuation::new(), 0, NODE_BUDGET)?;
    let vp = sol["w"] + 1;
    let mut support = Vec::new();
    let mut valuation = vec![(p, vp)];
    for &o in &others {
        let x = sol[&var(o.index())];
        if x > 0 {
            support.push(o);
            valuation.push((o, x));
        }
    }
    let offset = vp as i64 * m0p
        - support
            .iter()
            .zip(&valuation[1..])
            .map(|(&o, &(_, x))| x as i64 * net.initial(o) as i64)
            .sum::<i64>();
    let cert = RedundantPlaceCertificate {
        place: p,
        support,
        valuation,
        offset: offset as u64,
    };
    debug_assert!(cert.check(net));
    Some(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_net;

    #[test]
    fn finds_sum_of_two_places() {
        // s tracks p + q: every transition moves s exactly as p and q together
        let net = parse_net(
            "pl i (2)\n\
             tr a i -> p s\ntr b p -> q\ntr c q s -> o",
        )
        .unwrap();
        let s = net.place("s").unwrap();
        let cert = search(&net, s, 4).unwrap();
        assert!(cert.check(&net));
        let names: Vec<&str> = cert.support.iter().map(|&q| net.place_name(q)).collect();
        assert_eq!(names, ["p", "q"]);
        assert_eq!(cert.offset, 0);
    }

    #[test]
    fn respects_coefficient_bound() {
        // 3.s = p: needs v(s) = 3
        let net = parse_net("pl i (2)\ntr a i -> p*3 s\ntr b p*3 s -> o").unwrap();
        let s = net.place("s").unwrap();
        assert!(search(&net, s, 2).is_none());
        let cert = search(&net, s, 3).unwrap();
        assert_eq!(cert.valuation[0].1, 3);
    }

    #[test]
    fn refuses_restricting_place() {
        // s blocks b until c refills it: not redundant
        let net = parse_net("pl i (2)\npl s (1)\ntr b i s -> o\ntr c o -> s").unwrap();
        let s = net.place("s").unwrap();
        assert!(search(&net, s, 4).is_none());
    }
}

use std::collections::HashMap;

use num_integer::Integer;

use crate::linear::LinearConstraint;
use crate::net::{Net, NetError, PlaceId};

use super::{ilp, CandidateOrder};

/// Witness that `place` is redundant: with `v = valuation`, `I = support`
/// and `b = offset`, every reachable marking satisfies
/// `v(p)·m(p) = Σ_{q ∈ I} v(q)·m(q) + b` and `p` never disables a transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedundantPlaceCertificate {
    pub place: PlaceId,
    pub support: Vec<PlaceId>,
    /// Coefficient of `place` first, then one per support place.
    pub valuation: Vec<(PlaceId, u64)>,
    pub offset: u64,
}

impl RedundantPlaceCertificate {
    fn coeff(&self, q: PlaceId) -> i64 {
        self.valuation
            .iter()
            .find(|v| v.0 == q)
            .map_or(0, |v| v.1 as i64)
    }

    /// Evaluates the three defining clauses directly on `net`.
    pub fn check(&self, net: &Net) -> bool {
        let p = self.place;
        let vp = self.coeff(p);
        if vp < 1 || self.support.contains(&p) {
            return false;
        }
        if self.support.iter().any(|&q| self.coeff(q) < 1) {
            return false;
        }
        let weighted = |f: &dyn Fn(PlaceId) -> i64| -> i64 {
            self.support.iter().map(|&q| self.coeff(q) * f(q)).sum()
        };
        let b = vp * net.initial(p) as i64 - weighted(&|q| net.initial(q) as i64);
        if b < 0 || b as u64 != self.offset {
            return false;
        }
        net.transition_ids().all(|t| {
            let pre = vp * net.pre_weight(t, p) as i64 - weighted(&|q| net.pre_weight(t, q) as i64);
            let delta = vp * net.delta_at(t, p) - weighted(&|q| net.delta_at(t, q));
            pre <= b && delta == 0
        })
    }

    /// `v(p).p = Σ v(q).q + b`
    pub fn constraint(&self, net: &Net) -> LinearConstraint {
        LinearConstraint::equation(
            net.place_name(self.place),
            self.coeff(self.place),
            self.support
                .iter()
                .map(|&q| (net.place_name(q).to_string(), self.coeff(q)))
                .collect(),
            self.offset as i64,
        )
    }
}

fn column(net: &Net, p: PlaceId) -> Vec<i64> {
    net.transition_ids().map(|t| net.delta_at(t, p)).collect()
}

fn constant(net: &Net, p: PlaceId) -> Option<RedundantPlaceCertificate> {
    let m0 = net.initial(p);
    net.transition_ids()
        .all(|t| net.delta_at(t, p) == 0 && net.pre_weight(t, p) <= m0)
        .then(|| RedundantPlaceCertificate {
            place: p,
            support: Vec::new(),
            valuation: vec![(p, 1)],
            offset: m0,
        })
}

/// `v(p)·Δ(p) = v(q)·Δ(q)` with the smallest such coefficients.
fn duplicate(net: &Net, p: PlaceId, q: PlaceId, coeff_bound: u64) -> Option<RedundantPlaceCertificate> {
    let cp = column(net, p);
    let cq = column(net, q);
    let gp = cp.iter().fold(0i64, |g, &x| g.gcd(&x));
    let gq = cq.iter().fold(0i64, |g, &x| g.gcd(&x));
    if gp == 0 || gq == 0 || cp.iter().zip(&cq).any(|(&a, &b)| a / gp != b / gq) {
        return None;
    }
    let g = gp.gcd(&gq);
    let (vp, vq) = ((gq / g) as u64, (gp / g) as u64);
    if vp > coeff_bound || vq > coeff_bound {
        return None;
    }
    let b = vp as i64 * net.initial(p) as i64 - vq as i64 * net.initial(q) as i64;
    if b < 0 {
        return None;
    }
    let cert = RedundantPlaceCertificate {
        place: p,
        support: vec![q],
        valuation: vec![(p, vp), (q, vq)],
        offset: b as u64,
    };
    cert.check(net).then_some(cert)
}

fn normalized(col: &[i64]) -> Vec<i64> {
    let g = col.iter().fold(0i64, |g, &x| g.gcd(&x));
    if g == 0 {
        col.to_vec()
    } else {
        col.iter().map(|x| x / g).collect()
    }
}

/// First constant or duplicate place in candidate order. When two places
/// duplicate each other, the one ranked later is removed.
pub(crate) fn special_redundant(
    net: &Net,
    order: CandidateOrder,
    coeff_bound: u64,
) -> Option<RedundantPlaceCertificate> {
    let places = order.places(net);
    let mut groups: HashMap<Vec<i64>, Vec<PlaceId>> = HashMap::new();
    for &p in &places {
        groups.entry(normalized(&column(net, p))).or_default().push(p);
    }
    for &p in &places {
        if let Some(c) = constant(net, p) {
            return Some(c);
        }
        for &q in &groups[&normalized(&column(net, p))] {
            if q == p {
                continue;
            }
            let Some(c) = duplicate(net, p, q, coeff_bound) else {
                continue;
            };
            if order.place_before(net, p, q) && duplicate(net, q, p, coeff_bound).is_some() {
                continue;
            }
            return Some(c);
        }
    }
    None
}

pub(crate) fn general_redundant(
    net: &Net,
    order: CandidateOrder,
    coeff_bound: u64,
) -> Option<RedundantPlaceCertificate> {
    order
        .places(net)
        .into_iter()
        .find_map(|p| ilp::search(net, p, coeff_bound))
}

/// A certificate that `p` is redundant, if one exists with coefficients up to
/// `coeff_bound`.
///
/// Constant and duplicate places are always checked; the general search
/// only runs when the net has at most `size_limit` places.
pub fn find_redundant_place(
    net: &Net,
    p: PlaceId,
    coeff_bound: u64,
    size_limit: usize,
) -> Result<Option<RedundantPlaceCertificate>, NetError> {
    if p.index() >= net.num_places() {
        return Err(NetError::UnknownPlace(format!("#{}", p.index())));
    }
    if let Some(c) = constant(net, p) {
        return Ok(Some(c));
    }
    for q in net.place_ids() {
        if q != p {
            if let Some(c) = duplicate(net, p, q, coeff_bound) {
                return Ok(Some(c));
            }
        }
    }
    if net.num_places() > size_limit {
        return Ok(None);
    }
    Ok(ilp::search(net, p, coeff_bound))
}

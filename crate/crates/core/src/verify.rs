//! Exhaustive checks that reductions preserve reachability.
//!
//! Everything here builds state spaces explicitly, so it is only meant for
//! small nets: tests, debugging new rules, and the CLI `verify` command.

use std::collections::{BTreeMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use thiserror::Error;

use crate::count::nos;
use crate::explore::{reachability_set, ExploreLimits, ReachabilitySet};
use crate::linear::{enumerate_solutions, LinSystem, LinearConstraint, LinearError, Valuation};
use crate::net::Net;
use crate::reduce::{prefix_system, replay, ReduceError, ReductionStep, ReductionTrace, RuleKind};

/// A check could not be decided.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("state space of `{net}` not fully explored ({explored} markings)")]
    Incomplete { net: String, explored: usize },
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error("step does not fit the nets: {0}")]
    Malformed(String),
}

/// Markings of `n1` are claimed to be the markings of `n2` extended through
/// the solutions of `q`, plus the markings `fired` stands for.
#[derive(Clone, Debug)]
pub struct AbstractionTriple {
    pub n1: Net,
    pub q: LinSystem,
    pub n2: Net,
    /// One entry per fire-once step: the constraints before it and the
    /// initial marking it fired from, with every place of that net listed.
    pub fired: Vec<(LinSystem, Valuation)>,
}

impl AbstractionTriple {
    /// `(n, ∅, n)`.
    pub fn identity(net: &Net) -> Self {
        AbstractionTriple {
            n1: net.clone(),
            q: LinSystem::new(),
            n2: net.clone(),
            fired: Vec::new(),
        }
    }

    /// The triple relating the initial net to the net after `upto` steps.
    pub fn prefix(trace: &ReductionTrace, upto: usize) -> Result<Self, VerifyError> {
        let nets = replay(&trace.initial_net, &trace.steps[..upto])?;
        let mut fired = Vec::new();
        for (j, s) in trace.steps[..upto].iter().enumerate() {
            if s.kind != RuleKind::F {
                continue;
            }
            let before = s.fired_from.as_deref().unwrap_or_default();
            let fixing: Valuation = nets[j]
                .place_names()
                .iter()
                .map(|p| {
                    let v = before.iter().find(|(q, _)| q == p).map_or(0, |(_, k)| *k);
                    (p.clone(), v)
                })
                .collect();
            fired.push((prefix_system(&trace.steps[..j]), fixing));
        }
        Ok(AbstractionTriple {
            n1: trace.initial_net.clone(),
            q: prefix_system(&trace.steps[..upto]),
            n2: nets.last().expect("replay returns the final net").clone(),
            fired,
        })
    }

    pub fn from_trace(trace: &ReductionTrace) -> Result<Self, VerifyError> {
        Self::prefix(trace, trace.steps.len())
    }
}

fn explore(net: &Net, limits: &ExploreLimits) -> Result<ReachabilitySet, VerifyError> {
    let rs = reachability_set(net, limits);
    if rs.complete {
        Ok(rs)
    } else {
        Err(VerifyError::Incomplete {
            net: net.name().to_string(),
            explored: rs.len(),
        })
    }
}

fn max_value(rs: &ReachabilitySet) -> u64 {
    rs.dense().flat_map(|m| m.iter().copied()).max().unwrap_or(0)
}

/// Solutions of `q` extending `fixed`, with the listed `p1` values read from
/// the solution, from `fixed`, or ranging over `0..=bound` when neither
/// mentions them. Stops once `out` exceeds `cap` entries.
fn extend_into(
    q: &LinSystem,
    fixed: &Valuation,
    p1: &[String],
    bound: u64,
    out: &mut HashSet<Vec<u64>>,
    cap: usize,
) -> Result<(), VerifyError> {
    let in_q: Valuation = fixed
        .iter()
        .filter(|(v, _)| q.contains_var(v))
        .map(|(v, x)| (v.clone(), *x))
        .collect();
    let free: Vec<usize> = (0..p1.len())
        .filter(|&i| !q.contains_var(&p1[i]) && !fixed.contains_key(&p1[i]))
        .collect();
    for sol in enumerate_solutions(q, &in_q, bound.max(1))? {
        let mut m: Vec<u64> = p1
            .iter()
            .map(|p| sol.get(p).or_else(|| fixed.get(p)).copied().unwrap_or(0))
            .collect();
        // odometer over the unconstrained places
        loop {
            out.insert(m.clone());
            if out.len() > cap {
                return Ok(());
            }
            let mut carried = true;
            for &i in &free {
                if m[i] < bound {
                    m[i] += 1;
                    carried = false;
                    break;
                }
                m[i] = 0;
            }
            if carried {
                break;
            }
        }
    }
    Ok(())
}

/// Whether `R(n1) = ((R(n2)↑V) ∩ (⟦q⟧↑V))↓P1`, plus the fire-once markings.
///
/// Variables the equation leaves unconstrained range up to the largest
/// value seen in either state space plus the largest constant of `q`.
pub fn check_abstraction(t: &AbstractionTriple, limits: &ExploreLimits) -> Result<bool, VerifyError> {
    let r1 = explore(&t.n1, limits)?;
    let r2 = explore(&t.n2, limits)?;
    let fired_max = t.fired.iter().flat_map(|(q, f)| f.values().copied().chain([q.max_constant()]));
    let bound = max_value(&r1)
        .max(max_value(&r2))
        .max(fired_max.max().unwrap_or(0))
        + t.q.max_constant();
    let lhs: HashSet<Vec<u64>> = r1.dense().map(<[u64]>::to_vec).collect();
    let p1 = t.n1.place_names();
    let mut rhs = HashSet::new();
    for m2 in r2.dense() {
        let fixed: Valuation = t
            .n2
            .place_names()
            .iter()
            .zip(m2)
            .map(|(p, &x)| (p.clone(), x))
            .collect();
        extend_into(&t.q, &fixed, p1, bound, &mut rhs, lhs.len())?;
        if rhs.len() > lhs.len() {
            return Ok(false);
        }
    }
    for (q, fixed) in &t.fired {
        extend_into(q, fixed, p1, bound, &mut rhs, lhs.len())?;
        if rhs.len() > lhs.len() {
            return Ok(false);
        }
    }
    Ok(lhs == rhs)
}

type Named = BTreeMap<String, u64>;

fn named(net: &Net, rs: &ReachabilitySet) -> Vec<Named> {
    rs.dense()
        .map(|m| {
            net.place_names()
                .iter()
                .zip(m)
                .filter(|(_, &x)| x > 0)
                .map(|(p, &x)| (p.clone(), x))
                .collect()
        })
        .collect()
}

fn rhs_value(c: &LinearConstraint, m: &Named) -> i64 {
    c.rhs_terms
        .iter()
        .map(|(v, k)| k * m.get(v).copied().unwrap_or(0) as i64)
        .sum::<i64>()
        + c.rhs_const
}

/// Checks the marking relation a single step claims between `before` and
/// `after`, by building both state spaces.
pub fn check_step(
    before: &Net,
    step: &ReductionStep,
    after: &Net,
    limits: &ExploreLimits,
) -> Result<bool, VerifyError> {
    let rb = named(before, &explore(before, limits)?);
    let ra = named(after, &explore(after, limits)?);
    let after_set: HashSet<&Named> = ra.iter().collect();
    let malformed = || VerifyError::Malformed(step.to_string());
    Ok(match step.kind {
        RuleKind::T | RuleKind::D => {
            let before_set: HashSet<&Named> = rb.iter().collect();
            before_set == after_set
        }
        RuleKind::R => {
            let c = step.constraint.as_ref().ok_or_else(malformed)?;
            let p = step.removed_places.first().ok_or_else(malformed)?;
            let [(lhs, k)] = c.lhs.as_slice() else {
                return Err(malformed());
            };
            if lhs != p || *k <= 0 {
                return Err(malformed());
            }
            let before_set: HashSet<&Named> = rb.iter().collect();
            rb.len() == ra.len()
                && ra.iter().all(|m| {
                    let v = rhs_value(c, m);
                    if v < 0 || v % k != 0 {
                        return false;
                    }
                    let mut ext = m.clone();
                    if v > 0 {
                        ext.insert(p.clone(), (v / k) as u64);
                    }
                    before_set.contains(&ext)
                })
        }
        RuleKind::A => {
            let a = step.introduced_place.as_ref().ok_or_else(malformed)?;
            let parts = &step.removed_places;
            let collapsed_ok = rb.iter().all(|m| {
                let mut c: Named = m
                    .iter()
                    .filter(|(p, _)| !parts.contains(p))
                    .map(|(p, x)| (p.clone(), *x))
                    .collect();
                let sum: u64 = parts.iter().map(|p| m.get(p).copied().unwrap_or(0)).sum();
                if sum > 0 {
                    c.insert(a.clone(), sum);
                }
                after_set.contains(&c)
            });
            let mut splits = BigUint::zero();
            for m in &ra {
                splits += nos(parts.len() as u64, m.get(a).copied().unwrap_or(0)).map_err(|_| malformed())?;
            }
            collapsed_ok && BigUint::from(rb.len()) == splits
        }
        RuleKind::L => {
            let c = step.constraint.as_ref().ok_or_else(malformed)?;
            let p = step.removed_places.first().ok_or_else(malformed)?;
            let k = c.rhs_const;
            rb.iter().all(|m| {
                let mut r = m.clone();
                let v = r.remove(p).unwrap_or(0) as i64;
                v <= k && after_set.contains(&r)
            }) && BigInt::from(rb.len()) == BigInt::from(k + 1) * BigInt::from(ra.len())
        }
        RuleKind::F => {
            let m0: Named = step
                .fired_from
                .as_deref()
                .ok_or_else(malformed)?
                .iter()
                .filter(|(_, x)| *x > 0)
                .cloned()
                .collect();
            let before_set: HashSet<&Named> = rb.iter().collect();
            let mut expected = after_set.clone();
            !after_set.contains(&m0) && expected.insert(&m0) && expected == before_set
        }
    })
}

/// Replays `trace` and checks every step; `Ok(Some(i))` names the first step
/// whose relation fails.
pub fn check_trace_steps(trace: &ReductionTrace, limits: &ExploreLimits) -> Result<Option<usize>, VerifyError> {
    let nets = replay(&trace.initial_net, &trace.steps)?;
    for (i, s) in trace.steps.iter().enumerate() {
        if !check_step(&nets[i], s, &nets[i + 1], limits)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

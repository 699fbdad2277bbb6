//! Counting reachable markings from a reduction trace.
//!
//! The constraints of a trace are turned into a [`CountTerm`]: products of
//! stars-and-bars factors `nos(k, x)` under nested bounded sums, one per
//! place whose value the rest of the system needs. The term is expanded to a
//! [`CountPolynomial`] when possible, then evaluated at every reachable
//! marking of the residual net.

mod poly;
mod term;

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::explore::{reachability_set, ExploreLimits, StopReason};
use crate::linear::LinearError;
use crate::net::Net;
use crate::reduce::{reduce, replay, ReduceError, ReductionLimits, ReductionTrace, RuleKind, Strategy};

pub use poly::{scientific, CountPolynomial};
pub use term::{build_count_term, build_term, CountTerm, Expr, LinExpr, Param, PolyLimits, Symbol, Values};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("nos(k, x) needs at least one slot")]
    NoSlots,
    #[error(
        "residual net exploration incomplete after {explored} markings ({reason}); \
         trace has {trace_len} steps, residual net has {residual_places} places"
    )]
    Exploration {
        explored: usize,
        reason: StopReason,
        trace_len: usize,
        residual_places: usize,
    },
    #[error("summation bound {0} is too large to enumerate")]
    RangeTooLarge(String),
    #[error("count {0} at a residual marking is not a natural number")]
    NotNatural(String),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// `C(x+k-1, k-1)`: the ways to distribute `x` tokens over `k` places.
pub fn nos(k: u64, x: u64) -> Result<BigUint, CountError> {
    if k == 0 {
        return Err(CountError::NoSlots);
    }
    Ok(nos_big(k, &BigInt::from(x)).to_biguint().expect("binomials are non-negative"))
}

pub(crate) fn nos_big(k: u64, x: &BigInt) -> BigInt {
    if x.is_negative() {
        return BigInt::zero();
    }
    // C(x+k-1, k-1) = Π_{i=1}^{k-1} (x+i)/i, exact at every step
    let mut acc = BigInt::one();
    for i in 1..k {
        acc = acc * (x + BigInt::from(i)) / BigInt::from(i);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountOptions {
    pub explore: ExploreLimits,
    pub poly: PolyLimits,
    /// Expand the term into a polynomial before evaluating it.
    pub polynomial: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            explore: ExploreLimits::default(),
            poly: PolyLimits::default(),
            polynomial: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CountReport {
    pub count: BigUint,
    pub trace: ReductionTrace,
    pub term: CountTerm,
    pub polynomial: Option<CountPolynomial>,
    pub residual_markings: usize,
    /// Markings accounted for by fire-once steps.
    pub fire_once_count: BigUint,
    pub elapsed: Duration,
}

impl CountReport {
    pub fn places(&self) -> usize {
        self.trace.initial_net.num_places()
    }

    pub fn transitions(&self) -> usize {
        self.trace.initial_net.num_transitions()
    }

    pub fn trace_len(&self) -> usize {
        self.trace.steps.len()
    }

    pub fn residual_places(&self) -> usize {
        self.trace.residual_net.num_places()
    }

    pub fn scientific(&self) -> String {
        scientific(&self.count)
    }
}

/// Reduces `net` and counts its reachable markings.
pub fn count_markings(
    net: &Net,
    strategy: Strategy,
    limits: &ReductionLimits,
    options: &CountOptions,
) -> Result<CountReport, CountError> {
    let start = Instant::now();
    let trace = reduce(net, strategy, limits);
    let mut report = count_trace(trace, options)?;
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Evaluates a term (or its polynomial) at one residual marking.
struct Evaluator<'a> {
    term: &'a CountTerm,
    poly: Option<(&'a CountPolynomial, Vec<Symbol>)>,
}

impl Evaluator<'_> {
    fn at(&self, marking: &[u64]) -> Result<BigUint, CountError> {
        match &self.poly {
            Some((p, sources)) => {
                let point: Vec<BigInt> = sources
                    .iter()
                    .map(|s| match *s {
                        Symbol::Place(i) => BigInt::from(marking[i]),
                        Symbol::Param(i) => BigInt::from(self.term.params[i].value),
                        Symbol::Bound(_) => unreachable!("summation indices are eliminated"),
                    })
                    .collect();
                p.eval_natural(&point)
                    .ok_or_else(|| CountError::NotNatural(p.eval(&point).to_string()))
            }
            None => self.term.eval(marking),
        }
    }
}

/// Counts the markings of `trace.initial_net` from an existing trace.
///
/// The residual net is explored explicitly; each of its markings stands for
/// the markings of the initial net counted by the trace's term. Every
/// fire-once step adds the markings its pre-firing initial marking stands for.
pub fn count_trace(trace: ReductionTrace, options: &CountOptions) -> Result<CountReport, CountError> {
    let start = Instant::now();
    let term = build_count_term(&trace);
    let polynomial = if options.polynomial {
        term.to_polynomial(&options.poly)
    } else {
        None
    };
    let rs = reachability_set(&trace.residual_net, &options.explore);
    if !rs.complete {
        return Err(CountError::Exploration {
            explored: rs.len(),
            reason: rs.stop_reason.expect("incomplete sets record a reason"),
            trace_len: trace.steps.len(),
            residual_places: trace.residual_net.num_places(),
        });
    }
    let eval = Evaluator {
        term: &term,
        poly: polynomial.as_ref().map(|p| (p, term.poly_sources(p))),
    };
    let markings: Vec<&[u64]> = rs.dense().collect();
    let residual_sum = markings
        .par_iter()
        .map(|m| eval.at(m))
        .try_reduce(BigUint::zero, |a, b| Ok(a + b))?;
    let fire_once_count = fire_once_count(&trace)?;
    Ok(CountReport {
        count: residual_sum + &fire_once_count,
        residual_markings: rs.len(),
        fire_once_count,
        trace,
        term,
        polynomial,
        elapsed: start.elapsed(),
    })
}

fn fire_once_count(trace: &ReductionTrace) -> Result<BigUint, CountError> {
    if !trace.steps.iter().any(|s| s.kind == RuleKind::F) {
        return Ok(BigUint::zero());
    }
    let nets = replay(&trace.initial_net, &trace.steps)?;
    let mut total = BigUint::zero();
    for (j, s) in trace.steps.iter().enumerate() {
        if s.kind != RuleKind::F {
            continue;
        }
        let places = nets[j].place_names();
        let before = s.fired_from.as_deref().unwrap_or_default();
        let marking: Vec<u64> = places
            .iter()
            .map(|p| before.iter().find(|(q, _)| q == p).map_or(0, |(_, k)| *k))
            .collect();
        total += build_term(&trace.steps[..j], places).eval(&marking)?;
    }
    Ok(total)
}

/// Total count for a fully reduced trace with its parameters set to `params`.
pub fn eval_params(term: &CountTerm, params: &[u64]) -> Result<BigUint, CountError> {
    let ps: Vec<BigInt> = params.iter().map(|&x| BigInt::from(x)).collect();
    term.eval_with(&[], &ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::count_reachable;
    use crate::parser::parse_net;

    fn binom(n: u64, k: u64) -> BigUint {
        let mut acc = BigUint::one();
        for i in 0..k {
            acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        acc
    }

    #[test]
    fn nos_small_values() {
        for x in 0..=10u64 {
            assert_eq!(nos(2, x).unwrap(), BigUint::from(x + 1));
            assert_eq!(nos(3, x).unwrap(), BigUint::from((x + 2) * (x + 1) / 2));
        }
        assert_eq!(nos(3, 4).unwrap(), BigUint::from(15u32));
        assert_eq!(nos(1, 7).unwrap(), BigUint::one());
        assert_eq!(nos(0, 7), Err(CountError::NoSlots));
        for k in 1..7 {
            for x in 0..20 {
                assert_eq!(nos(k, x).unwrap(), binom(x + k - 1, k - 1));
            }
        }
    }

    fn total(text: &str) -> BigUint {
        let net = parse_net(text).unwrap();
        count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default())
            .unwrap()
            .count
    }

    fn reachable(text: &str) -> BigUint {
        count_reachable(&parse_net(text).unwrap(), &ExploreLimits::default()).unwrap()
    }

    #[test]
    fn small_nets_match_exploration() {
        for text in [
            "pl p (3)",
            "pl p (3)\ntr t p -> q",
            "pl a (2)\ntr t0 a -> b\ntr t1 b -> c\ntr t2 c -> a",
            "pl p (5)\ntr t p ->",
            "pl s (1)\ntr t s -> a b\ntr u a -> c\ntr v b c -> d",
            "pl p (2)\npl c (1)\ntr t p c -> q c\ntr u q -> p",
            "pl p (4)\ntr t p*2 -> q\ntr u q -> p*2",
        ] {
            assert_eq!(total(text), reachable(text), "{text}");
        }
    }

    #[test]
    fn ring_of_three_is_six() {
        assert_eq!(total("pl a (2)\ntr t0 a -> b\ntr t1 b -> c\ntr t2 c -> a"), BigUint::from(6u32));
    }

    #[test]
    fn chain_polynomial_is_n_plus_one() {
        let net = parse_net("pl p (7)\ntr t p -> q").unwrap();
        let r = count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default()).unwrap();
        assert_eq!(r.polynomial.unwrap().to_string(), "n + 1");
        assert_eq!(r.count, BigUint::from(8u32));
    }

    #[test]
    fn exploration_limit_is_an_error() {
        let net = parse_net("pl p (1)\npl q (1)\ntr t p -> p q\ntr u q -> p").unwrap();
        let opts = CountOptions {
            explore: ExploreLimits::with_max_markings(50),
            ..CountOptions::default()
        };
        let err = count_markings(&net, Strategy::Clean, &ReductionLimits::default(), &opts).unwrap_err();
        assert!(matches!(err, CountError::Exploration { .. }), "{err}");
    }
}

mod common;

use std::str::FromStr;

use netcount::count::{CountOptions, CountPolynomial};
use netcount::reduce::RuleKind;
use netcount::{count_markings, count_reachable, ExploreLimits, ReductionLimits, Strategy};
use num_bigint::BigInt;
use num_rational::BigRational;

fn published() -> CountPolynomial {
    let text = std::fs::read_to_string(format!("{}/../../fixtures/house_polynomial.txt", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let coeffs: Vec<BigRational> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| BigRational::from_str(l.trim()).unwrap())
        .collect();
    CountPolynomial::univariate("n", &coeffs)
}

#[test]
fn small_houses_match_exploration_and_polynomial() {
    let poly = published();
    for n in 0..=4 {
        let net = common::house(n);
        let explored = count_reachable(&net, &ExploreLimits::default()).unwrap();
        let r = count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default()).unwrap();
        assert_eq!(r.count, explored, "n = {n}");
        assert_eq!(poly.eval_u64(&[n]), BigRational::from(BigInt::from(explored)), "n = {n}");
    }
}

#[test]
fn house_reduces_completely() {
    let r = count_markings(&common::house(10), Strategy::Compact, &ReductionLimits::default(), &CountOptions::default()).unwrap();
    assert_eq!(r.residual_places(), 0);
    assert_eq!(r.trace.residual_net.num_transitions(), 0);
    assert_eq!(r.count.to_string(), "1663565805");
    assert_eq!(r.scientific(), "1.66e9");
    let last = r.trace.steps.last().unwrap();
    assert_eq!(last.kind, RuleKind::L);
    assert_eq!(last.constraint.as_ref().unwrap().rhs_const, 10);
    assert_eq!(r.polynomial.unwrap().degree(), 18);
}

#[test]
fn clean_strategy_leaves_a_residual_net() {
    let net = common::house(2);
    let r = count_markings(&net, Strategy::Clean, &ReductionLimits::default(), &CountOptions::default()).unwrap();
    assert!(r.residual_places() > 0);
    assert_eq!(r.count, count_reachable(&net, &ExploreLimits::default()).unwrap());
}

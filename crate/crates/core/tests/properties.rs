mod common;

use netcount::count::{build_count_term, count_trace, CountOptions, PolyLimits};
use netcount::linear::{count_solutions, Valuation};
use netcount::parser::{parse_net, parse_trace, serialize_net, serialize_trace};
use netcount::reduce::{replay, CandidateOrder, RuleKind};
use netcount::{count_markings, count_reachable, reachability_set, reduce, ExploreLimits, ReductionLimits, Strategy};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn limits(seed: Option<u64>) -> ReductionLimits {
    ReductionLimits {
        order: seed.map_or(CandidateOrder::Declaration, CandidateOrder::Shuffled),
        ..ReductionLimits::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_equals_exploration(seed in any::<u64>(), order in proptest::option::of(any::<u64>())) {
        let net = common::random_net(seed);
        let want = count_reachable(&net, &ExploreLimits::default()).unwrap();
        for strategy in [Strategy::Compact, Strategy::Clean] {
            let got = count_markings(&net, strategy, &limits(order), &CountOptions::default()).unwrap();
            prop_assert_eq!(&got.count, &want, "{:?}\n{}", strategy, serialize_trace(&got.trace));
        }
    }

    #[test]
    fn polynomial_and_term_agree(seed in any::<u64>()) {
        let net = common::random_net(seed);
        let trace = reduce(&net, Strategy::Compact, &ReductionLimits::default());
        let with = count_trace(trace.clone(), &CountOptions::default()).unwrap();
        let without = count_trace(trace, &CountOptions { polynomial: false, ..CountOptions::default() }).unwrap();
        prop_assert_eq!(with.count, without.count);
    }

    #[test]
    fn term_matches_solution_count(seed in any::<u64>()) {
        let net = common::random_net(seed);
        let trace = reduce(&net, Strategy::Compact, &ReductionLimits::default());
        prop_assume!(!trace.steps.iter().any(|s| s.kind == RuleKind::F));
        let term = build_count_term(&trace);
        let system = trace.system();
        let residual = &trace.residual_net;
        let rs = reachability_set(residual, &ExploreLimits::default());
        for m in rs.dense() {
            let fixed: Valuation = residual
                .place_names()
                .iter()
                .zip(m)
                .filter(|(p, _)| system.contains_var(p))
                .map(|(p, &k)| (p.clone(), k))
                .collect();
            let oracle = count_solutions(&system, &fixed).unwrap();
            prop_assert_eq!(term.eval(m).unwrap(), oracle, "at {:?}\n{}", m, system);
        }
    }

    #[test]
    fn polynomial_matches_term_off_the_reachable_set(seed in any::<u64>(), point in proptest::collection::vec(0u64..40, 8)) {
        let net = common::random_net(seed);
        let trace = reduce(&net, Strategy::Compact, &ReductionLimits::default());
        let term = build_count_term(&trace);
        let Some(poly) = term.to_polynomial(&PolyLimits::default()) else { return Ok(()) };
        let places: Vec<BigInt> = (0..trace.residual_net.num_places()).map(|i| BigInt::from(point[i % point.len()])).collect();
        let params: Vec<BigInt> = term.param_values().into_iter().map(BigInt::from).collect();
        let direct = term.eval_with(&places, &params).unwrap();
        let sources = term.poly_sources(&poly);
        let at: Vec<BigInt> = sources
            .iter()
            .map(|s| match *s {
                netcount::count::Symbol::Place(i) => places[i].clone(),
                netcount::count::Symbol::Param(i) => params[i].clone(),
                netcount::count::Symbol::Bound(_) => unreachable!(),
            })
            .collect();
        prop_assert_eq!(poly.eval(&at), BigRational::from(BigInt::from(direct)));
    }

    #[test]
    fn net_text_round_trips(seed in any::<u64>()) {
        let net = common::random_net(seed);
        let back = parse_net(&serialize_net(&net)).unwrap();
        prop_assert_eq!(back.place_names(), net.place_names());
        prop_assert_eq!(back.transition_names(), net.transition_names());
        prop_assert_eq!(serialize_net(&back), serialize_net(&net));
    }

    #[test]
    fn trace_text_round_trips(seed in any::<u64>()) {
        let net = common::random_net(seed);
        let trace = reduce(&net, Strategy::Compact, &ReductionLimits::default());
        let text = serialize_trace(&trace);
        let steps = parse_trace(&text).unwrap();
        prop_assert_eq!(steps.len(), trace.steps.len());
        let again: String = steps.iter().map(|s| format!("{s}\n")).collect();
        prop_assert_eq!(again, text);
    }

    #[test]
    fn replay_reaches_the_residual_net(seed in any::<u64>()) {
        let net = common::random_net(seed);
        let trace = reduce(&net, Strategy::Compact, &ReductionLimits::default());
        let nets = replay(&net, &trace.steps).unwrap();
        prop_assert_eq!(serialize_net(nets.last().unwrap()), serialize_net(&trace.residual_net));
    }
}

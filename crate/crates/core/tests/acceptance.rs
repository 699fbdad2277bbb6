//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::str::FromStr;
use std::time::{Duration, Instant};

use netcount::count::{build_term, eval_params, nos, CountOptions, CountPolynomial, PolyLimits};
use netcount::explore::count_reachable;
use netcount::linear::{count_solutions, Valuation};
use netcount::parser::{parse_constraint, parse_net, parse_trace};
use netcount::reduce::{find_source_sink, replay, CandidateOrder};
use netcount::verify::check_trace_steps;
use netcount::{count_markings, ExploreLimits, LinSystem, ReductionLimits, ReductionStep, Strategy};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn system(lines: &[&str]) -> LinSystem {
    LinSystem::from_constraints(lines.iter().map(|l| parse_constraint(l).unwrap()))
}

fn house_coefficients() -> Vec<BigRational> {
    let text = std::fs::read_to_string(format!(
        "{}/../../fixtures/house_polynomial.txt",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| BigRational::from_str(l.trim()).unwrap())
        .collect()
}

fn small_binomials() -> Outcome {
    for x in 0..=30u64 {
        let two = nos(2, x).map_err(|e| e.to_string())?;
        let three = nos(3, x).map_err(|e| e.to_string())?;
        ensure(two == BigUint::from(x + 1), || format!("nos(2, {x}) = {two}"))?;
        ensure(three == BigUint::from((x + 2) * (x + 1) / 2), || format!("nos(3, {x}) = {three}"))?;
    }
    Ok(())
}

const SUBSYSTEM_TRACE: &str = "\
R |- p19 = p20
A |- a4 = p21 + p18
A |- a5 = p22 + p20
R |- a4 = a5 + p23
R |- p27 = p23 + p26
A |- a11 = p23 + a5
A |- a13 = a11 + p26
";

fn subsystem_polynomial() -> Outcome {
    let steps = parse_trace(SUBSYSTEM_TRACE).unwrap();
    let term = build_term(&steps, &["a13".to_string()]);
    let poly = term
        .to_polynomial(&PolyLimits::default())
        .ok_or("term has no polynomial form")?;
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let want = vec![q(1, 1), q(31, 12), q(19, 8), q(11, 12), q(1, 8)];
    let got = poly.univariate_coefficients().ok_or("not univariate")?;
    ensure(got == want, || format!("coefficients {got:?}"))?;

    let full = system(&[
        "p19 = p20",
        "p27 = p23 + p26",
        "a4 = p21 + p18",
        "a11 = p23 + a5",
        "a5 = p22 + p20",
        "a13 = a11 + p26",
        "a4 = a5 + p23",
    ]);
    let simplified = system(&[
        "a4 = p21 + p18",
        "a11 = p23 + p22 + p20",
        "a4 = a11",
        "a13 = a11 + p26",
    ]);
    for n in 0..=10u64 {
        let fixed = Valuation::from([("a13".to_string(), n)]);
        let at = poly.eval_u64(&[n]);
        for (label, s) in [("full", &full), ("simplified", &simplified)] {
            let oracle = count_solutions(s, &fixed).map_err(|e| e.to_string())?;
            ensure(at == BigRational::from(BigInt::from(oracle.clone())), || {
                format!("a13 = {n}: polynomial {at}, {label} system {oracle}")
            })?;
        }
    }
    Ok(())
}

fn house_polynomial() -> Outcome {
    let want = house_coefficients();
    ensure(want.len() == 19, || format!("{} fixture coefficients", want.len()))?;
    let at_ten = CountPolynomial::univariate("n", &want).eval_u64(&[10]);

    let printed = system(&[
        "p19 = p20",
        "p4 = p6 + p15 + p11 + p7",
        "p12 = p10 + p8",
        "p9 + p5 = p6 + p8",
        "p13 = p10 + p9",
        "p21 + p18 = p22 + p20 + p23",
        "p27 = p23 + p26",
        "p25 + p16 + p15 + p11 + p7 = p26 + p23 + p22 + p20 + p17 + p14 + p10 + p8",
        "p26 + p23 + p22 + p20 + p17 + p14 + p10 + p8 + p6 + p3 + p2 + p1 <= 10",
    ]);
    let oracle = count_solutions(&printed, &Valuation::new()).map_err(|e| e.to_string())?;
    ensure(at_ten == BigRational::from(BigInt::from(oracle.clone())), || {
        format!("polynomial at 10 is {at_ten}, constraint system has {oracle} solutions")
    })?;
    ensure(oracle == BigUint::from(1_663_565_805u64), || format!("count {oracle}"))?;

    let published_steps = parse_trace(
        &std::fs::read_to_string(format!("{}/../../fixtures/house_published.trace", env!("CARGO_MANIFEST_DIR")))
            .unwrap(),
    )
    .unwrap();
    let from_trace = build_term(&published_steps, &[])
        .to_polynomial(&PolyLimits::default())
        .and_then(|p| p.univariate_coefficients())
        .ok_or("published trace has no univariate polynomial")?;
    ensure(from_trace == want, || "published trace polynomial differs".into())?;

    let report = count_markings(
        &common::fixture("house.net"),
        Strategy::Compact,
        &ReductionLimits::default(),
        &CountOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let ours = report
        .polynomial
        .as_ref()
        .and_then(|p| p.univariate_coefficients())
        .ok_or("house reduction has no univariate polynomial")?;
    ensure(ours == want, || "house reduction polynomial differs".into())?;
    ensure(report.count == oracle, || format!("house count {}", report.count))
}

fn corpus_counts() -> Outcome {
    let corpus = common::corpus();
    ensure(corpus.len() >= 25, || format!("only {} nets", corpus.len()))?;
    for (name, net) in &corpus {
        let want = count_reachable(net, &ExploreLimits::default()).map_err(|e| format!("{name}: {e}"))?;
        let got = count_markings(net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default())
            .map_err(|e| format!("{name}: {e}"))?
            .count;
        ensure(got == want, || format!("{name}: counted {got}, explored {want}"))?;
    }
    Ok(())
}

fn step_checks() -> Outcome {
    for (name, net) in common::corpus() {
        let trace = netcount::reduce(&net, Strategy::Compact, &ReductionLimits::default());
        match check_trace_steps(&trace, &ExploreLimits::default()).map_err(|e| format!("{name}: {e}"))? {
            None => {}
            Some(i) => return Err(format!("{name}: step {i} `{}` fails", trace.steps[i])),
        }
    }
    Ok(())
}

fn seed_independence() -> Outcome {
    let nets = [common::house(3), common::random_net(3), common::random_net(7)];
    for net in &nets {
        let mut counts = Vec::new();
        for seed in 0..10 {
            let limits = ReductionLimits {
                order: CandidateOrder::Shuffled(seed),
                ..ReductionLimits::default()
            };
            let r = count_markings(net, Strategy::Compact, &limits, &CountOptions::default())
                .map_err(|e| e.to_string())?;
            counts.push(r.count);
        }
        ensure(counts.windows(2).all(|w| w[0] == w[1]), || format!("{}: {counts:?}", net.name()))?;
    }
    Ok(())
}

fn source_sink_multiplier() -> Outcome {
    for k in [0u64, 1, 5, 10] {
        let net = parse_net(&format!("pl p ({k})\npl a (1)\ntr t p ->\ntr u a -> b\ntr v b -> a")).unwrap();
        let (p, t) = find_source_sink(&net).ok_or_else(|| format!("k = {k}: no source-sink pair"))?;
        ensure(net.place_name(p) == "p" && net.transition_name(t) == "t", || format!("k = {k}: wrong pair"))?;
        let step = ReductionStep::source_sink("p", k, Some("t"));
        let nets = replay(&net, std::slice::from_ref(&step)).map_err(|e| e.to_string())?;
        let before = count_reachable(&nets[0], &ExploreLimits::default()).map_err(|e| e.to_string())?;
        let after = count_reachable(&nets[1], &ExploreLimits::default()).map_err(|e| e.to_string())?;
        ensure(before == after.clone() * (k + 1), || format!("k = {k}: {before} vs {after} * {}", k + 1))?;
        let total = count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default())
            .map_err(|e| e.to_string())?
            .count;
        ensure(total == before, || format!("k = {k}: counted {total}, explored {before}"))?;
    }
    Ok(())
}

fn chain_polynomial() -> Outcome {
    let net = parse_net("pl p (4)\ntr t p -> q").unwrap();
    let r = count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default())
        .map_err(|e| e.to_string())?;
    let poly = r.polynomial.ok_or("no polynomial")?;
    ensure(poly.to_string() == "n + 1", || format!("polynomial `{poly}`"))?;
    let n = 1_000_000_000_000u64;
    let mut best = Duration::MAX;
    let mut value = BigRational::from(BigInt::from(0));
    for _ in 0..5 {
        let t = Instant::now();
        value = poly.eval_u64(&[n]);
        best = best.min(t.elapsed());
    }
    ensure(value == BigRational::from(BigInt::from(n + 1)), || format!("value {value}"))?;
    ensure(best < Duration::from_millis(1), || format!("evaluation took {best:?}"))?;
    let via_term = eval_params(&r.term, &[n]).map_err(|e| e.to_string())?;
    ensure(via_term == BigUint::from(n + 1), || format!("term gives {via_term}"))
}

fn main() {
    let criteria: &[Criterion] = &[
        ("small binomials", small_binomials),
        ("subsystem polynomial", subsystem_polynomial),
        ("house polynomial", house_polynomial),
        ("corpus counts match exploration", corpus_counts),
        ("every corpus step holds", step_checks),
        ("candidate order does not change counts", seed_independence),
        ("source-sink multiplier", source_sink_multiplier),
        ("chain polynomial", chain_polynomial),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(()) => println!("PASS {name} ({:.2?})", t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} ({:.2?}): {msg}", t.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

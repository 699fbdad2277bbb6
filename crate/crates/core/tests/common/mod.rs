#![allow(dead_code)]

use netcount::{parse_net, read_net, Net, NetBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small bounded nets, each exercising at least one rule.
pub const HAND_BUILT: &[(&str, &str)] = &[
    ("empty", ""),
    ("constant", "pl p (3)"),
    ("chain", "pl p (3)\ntr t p -> q\ntr u q -> r"),
    ("ring", "pl a (2)\ntr t0 a -> b\ntr t1 b -> c\ntr t2 c -> a"),
    ("ping_pong", "pl p (3)\ntr t p -> q\ntr u q -> p"),
    ("identity", "pl p (2)\ntr t p -> q\ntr i q -> q\ntr u q -> p"),
    ("duplicate_transitions", "pl p (2)\ntr t p -> q\ntr t2 p -> q\ntr u q -> r"),
    ("sequence_shortcut", "pl a (2)\ntr u a -> b\ntr v b -> c\ntr t a -> c\ntr w c -> a"),
    ("constant_place", "pl p (2)\npl c (1)\ntr t p c -> q c\ntr u q -> p"),
    ("duplicate_place", "pl a (2)\ntr t a -> b c\ntr u b c -> a"),
    (
        "sum_place",
        "pl p (1)\npl q (1)\npl s (2)\ntr t p s -> r\ntr u q s -> r\ntr v r r -> p q s s",
    ),
    ("weighted_place", "pl p (2)\ntr t p -> q*2\ntr u q*2 -> p"),
    ("weighted_arcs", "pl p (4)\ntr t p*2 -> q\ntr u q -> p*2"),
    ("source_sink", "pl p (5)\npl r (1)\ntr t p ->\ntr u r -> s"),
    ("fire_once", "pl s (1)\ntr t s -> a b\ntr u a -> c\ntr v b c -> d"),
    ("dead", "pl p (1)\ntr t p*2 -> q\ntr u p -> r"),
    ("irreducible", "pl p (1)\npl q (1)\npl r\npl s\ntr t p -> r\ntr u q -> s\ntr v r s -> p q"),
    (
        "mutex",
        "pl i1 (1)\npl i2 (1)\npl m (1)\ntr e1 i1 m -> c1\ntr x1 c1 -> i1 m\ntr e2 i2 m -> c2\ntr x2 c2 -> i2 m",
    ),
    ("buffer", "pl ready (1)\npl free (3)\ntr prod ready free -> full ready\ntr cons full -> free"),
    ("fork_join", "pl s (3)\ntr f s -> a b\ntr j a b -> s"),
    (
        "shared_rings",
        "pl a (2)\npl x (1)\ntr t0 a -> b\ntr t1 b -> a\ntr t2 x a -> y b\ntr t3 y -> x",
    ),
    (
        "philosophers",
        "pl f1 (1)\npl f2 (1)\npl h1 (1)\npl h2 (1)\n\
         tr l1 h1 f1 -> w1\ntr r1 w1 f2 -> e1\ntr d1 e1 -> h1 f1 f2\n\
         tr l2 h2 f2 -> w2\ntr r2 w2 f1 -> e2\ntr d2 e2 -> h2 f1 f2",
    ),
    ("drain_pair", "pl p (2)\npl q (1)\ntr t p q -> r\ntr u r -> q\ntr v r ->"),
];

pub fn fixture(name: &str) -> Net {
    read_net(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// The house construction net with `n` houses.
pub fn house(n: u64) -> Net {
    let text = netcount::parser::serialize_net(&fixture("house.net"));
    parse_net(&text.replace("pl p1 (10)", &format!("pl p1 ({n})"))).unwrap()
}

/// A random net that never creates tokens: every transition outputs at most
/// as many as it consumes, so it stays small and bounded.
pub fn random_net(seed: u64) -> Net {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let places = rng.gen_range(3..=6);
    let name = |i: usize| format!("p{i}");
    let mut b = NetBuilder::new(format!("random{seed}"));
    let marked = rng.gen_range(1..=3);
    for i in 0..places {
        let tokens = if i < marked { rng.gen_range(1..=3) } else { 0 };
        b.add_place(&name(i), tokens).unwrap();
    }
    for t in 0..rng.gen_range(2..=6) {
        let mut pre: Vec<(String, u64)> = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            pre.push((name(rng.gen_range(0..places)), if rng.gen_bool(0.15) { 2 } else { 1 }));
        }
        let consumed: u64 = pre.iter().map(|(_, w)| w).sum();
        let mut post: Vec<(String, u64)> = Vec::new();
        let produced = if rng.gen_bool(0.8) { consumed } else { rng.gen_range(0..consumed) };
        for _ in 0..produced {
            post.push((name(rng.gen_range(0..places)), 1));
        }
        let pre: Vec<(&str, u64)> = pre.iter().map(|(p, w)| (p.as_str(), *w)).collect();
        let post: Vec<(&str, u64)> = post.iter().map(|(p, w)| (p.as_str(), *w)).collect();
        b.add_transition(&format!("t{t}"), &pre, &post).unwrap();
    }
    b.build()
}

/// Hand-built nets, the house net with two houses and twelve random nets.
pub fn corpus() -> Vec<(String, Net)> {
    let mut out: Vec<(String, Net)> = HAND_BUILT
        .iter()
        .map(|(n, text)| (n.to_string(), parse_net(text).unwrap()))
        .collect();
    out.push(("house2".into(), house(2)));
    for seed in 0..12 {
        out.push((format!("random{seed}"), random_net(seed)));
    }
    out
}

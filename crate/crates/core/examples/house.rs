//! Prints the trace, count, polynomial and count term of a net file.
//!
//! `cargo run --example house [path]`, defaulting to the house fixture.

use netcount::count::{count_markings, CountOptions};
use netcount::reduce::{ReductionLimits, Strategy};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/house.net").to_string());
    let net = netcount::read_net(&path).unwrap();
    let r = count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &CountOptions::default()).unwrap();
    for s in &r.trace.steps {
        println!("{s}");
    }
    println!("count: {}", r.count);
    match &r.polynomial {
        Some(p) => println!("polynomial: {p}"),
        None => println!("polynomial: none"),
    }
    println!("term: {}", r.term.display());
    println!("time: {:?}", r.elapsed);
}

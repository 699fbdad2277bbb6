//! Structural reductions and the traces they leave behind.
//!
//! Six rules shrink a net while recording how markings of the smaller net
//! relate to markings of the larger one:
//!
//! | kind | effect | recorded |
//! |------|--------|----------|
//! | `T`  | drop a transition whose effect another sequence reproduces | nothing |
//! | `R`  | drop a place whose marking follows from others | `k.p = Σ v.q + b` |
//! | `A`  | merge places into a fresh one (chains, loops) | `a = Σ p` |
//! | `L`  | drop a source place feeding a lone sink transition | `p <= k` |
//! | `F`  | fire a transition that can only ever fire once | the initial marking |
//! | `D`  | drop a transition starved by an unrefillable place | nothing |
//!
//! [`reduce`] applies them to a fixpoint and returns a [`ReductionTrace`].

mod agglomerate;
mod extra;
mod ilp;
mod order;
mod places;
mod replay;
mod transitions;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::linear::{LinSystem, LinearConstraint};
use crate::net::{Marking, Net, NetError, PlaceId};

pub use agglomerate::{apply_agglomeration, find_chain_agglomeration, find_loop_agglomeration};
pub use extra::{find_dead_transitions, find_fire_once, find_source_sink};
pub use order::CandidateOrder;
pub use places::{find_redundant_place, RedundantPlaceCertificate};
pub use replay::replay;
pub use transitions::find_redundant_transition;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("name `{0}` is already used in the net")]
    NameCollision(String),
    #[error("agglomeration needs at least one place")]
    EmptyParts,
    #[error("step {step}: {message}")]
    Replay { step: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    T,
    R,
    A,
    L,
    F,
    D,
}

impl RuleKind {
    pub fn letter(self) -> char {
        match self {
            RuleKind::T => 'T',
            RuleKind::R => 'R',
            RuleKind::A => 'A',
            RuleKind::L => 'L',
            RuleKind::F => 'F',
            RuleKind::D => 'D',
        }
    }
}

/// One rule application. Places and transitions are referred to by name,
/// since indices shift as the net shrinks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub kind: RuleKind,
    pub constraint: Option<LinearConstraint>,
    pub removed_places: Vec<String>,
    pub removed_transitions: Vec<String>,
    pub introduced_place: Option<String>,
    /// Markings accounted for outside the residual net (`F` steps only).
    pub count_increment: u64,
    /// Initial marking just before an `F` step fired its transition.
    pub fired_from: Option<Vec<(String, u64)>>,
}

impl ReductionStep {
    fn bare(kind: RuleKind) -> Self {
        ReductionStep {
            kind,
            constraint: None,
            removed_places: Vec::new(),
            removed_transitions: Vec::new(),
            introduced_place: None,
            count_increment: 0,
            fired_from: None,
        }
    }

    /// A `T` or `D` step.
    pub fn transition_removal(kind: RuleKind, transition: &str) -> Self {
        debug_assert!(matches!(kind, RuleKind::T | RuleKind::D));
        let mut s = Self::bare(kind);
        s.removed_transitions.push(transition.to_string());
        s
    }

    pub fn redundant_place(constraint: LinearConstraint, place: String) -> Self {
        let mut s = Self::bare(RuleKind::R);
        s.constraint = Some(constraint);
        s.removed_places.push(place);
        s
    }

    pub fn agglomeration(fresh: String, parts: Vec<String>) -> Self {
        let mut s = Self::bare(RuleKind::A);
        s.constraint = Some(LinearConstraint::sum(&fresh, &parts));
        s.removed_places = parts;
        s.introduced_place = Some(fresh);
        s
    }

    pub fn source_sink(place: &str, bound: u64, transition: Option<&str>) -> Self {
        let mut s = Self::bare(RuleKind::L);
        s.constraint = Some(LinearConstraint::upper_bound(place, bound as i64));
        s.removed_places.push(place.to_string());
        s.removed_transitions.extend(transition.map(str::to_string));
        s
    }

    pub fn fire_once(transition: &str, marking: Vec<(String, u64)>) -> Self {
        let mut s = Self::bare(RuleKind::F);
        s.removed_transitions.push(transition.to_string());
        s.count_increment = 1;
        s.fired_from = Some(marking);
        s
    }

    /// For `R` steps: the coefficient of the removed place.
    pub fn place_coefficient(&self) -> Option<i64> {
        match (&self.kind, &self.constraint) {
            (RuleKind::R, Some(c)) => c.lhs.first().map(|(_, k)| *k),
            _ => None,
        }
    }
}

impl fmt::Display for ReductionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- ", self.kind.letter())?;
        match self.kind {
            RuleKind::T | RuleKind::D => write!(f, "{} removed", self.removed_transitions.join(" ")),
            RuleKind::F => {
                let m: Vec<String> = self
                    .fired_from
                    .iter()
                    .flatten()
                    .map(|(p, k)| format!("{p}:{k}"))
                    .collect();
                write!(
                    f,
                    "{} fired at {{{}}}",
                    self.removed_transitions.join(" "),
                    m.join(", ")
                )
            }
            _ => match &self.constraint {
                Some(c) => write!(f, "{c}"),
                None => Ok(()),
            },
        }
    }
}

/// The input net, the steps applied to it and the net they lead to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionTrace {
    pub initial_net: Net,
    pub steps: Vec<ReductionStep>,
    pub residual_net: Net,
}

impl ReductionTrace {
    /// All recorded constraints, in application order.
    pub fn system(&self) -> LinSystem {
        prefix_system(&self.steps)
    }

    pub fn count_increments(&self) -> u64 {
        self.steps.iter().map(|s| s.count_increment).sum()
    }

    pub fn is_totally_reduced(&self) -> bool {
        self.residual_net.is_empty()
    }
}

/// Constraints of `steps`, in order.
pub fn prefix_system(steps: &[ReductionStep]) -> LinSystem {
    LinSystem::from_constraints(steps.iter().filter_map(|s| s.constraint.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Every rule, local ones first.
    #[default]
    Compact,
    /// Redundant transitions, constant and duplicate places only.
    Clean,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "compact" => Ok(Strategy::Compact),
            "clean" => Ok(Strategy::Clean),
            other => Err(format!("unknown strategy `{other}` (expected compact or clean)")),
        }
    }
}

/// Search bounds for the non-local rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionLimits {
    /// Longest alternative sequence tried for a redundant transition.
    pub max_seq_len: usize,
    /// Largest coefficient tried in a redundant-place valuation.
    pub coeff_bound: u64,
    /// General redundant-place search only runs below this many places.
    pub ilp_place_limit: usize,
    /// Longest place cycle considered for loop agglomeration.
    pub max_loop: usize,
    pub order: CandidateOrder,
}

impl Default for ReductionLimits {
    fn default() -> Self {
        ReductionLimits {
            max_seq_len: 2,
            coeff_bound: 4,
            ilp_place_limit: 50,
            max_loop: 8,
            order: CandidateOrder::Declaration,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rule {
    Dead,
    SpecialT,
    SpecialR,
    Chain,
    Loop,
    SourceSink,
    FireOnce,
    GeneralR,
    GeneralT,
}

const COMPACT_LOCAL: [Rule; 7] = [
    Rule::Dead,
    Rule::SpecialT,
    Rule::SpecialR,
    Rule::Chain,
    Rule::Loop,
    Rule::SourceSink,
    Rule::FireOnce,
];

struct Reducer {
    net: Net,
    steps: Vec<ReductionStep>,
    limits: ReductionLimits,
    taken: HashSet<String>,
    next_fresh: usize,
}

impl Reducer {
    fn fresh_name(&mut self) -> String {
        loop {
            let name = format!("a{}", self.next_fresh);
            self.next_fresh += 1;
            if !self.taken.contains(&name) && !self.net.has_name(&name) {
                self.taken.insert(name.clone());
                return name;
            }
        }
    }

    fn remove_place_step(&mut self, cert: RedundantPlaceCertificate) {
        let name = self.net.place_name(cert.place).to_string();
        let c = cert.constraint(&self.net);
        self.net.remove_places(&[cert.place]);
        self.steps.push(ReductionStep::redundant_place(c, name));
    }

    fn agglomerate(&mut self, parts: &[PlaceId]) {
        let fresh = self.fresh_name();
        let names: Vec<String> = parts
            .iter()
            .map(|&p| self.net.place_name(p).to_string())
            .collect();
        self.net.merge_places(parts, &fresh);
        self.steps.push(ReductionStep::agglomeration(fresh, names));
    }

    fn apply(&mut self, rule: Rule) -> bool {
        let order = self.limits.order;
        match rule {
            Rule::Dead => {
                let dead = extra::dead_transitions(&self.net, order);
                let Some(&t) = dead.first() else {
                    return false;
                };
                let name = self.net.transition_name(t).to_string();
                self.net.remove_transitions(&[t]);
                self.steps.push(ReductionStep::transition_removal(RuleKind::D, &name));
                true
            }
            Rule::SpecialT | Rule::GeneralT => {
                let found = if rule == Rule::SpecialT {
                    transitions::special_redundant(&self.net, order)
                } else {
                    transitions::general_redundant(&self.net, order, self.limits.max_seq_len)
                };
                let Some(t) = found else {
                    return false;
                };
                let name = self.net.transition_name(t).to_string();
                self.net.remove_transitions(&[t]);
                self.steps.push(ReductionStep::transition_removal(RuleKind::T, &name));
                true
            }
            Rule::SpecialR => match places::special_redundant(&self.net, order, self.limits.coeff_bound) {
                Some(cert) => {
                    self.remove_place_step(cert);
                    true
                }
                None => false,
            },
            Rule::GeneralR => {
                if self.net.num_places() > self.limits.ilp_place_limit {
                    return false;
                }
                match places::general_redundant(&self.net, order, self.limits.coeff_bound) {
                    Some(cert) => {
                        self.remove_place_step(cert);
                        true
                    }
                    None => false,
                }
            }
            Rule::Chain => match agglomerate::chain(&self.net, order) {
                Some((p, q, _)) => {
                    self.agglomerate(&[p, q]);
                    true
                }
                None => false,
            },
            Rule::Loop => match agglomerate::shortest_loop(&self.net, order, self.limits.max_loop) {
                Some(cycle) => {
                    self.agglomerate(&cycle);
                    true
                }
                None => false,
            },
            Rule::SourceSink => match extra::source_sink(&self.net, order) {
                Some((p, t)) => {
                    let pname = self.net.place_name(p).to_string();
                    let tname = self.net.transition_name(t).to_string();
                    let k = self.net.initial(p);
                    self.net.remove_transitions(&[t]);
                    let p = self.net.place(&pname).expect("place survives transition removal");
                    self.net.remove_places(&[p]);
                    self.steps.push(ReductionStep::source_sink(&pname, k, Some(&tname)));
                    true
                }
                None => false,
            },
            Rule::FireOnce => match extra::fire_once(&self.net) {
                Some(t) => {
                    let m0 = self.net.initial_marking();
                    let before = marking_by_name(&self.net, &m0);
                    let m1 = self.net.fire(&m0, t).expect("fire-once candidate is enabled");
                    let name = self.net.transition_name(t).to_string();
                    self.net.set_initial_marking(&m1);
                    self.net.remove_transitions(&[t]);
                    self.steps.push(ReductionStep::fire_once(&name, before));
                    true
                }
                None => false,
            },
        }
    }

    fn run(&mut self, local: &[Rule], global: &[Rule]) {
        'outer: loop {
            for &r in local {
                if self.apply(r) {
                    continue 'outer;
                }
            }
            for &r in global {
                if self.apply(r) {
                    continue 'outer;
                }
            }
            break;
        }
    }
}

/// Reduces `net` to a fixpoint of the rules selected by `strategy`.
///
/// Local rules (dead transitions, special redundancies, agglomerations,
/// source-sink pairs, fire-once) are tried first; the general redundant
/// place and transition searches only run once no local rule applies.
pub fn reduce(net: &Net, strategy: Strategy, limits: &ReductionLimits) -> ReductionTrace {
    let mut taken: HashSet<String> = net.place_names().iter().cloned().collect();
    taken.extend(net.transition_names().iter().cloned());
    let mut r = Reducer {
        net: net.clone(),
        steps: Vec::new(),
        limits: *limits,
        taken,
        next_fresh: 1,
    };
    match strategy {
        Strategy::Compact => r.run(&COMPACT_LOCAL, &[Rule::GeneralR, Rule::GeneralT]),
        Strategy::Clean => r.run(&[Rule::SpecialT, Rule::SpecialR], &[Rule::GeneralT]),
    }
    ReductionTrace {
        initial_net: net.clone(),
        steps: r.steps,
        residual_net: r.net,
    }
}

fn marking_by_name(net: &Net, m: &Marking) -> Vec<(String, u64)> {
    m.iter()
        .map(|(p, k)| (net.place_name(p).to_string(), k))
        .collect()
}

//! Linear constraint systems over non-negative integer variables.
//!
//! Systems are collected from reduction traces: one equation or inequality
//! per rule application. [`count_solutions`] and [`enumerate_solutions`]
//! answer "how many markings of the original net correspond to this residual
//! marking" by brute force, which makes them the oracle for the counting
//! engine.

mod constraint;
mod solve;
mod system;

use std::collections::BTreeMap;

use thiserror::Error;

pub use constraint::{Canonical, LinearConstraint, Relation};
pub use solve::{count_solutions, enumerate_solutions, is_solution, lift, project, Solutions};
pub(crate) use solve::first_solution_within;
pub use system::LinSystem;

/// Variables are named: places of some net or fresh agglomeration names.
pub type Var = String;

/// An assignment of naturals to variables.
pub type Valuation = BTreeMap<Var, u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearError {
    #[error("constraint has no variable on its left-hand side")]
    EmptyLhs,
    #[error("valuation is missing variable(s): {}", .0.join(", "))]
    MissingVariables(Vec<Var>),
    #[error("variable `{0}` does not occur in the system")]
    UnknownVariable(Var),
    #[error("unbounded enumeration: no finite bound for {}", .0.join(", "))]
    Unbounded(Vec<Var>),
    #[error("lift needs a bound for new variable `{0}`")]
    MissingBound(Var),
}

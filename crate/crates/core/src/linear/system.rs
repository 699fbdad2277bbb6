use std::collections::HashSet;
use std::fmt;

use super::{LinearConstraint, Var};

/// A conjunction of linear constraints over non-negative integer variables.
///
/// `vars` lists every variable occurring in the constraints, in order of
/// first occurrence. Concatenation of systems is list append.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinSystem {
    constraints: Vec<LinearConstraint>,
    vars: Vec<Var>,
    seen: HashSet<Var>,
}

impl LinSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints<I: IntoIterator<Item = LinearConstraint>>(cs: I) -> Self {
        let mut q = LinSystem::new();
        for c in cs {
            q.push(c);
        }
        q
    }

    pub fn push(&mut self, c: LinearConstraint) {
        for v in c.vars() {
            if self.seen.insert(v.clone()) {
                self.vars.push(v.clone());
            }
        }
        self.constraints.push(c);
    }

    /// `(self; other)`
    pub fn extend(&mut self, other: &LinSystem) {
        for c in &other.constraints {
            self.push(c.clone());
        }
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn contains_var(&self, v: &str) -> bool {
        self.seen.contains(v)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Largest absolute constant on a right-hand side.
    pub fn max_constant(&self) -> u64 {
        self.constraints
            .iter()
            .map(|c| c.rhs_const.unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for LinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vars_in_first_occurrence_order() {
        let q = LinSystem::from_constraints([
            LinearConstraint::sum("a", &["p".into(), "q".into()]),
            LinearConstraint::sum("b", &["q".into(), "r".into()]),
        ]);
        assert_eq!(q.vars(), ["a", "p", "q", "b", "r"]);
        assert!(q.contains_var("r"));
        assert!(!q.contains_var("z"));
    }

    #[test]
    fn extend_is_append() {
        let mut q = LinSystem::from_constraints([LinearConstraint::upper_bound("p", 3)]);
        let q2 = LinSystem::from_constraints([LinearConstraint::upper_bound("r", 1)]);
        q.extend(&q2);
        assert_eq!(q.len(), 2);
        assert_eq!(q.to_string(), "p <= 3\nr <= 1\n");
    }
}

use std::collections::BTreeMap;
use std::fmt;

use super::{LinearError, Valuation, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Eq,
    Le,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
        }
    }
}

/// A linear (in)equation as written, `lhs ⋈ rhs_terms + rhs_const`.
///
/// The written shape is kept for printing; [`LinearConstraint::canonical`]
/// gives the normalized `Σ c·x ⋈ b` form used by the solvers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    pub lhs: Vec<(Var, i64)>,
    pub relation: Relation,
    pub rhs_terms: Vec<(Var, i64)>,
    pub rhs_const: i64,
}

/// `Σ coeffs·x ⋈ bound`, variables sorted, zero coefficients dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Canonical {
    pub coeffs: BTreeMap<Var, i64>,
    pub relation: Relation,
    pub bound: i64,
}

impl LinearConstraint {
    pub fn new(
        lhs: Vec<(Var, i64)>,
        relation: Relation,
        rhs_terms: Vec<(Var, i64)>,
        rhs_const: i64,
    ) -> Result<Self, LinearError> {
        if lhs.iter().all(|(_, c)| *c == 0) {
            return Err(LinearError::EmptyLhs);
        }
        Ok(LinearConstraint {
            lhs,
            relation,
            rhs_terms,
            rhs_const,
        })
    }

    /// `k.x = Σ terms + c`
    pub fn equation(var: &str, k: i64, rhs_terms: Vec<(Var, i64)>, rhs_const: i64) -> Self {
        LinearConstraint::new(vec![(var.to_string(), k)], Relation::Eq, rhs_terms, rhs_const)
            .expect("nonzero coefficient")
    }

    /// `x = Σ parts` with unit coefficients.
    pub fn sum(var: &str, parts: &[String]) -> Self {
        Self::equation(var, 1, parts.iter().map(|p| (p.clone(), 1)).collect(), 0)
    }

    /// `x <= k`
    pub fn upper_bound(var: &str, k: i64) -> Self {
        LinearConstraint::new(vec![(var.to_string(), 1)], Relation::Le, Vec::new(), k)
            .expect("nonzero coefficient")
    }

    pub fn canonical(&self) -> Canonical {
        let mut coeffs: BTreeMap<Var, i64> = BTreeMap::new();
        for (v, c) in &self.lhs {
            *coeffs.entry(v.clone()).or_default() += c;
        }
        for (v, c) in &self.rhs_terms {
            *coeffs.entry(v.clone()).or_default() -= c;
        }
        coeffs.retain(|_, c| *c != 0);
        Canonical {
            coeffs,
            relation: self.relation,
            bound: self.rhs_const,
        }
    }

    /// Variables in order of appearance, lhs first.
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.lhs.iter().chain(self.rhs_terms.iter()).map(|(v, _)| v)
    }

    /// Evaluates under `e`; `None` if some variable is missing.
    pub fn holds(&self, e: &Valuation) -> Option<bool> {
        let c = self.canonical();
        let mut acc: i128 = 0;
        for (v, k) in &c.coeffs {
            acc += *k as i128 * *e.get(v)? as i128;
        }
        Some(match c.relation {
            Relation::Eq => acc == c.bound as i128,
            Relation::Le => acc <= c.bound as i128,
        })
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[(Var, i64)], constant: i64) -> fmt::Result {
    let mut first = true;
    for (v, c) in terms {
        let (sep, mag) = match (first, *c < 0) {
            (true, false) => ("", *c),
            (true, true) => ("-", -*c),
            (false, false) => (" + ", *c),
            (false, true) => (" - ", -*c),
        };
        f.write_str(sep)?;
        if mag == 1 {
            write!(f, "{v}")?;
        } else {
            write!(f, "{mag}.{v}")?;
        }
        first = false;
    }
    if first {
        write!(f, "{constant}")?;
    } else if constant > 0 {
        write!(f, " + {constant}")?;
    } else if constant < 0 {
        write!(f, " - {}", -constant)?;
    }
    Ok(())
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.lhs, 0)?;
        write!(f, " {} ", self.relation.symbol())?;
        write_terms(f, &self.rhs_terms, self.rhs_const)
    }
}

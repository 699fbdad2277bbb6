use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{LinSystem, LinearError, Relation, Valuation, Var};

/// Interval `[lo, hi]`; `hi = None` is unbounded above.
type Dom = (i128, Option<i128>);

#[derive(Clone, Debug)]
struct Row {
    terms: Vec<(usize, i128)>,
    relation: Relation,
    bound: i128,
}

#[derive(Clone, Debug)]
struct Compiled {
    vars: Vec<Var>,
    rows: Vec<Row>,
}

impl Compiled {
    fn new(q: &LinSystem) -> Self {
        let vars: Vec<Var> = q.vars().to_vec();
        let index: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let rows = q
            .constraints()
            .iter()
            .map(|c| {
                let can = c.canonical();
                Row {
                    terms: can
                        .coeffs
                        .iter()
                        .map(|(v, k)| (index[v.as_str()], *k as i128))
                        .collect(),
                    relation: can.relation,
                    bound: can.bound as i128,
                }
            })
            .collect();
        Compiled { vars, rows }
    }

    fn initial_domains(&self, fixed: &Valuation) -> Result<Vec<Dom>, LinearError> {
        let mut dom = vec![(0i128, None); self.vars.len()];
        for (v, &x) in fixed {
            let i = self
                .vars
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| LinearError::UnknownVariable(v.clone()))?;
            dom[i] = (x as i128, Some(x as i128));
        }
        Ok(dom)
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

/// Tightens `dom` against `Σ sign·c·x ≤ sign·b`. Returns false on conflict.
fn tighten(terms: &[(usize, i128)], sign: i128, bound: i128, dom: &mut [Dom], changed: &mut bool) -> bool {
    let b = sign * bound;
    let mut min_sum: i128 = 0;
    let mut infinite: Option<usize> = None;
    let mut n_inf = 0;
    for &(i, c) in terms {
        let c = sign * c;
        if c > 0 {
            min_sum += c * dom[i].0;
        } else {
            match dom[i].1 {
                Some(h) => min_sum += c * h,
                None => {
                    n_inf += 1;
                    infinite = Some(i);
                }
            }
        }
    }
    if n_inf == 0 && min_sum > b {
        return false;
    }
    if n_inf > 1 {
        return true;
    }
    for &(i, c) in terms {
        let c = sign * c;
        if n_inf == 1 && infinite != Some(i) {
            continue;
        }
        let own = if c > 0 {
            c * dom[i].0
        } else {
            match dom[i].1 {
                Some(h) => c * h,
                None => 0,
            }
        };
        let room = b - (min_sum - own);
        if c > 0 {
            let h = div_floor(room, c);
            if dom[i].1.is_none_or(|old| h < old) {
                dom[i].1 = Some(h);
                *changed = true;
            }
        } else {
            let l = div_ceil(room, c);
            if l > dom[i].0 {
                dom[i].0 = l;
                *changed = true;
            }
        }
        if let Some(h) = dom[i].1 {
            if dom[i].0 > h {
                return false;
            }
        }
    }
    true
}

const PROPAGATION_SWEEPS: usize = 256;

fn propagate(rows: &[Row], dom: &mut [Dom]) -> bool {
    for _ in 0..PROPAGATION_SWEEPS {
        let mut changed = false;
        for r in rows {
            if !tighten(&r.terms, 1, r.bound, dom, &mut changed) {
                return false;
            }
            if r.relation == Relation::Eq && !tighten(&r.terms, -1, r.bound, dom, &mut changed) {
                return false;
            }
        }
        if !changed {
            break;
        }
    }
    true
}

/// Whether `e` satisfies every constraint of `q`.
pub fn is_solution(q: &LinSystem, e: &Valuation) -> Result<bool, LinearError> {
    let missing: Vec<Var> = q
        .vars()
        .iter()
        .filter(|v| !e.contains_key(*v))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(LinearError::MissingVariables(missing));
    }
    Ok(q.constraints().iter().all(|c| c.holds(e) == Some(true)))
}

struct Frame {
    dom: Vec<Dom>,
    level: usize,
    next: i128,
    hi: i128,
}

/// Lazy depth-first enumeration of the solutions of a system; see
/// [`enumerate_solutions`].
pub struct Solutions {
    compiled: Compiled,
    free: Vec<usize>,
    stack: Vec<Frame>,
    pending_leaf: Option<Vec<Dom>>,
    nodes: u64,
}

impl Solutions {
    fn valuation(&self, dom: &[Dom]) -> Valuation {
        self.compiled
            .vars
            .iter()
            .zip(dom)
            .map(|(v, d)| (v.clone(), d.0 as u64))
            .collect()
    }

    fn push_level(&mut self, dom: Vec<Dom>, level: usize) {
        let var = self.free[level];
        let (lo, hi) = (dom[var].0, dom[var].1.expect("bounded before search"));
        self.stack.push(Frame {
            dom,
            level,
            next: lo,
            hi,
        });
    }
}

impl Iterator for Solutions {
    type Item = Valuation;

    fn next(&mut self) -> Option<Valuation> {
        if let Some(dom) = self.pending_leaf.take() {
            return Some(self.valuation(&dom));
        }
        while let Some(top) = self.stack.last_mut() {
            if top.next > top.hi {
                self.stack.pop();
                continue;
            }
            let value = top.next;
            top.next += 1;
            let level = top.level;
            let var = self.free[level];
            let mut dom = top.dom.clone();
            dom[var] = (value, Some(value));
            self.nodes += 1;
            if !propagate(&self.compiled.rows, &mut dom) {
                continue;
            }
            if level + 1 == self.free.len() {
                return Some(self.valuation(&dom));
            }
            self.push_level(dom, level + 1);
        }
        None
    }
}

fn prepare(q: &LinSystem, fixed: &Valuation, bound: u64) -> Result<Solutions, LinearError> {
    let compiled = Compiled::new(q);
    let mut dom = compiled.initial_domains(fixed)?;
    let free: Vec<usize> = (0..compiled.vars.len())
        .filter(|&i| !fixed.contains_key(&compiled.vars[i]))
        .collect();
    let mut out = Solutions {
        compiled,
        free,
        stack: Vec::new(),
        pending_leaf: None,
        nodes: 0,
    };
    if !propagate(&out.compiled.rows, &mut dom) {
        return Ok(out);
    }
    let unbounded: Vec<usize> = out.free.iter().copied().filter(|&i| dom[i].1.is_none()).collect();
    if !unbounded.is_empty() {
        if bound == 0 {
            return Err(LinearError::Unbounded(
                unbounded.iter().map(|&i| out.compiled.vars[i].clone()).collect(),
            ));
        }
        for i in unbounded {
            dom[i].1 = Some(bound as i128);
        }
        if !propagate(&out.compiled.rows, &mut dom) {
            return Ok(out);
        }
    }
    if out.free.is_empty() {
        out.pending_leaf = Some(dom);
    } else {
        out.push_level(dom, 0);
    }
    Ok(out)
}

/// All valuations of `V(q)` extending `fixed` that satisfy `q`, in
/// lexicographic order of the system's variable order.
///
/// Variables without a derivable finite upper bound are capped at `bound`;
/// with `bound = 0` such variables are an error instead.
pub fn enumerate_solutions(
    q: &LinSystem,
    fixed: &Valuation,
    bound: u64,
) -> Result<Solutions, LinearError> {
    prepare(q, fixed, bound)
}

/// First solution found within `budget` search nodes, if any.
pub(crate) fn first_solution_within(
    q: &LinSystem,
    fixed: &Valuation,
    bound: u64,
    budget: u64,
) -> Option<Valuation> {
    let mut it = prepare(q, fixed, bound).ok()?;
    if let Some(dom) = it.pending_leaf.take() {
        return Some(it.valuation(&dom));
    }
    while let Some(top) = it.stack.last_mut() {
        if it.nodes > budget {
            return None;
        }
        if top.next > top.hi {
            it.stack.pop();
            continue;
        }
        let value = top.next;
        top.next += 1;
        let level = top.level;
        let var = it.free[level];
        let mut dom = top.dom.clone();
        dom[var] = (value, Some(value));
        it.nodes += 1;
        if !propagate(&it.compiled.rows, &mut dom) {
            continue;
        }
        if level + 1 == it.free.len() {
            return Some(it.valuation(&dom));
        }
        it.push_level(dom, level + 1);
    }
    None
}

struct Counter<'a> {
    rows: &'a [Row],
    /// variable assigned at each level with its domain
    order: Vec<(usize, i128, i128)>,
    /// rows touched by the variable at each level, with its coefficient
    touches: Vec<Vec<(usize, i128)>>,
    /// per level and row: (min, max) of the row's sum over levels >= level
    suffix: Vec<Vec<(i128, i128)>>,
    memo: Vec<HashMap<Vec<i128>, BigUint>>,
}

impl Counter<'_> {
    fn count(&mut self, level: usize, res: &[i128]) -> BigUint {
        if level == self.order.len() {
            return BigUint::one();
        }
        if let Some(v) = self.memo[level].get(res) {
            return v.clone();
        }
        let (_, lo, hi) = self.order[level];
        let mut total = BigUint::zero();
        let mut child = res.to_vec();
        'values: for x in lo..=hi {
            child.copy_from_slice(res);
            for &(r, c) in &self.touches[level] {
                let left = child[r] - c * x;
                let (smin, smax) = self.suffix[level + 1][r];
                match self.rows[r].relation {
                    Relation::Eq => {
                        if left < smin || left > smax {
                            continue 'values;
                        }
                        child[r] = left;
                    }
                    Relation::Le => {
                        if left < smin {
                            continue 'values;
                        }
                        child[r] = left.min(smax);
                    }
                }
            }
            total += self.count(level + 1, &child);
        }
        self.memo[level].insert(res.to_vec(), total.clone());
        total
    }
}

/// Number of solutions of `q` extending `fixed`.
///
/// Dynamic programming over a variable order that keeps few constraints
/// partially assigned at a time; states are the residual right-hand sides.
pub fn count_solutions(q: &LinSystem, fixed: &Valuation) -> Result<BigUint, LinearError> {
    let compiled = Compiled::new(q);
    let mut dom = compiled.initial_domains(fixed)?;
    if !propagate(&compiled.rows, &mut dom) {
        return Ok(BigUint::zero());
    }
    let unbounded: Vec<Var> = (0..compiled.vars.len())
        .filter(|&i| dom[i].1.is_none())
        .map(|i| compiled.vars[i].clone())
        .collect();
    if !unbounded.is_empty() {
        return Err(LinearError::Unbounded(unbounded));
    }
    let n = compiled.vars.len();
    let nrows = compiled.rows.len();
    let mut var_rows: Vec<Vec<(usize, i128)>> = vec![Vec::new(); n];
    for (r, row) in compiled.rows.iter().enumerate() {
        for &(i, c) in &row.terms {
            var_rows[i].push((r, c));
        }
    }

    // Determined variables are folded into the right-hand sides up front.
    let mut res: Vec<i128> = compiled.rows.iter().map(|r| r.bound).collect();
    let mut open: Vec<usize> = Vec::new();
    for i in 0..n {
        let (lo, hi) = (dom[i].0, dom[i].1.unwrap());
        if lo == hi {
            for &(r, c) in &var_rows[i] {
                res[r] -= c * lo;
            }
        } else {
            open.push(i);
        }
    }

    // Greedy order: next variable is the one leaving the fewest rows
    // partially assigned.
    let mut remaining: Vec<usize> = vec![0; nrows];
    for &i in &open {
        for &(r, _) in &var_rows[i] {
            remaining[r] += 1;
        }
    }
    let mut touched = vec![false; nrows];
    let mut order = Vec::with_capacity(open.len());
    let mut left: Vec<usize> = open.clone();
    while !left.is_empty() {
        let score = |i: usize| -> usize {
            let mut partial = 0;
            for r in 0..nrows {
                let hit = var_rows[i].iter().any(|&(rr, _)| rr == r);
                let rem = remaining[r] - usize::from(hit);
                if (touched[r] || hit) && rem > 0 {
                    partial += 1;
                }
            }
            partial
        };
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by_key(|&(k, &i)| (score(i), k))
            .unwrap();
        let i = left.remove(pos);
        for &(r, _) in &var_rows[i] {
            remaining[r] -= 1;
            touched[r] = true;
        }
        order.push(i);
    }

    let levels = order.len();
    let mut suffix = vec![vec![(0i128, 0i128); nrows]; levels + 1];
    for l in (0..levels).rev() {
        suffix[l] = suffix[l + 1].clone();
        let i = order[l];
        let (lo, hi) = (dom[i].0, dom[i].1.unwrap());
        for &(r, c) in &var_rows[i] {
            let (a, b) = (c * lo, c * hi);
            suffix[l][r].0 += a.min(b);
            suffix[l][r].1 += a.max(b);
        }
    }
    for r in 0..nrows {
        let (smin, smax) = suffix[0][r];
        match compiled.rows[r].relation {
            Relation::Eq if res[r] < smin || res[r] > smax => return Ok(BigUint::zero()),
            Relation::Le if res[r] < smin => return Ok(BigUint::zero()),
            Relation::Le => res[r] = res[r].min(smax),
            _ => {}
        }
    }

    let mut counter = Counter {
        rows: &compiled.rows,
        order: order
            .iter()
            .map(|&i| (i, dom[i].0, dom[i].1.unwrap()))
            .collect(),
        touches: order.iter().map(|&i| var_rows[i].clone()).collect(),
        suffix,
        memo: vec![HashMap::new(); levels],
    };
    Ok(counter.count(0, &res))
}

/// `E ↓ onto`: restriction of every valuation to `onto`, deduplicated.
pub fn project(sols: &BTreeSet<Valuation>, onto: &BTreeSet<Var>) -> BTreeSet<Valuation> {
    sols.iter()
        .map(|e| {
            e.iter()
                .filter(|(v, _)| onto.contains(*v))
                .map(|(v, x)| (v.clone(), *x))
                .collect()
        })
        .collect()
}

/// `E ↑ onto`: every extension of the valuations of `sols` to the variables
/// of `onto`, where each new variable ranges over `0..=bounds[var]`.
pub fn lift(
    sols: &BTreeSet<Valuation>,
    onto: &BTreeSet<Var>,
    bounds: &BTreeMap<Var, u64>,
) -> Result<BTreeSet<Valuation>, LinearError> {
    let dom: BTreeSet<&Var> = sols.iter().flat_map(|e| e.keys()).collect();
    let mut new_vars = Vec::new();
    for v in onto {
        if !dom.contains(v) {
            let b = bounds
                .get(v)
                .ok_or_else(|| LinearError::MissingBound(v.clone()))?;
            new_vars.push((v.clone(), *b));
        }
    }
    let mut out = sols.clone();
    for (v, b) in new_vars {
        out = out
            .into_iter()
            .flat_map(|e| {
                let v = v.clone();
                (0..=b).map(move |x| {
                    let mut e = e.clone();
                    e.insert(v.clone(), x);
                    e
                })
            })
            .collect();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::LinearConstraint;

    fn val(pairs: &[(&str, u64)]) -> Valuation {
        pairs.iter().map(|(v, x)| (v.to_string(), *x)).collect()
    }

    fn sum(a: &str, parts: &[&str]) -> LinearConstraint {
        LinearConstraint::sum(a, &parts.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }

    fn q_prime() -> LinSystem {
        LinSystem::from_constraints([
            sum("a4", &["p21", "p18"]),
            sum("a11", &["p23", "p22", "p20"]),
            sum("a4", &["a11"]),
            sum("a13", &["a11", "p26"]),
        ])
    }

    #[test]
    fn is_solution_examples() {
        let q = LinSystem::from_constraints([sum("a", &["p", "q"])]);
        assert!(is_solution(&q, &val(&[("a", 3), ("p", 1), ("q", 2)])).unwrap());
        let q = LinSystem::from_constraints([LinearConstraint::upper_bound("p", 10)]);
        assert!(!is_solution(&q, &val(&[("p", 11)])).unwrap());
        let err = is_solution(&q, &val(&[])).unwrap_err();
        assert_eq!(err, LinearError::MissingVariables(vec!["p".into()]));
    }

    #[test]
    fn enumerate_stars_and_bars() {
        let q = LinSystem::from_constraints([sum("a", &["p", "q"])]);
        let sols: Vec<_> = enumerate_solutions(&q, &val(&[("a", 2)]), 0)
            .unwrap()
            .collect();
        assert_eq!(
            sols,
            vec![
                val(&[("a", 2), ("p", 0), ("q", 2)]),
                val(&[("a", 2), ("p", 1), ("q", 1)]),
                val(&[("a", 2), ("p", 2), ("q", 0)]),
            ]
        );
    }

    #[test]
    fn q_prime_at_zero_and_one() {
        let q = q_prime();
        let zero: Vec<_> = enumerate_solutions(&q, &val(&[("a13", 0)]), 0)
            .unwrap()
            .collect();
        assert_eq!(zero.len(), 1);
        assert!(zero[0].values().all(|&x| x == 0));
        // a11 ∈ {0,1}: nos(3,0)·nos(2,0) + nos(3,1)·nos(2,1) = 1 + 3·2
        let one = enumerate_solutions(&q, &val(&[("a13", 1)]), 0).unwrap().count();
        assert_eq!(one, 7);
        assert_eq!(count_solutions(&q, &val(&[("a13", 1)])).unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn unbounded_is_an_error_without_bound() {
        let q = LinSystem::from_constraints([sum("a", &["p", "q"])]);
        assert!(matches!(
            enumerate_solutions(&q, &Valuation::new(), 0),
            Err(LinearError::Unbounded(_))
        ));
        assert_eq!(enumerate_solutions(&q, &Valuation::new(), 2).unwrap().count(), 6);
        assert!(count_solutions(&q, &Valuation::new()).is_err());
    }

    #[test]
    fn unknown_fixed_variable() {
        let q = LinSystem::from_constraints([sum("a", &["p"])]);
        assert!(matches!(
            count_solutions(&q, &val(&[("z", 1)])),
            Err(LinearError::UnknownVariable(_))
        ));
    }

    #[test]
    fn empty_system_has_one_solution() {
        let q = LinSystem::new();
        assert_eq!(count_solutions(&q, &Valuation::new()).unwrap(), BigUint::one());
        assert_eq!(enumerate_solutions(&q, &Valuation::new(), 0).unwrap().count(), 1);
    }

    #[test]
    fn coefficients_and_divisibility() {
        // 2.p = a with a fixed odd has no solution
        let q = LinSystem::from_constraints([LinearConstraint::equation(
            "p",
            2,
            vec![("a".into(), 1)],
            0,
        )]);
        assert_eq!(count_solutions(&q, &val(&[("a", 3)])).unwrap(), BigUint::zero());
        assert_eq!(count_solutions(&q, &val(&[("a", 4)])).unwrap(), BigUint::one());
    }

    #[test]
    fn inequalities_count() {
        // p + q <= 3: C(5,2) = 10 points
        let q = LinSystem::from_constraints([LinearConstraint::new(
            vec![("p".into(), 1), ("q".into(), 1)],
            Relation::Le,
            vec![],
            3,
        )
        .unwrap()]);
        assert_eq!(count_solutions(&q, &Valuation::new()).unwrap(), BigUint::from(10u32));
        assert_eq!(enumerate_solutions(&q, &Valuation::new(), 0).unwrap().count(), 10);
    }

    #[test]
    fn project_and_lift_examples() {
        let e: BTreeSet<Valuation> = [val(&[("a", 1), ("p", 0)]), val(&[("a", 1), ("p", 1)])]
            .into_iter()
            .collect();
        let onto: BTreeSet<Var> = ["a".to_string()].into_iter().collect();
        let projected = project(&e, &onto);
        assert_eq!(projected, [val(&[("a", 1)])].into_iter().collect());

        let both: BTreeSet<Var> = ["a".to_string(), "p".to_string()].into_iter().collect();
        let bounds: BTreeMap<Var, u64> = [("p".to_string(), 1)].into_iter().collect();
        assert_eq!(lift(&projected, &both, &bounds).unwrap(), e);
        assert_eq!(
            lift(&projected, &both, &BTreeMap::new()),
            Err(LinearError::MissingBound("p".into()))
        );
        assert_eq!(project(&lift(&projected, &both, &bounds).unwrap(), &onto), projected);
    }

    #[test]
    fn budgeted_search_finds_or_gives_up() {
        let q = LinSystem::from_constraints([sum("a", &["p", "q"])]);
        let s = first_solution_within(&q, &val(&[("a", 2)]), 0, 100).unwrap();
        assert_eq!(s, val(&[("a", 2), ("p", 0), ("q", 2)]));
    }

    #[test]
    fn floor_and_ceil_division() {
        assert_eq!(div_floor(-3, 2), -2);
        assert_eq!(div_floor(3, 2), 1);
        assert_eq!(div_ceil(3, 2), 2);
        assert_eq!(div_ceil(-3, 2), -1);
        assert_eq!(div_ceil(3, -2), -1);
    }
}

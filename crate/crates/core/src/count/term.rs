use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linear::{count_solutions, LinSystem, Valuation};
use crate::reduce::{prefix_system, ReductionStep, ReductionTrace, RuleKind};

use super::poly::CountPolynomial;
use super::{nos_big, CountError};

/// A variable of a [`CountTerm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Marking of the `i`-th place the term is expressed over.
    Place(usize),
    /// An initial-marking constant, see [`Param`].
    Param(usize),
    /// A summation index.
    Bound(usize),
}

/// `Σ c·x + c0` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinExpr {
    pub terms: BTreeMap<Symbol, BigRational>,
    pub constant: BigRational,
}

impl LinExpr {
    pub fn constant(c: BigRational) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn symbol(s: Symbol) -> Self {
        LinExpr {
            terms: BTreeMap::from([(s, BigRational::one())]),
            constant: BigRational::zero(),
        }
    }

    fn add_scaled(&mut self, other: &LinExpr, k: &BigRational) {
        for (s, c) in &other.terms {
            let e = self.terms.entry(*s).or_insert_with(BigRational::zero);
            *e += c * k;
            if e.is_zero() {
                self.terms.remove(s);
            }
        }
        self.constant += &other.constant * k;
    }

    pub fn mentions(&self, s: Symbol) -> bool {
        self.terms.contains_key(&s)
    }

    pub fn eval(&self, vals: &Values) -> BigRational {
        let mut v = self.constant.clone();
        for (s, c) in &self.terms {
            v += c * BigRational::from_integer(vals.get(*s).clone());
        }
        v
    }

    fn to_poly(&self, dims: &Dims) -> CountPolynomial {
        let mut p = CountPolynomial::constant(dims.names.clone(), self.constant.clone());
        for (s, c) in &self.terms {
            p = &p + &CountPolynomial::var(dims.names.clone(), dims.index(*s)).scale(c);
        }
        p
    }
}

/// Algebraic count expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(BigUint),
    /// `nos(k, x) = C(x+k-1, k-1)`, the ways to put `x` tokens in `k` slots;
    /// zero when `x` is negative or fractional.
    Nos { k: u64, arg: LinExpr },
    /// 1 when the argument is a natural number, else 0.
    Guard(LinExpr),
    Product(Vec<Expr>),
    /// `Σ_{Bound(var) = 0}^{upper} body`.
    Sum { var: usize, upper: LinExpr, body: Box<Expr> },
    /// Counts the solutions of the system directly, with the term's places
    /// fixed to their values.
    Enumerate(LinSystem),
}

impl Expr {
    fn one() -> Self {
        Expr::Const(BigUint::one())
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    fn mentions(&self, s: Symbol) -> bool {
        match self {
            Expr::Const(_) | Expr::Enumerate(_) => false,
            Expr::Nos { arg, .. } | Expr::Guard(arg) => arg.mentions(s),
            Expr::Product(fs) => fs.iter().any(|f| f.mentions(s)),
            Expr::Sum { upper, body, .. } => upper.mentions(s) || body.mentions(s),
        }
    }

    fn times(self, other: Expr) -> Expr {
        if self.is_one() {
            return other;
        }
        if other.is_one() {
            return self;
        }
        let mut fs = Vec::new();
        for e in [self, other] {
            match e {
                Expr::Product(inner) => fs.extend(inner),
                e => fs.push(e),
            }
        }
        Expr::Product(fs)
    }

    /// Number of summation nodes.
    pub fn num_sums(&self) -> usize {
        match self {
            Expr::Product(fs) => fs.iter().map(Expr::num_sums).sum(),
            Expr::Sum { body, .. } => 1 + body.num_sums(),
            _ => 0,
        }
    }

    pub fn has_enumerate(&self) -> bool {
        match self {
            Expr::Enumerate(_) => true,
            Expr::Product(fs) => fs.iter().any(Expr::has_enumerate),
            Expr::Sum { body, .. } => body.has_enumerate(),
            _ => false,
        }
    }
}

/// A constant from the initial marking that the count depends on: the bound
/// of a source-sink place, or the value of a place found constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub place: String,
    pub value: u64,
}

/// Count of the markings of a net as a function of the markings of the
/// places it was reduced to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTerm {
    pub expr: Expr,
    pub places: Vec<String>,
    pub params: Vec<Param>,
    bound: usize,
    system: LinSystem,
}

/// Values of every symbol during evaluation.
pub struct Values {
    places: Vec<BigInt>,
    params: Vec<BigInt>,
    bound: Vec<BigInt>,
}

impl Values {
    fn get(&self, s: Symbol) -> &BigInt {
        match s {
            Symbol::Place(i) => &self.places[i],
            Symbol::Param(i) => &self.params[i],
            Symbol::Bound(i) => &self.bound[i],
        }
    }
}

struct Dims {
    names: Vec<String>,
    places: usize,
    params: usize,
}

impl Dims {
    fn index(&self, s: Symbol) -> usize {
        match s {
            Symbol::Place(i) => i,
            Symbol::Param(i) => self.places + i,
            Symbol::Bound(i) => self.places + self.params + i,
        }
    }
}

/// Caps on polynomial expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolyLimits {
    /// Most variables (places and parameters) the result may have.
    pub max_vars: usize,
    /// Give up when an intermediate polynomial has more monomials.
    pub max_terms: usize,
}

impl Default for PolyLimits {
    fn default() -> Self {
        PolyLimits {
            max_vars: 12,
            max_terms: 50_000,
        }
    }
}

fn natural(v: &BigRational) -> Option<BigInt> {
    (v.is_integer() && !v.is_negative()).then(|| v.to_integer())
}

impl CountTerm {
    pub fn system(&self) -> &LinSystem {
        &self.system
    }

    pub fn num_bound(&self) -> usize {
        self.bound
    }

    pub fn param_values(&self) -> Vec<u64> {
        self.params.iter().map(|p| p.value).collect()
    }

    /// Count at a marking of [`places`](Self::places), listed in that order.
    pub fn eval(&self, marking: &[u64]) -> Result<BigUint, CountError> {
        let places: Vec<BigInt> = marking.iter().map(|&x| BigInt::from(x)).collect();
        let params: Vec<BigInt> = self.params.iter().map(|p| BigInt::from(p.value)).collect();
        self.eval_with(&places, &params)
    }

    /// Count with parameters overridden.
    pub fn eval_with(&self, places: &[BigInt], params: &[BigInt]) -> Result<BigUint, CountError> {
        assert_eq!(places.len(), self.places.len(), "one value per place");
        assert_eq!(params.len(), self.params.len(), "one value per parameter");
        let mut vals = Values {
            places: places.to_vec(),
            params: params.to_vec(),
            bound: vec![BigInt::zero(); self.bound],
        };
        let v = self.eval_expr(&self.expr, &mut vals)?;
        Ok(v.to_biguint().expect("counts are non-negative"))
    }

    fn eval_expr(&self, e: &Expr, vals: &mut Values) -> Result<BigInt, CountError> {
        Ok(match e {
            Expr::Const(c) => BigInt::from(c.clone()),
            Expr::Nos { k, arg } => match natural(&arg.eval(vals)) {
                Some(x) => nos_big(*k, &x),
                None => BigInt::zero(),
            },
            Expr::Guard(arg) => {
                if natural(&arg.eval(vals)).is_some() {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }
            Expr::Product(fs) => {
                let mut acc = BigInt::one();
                for f in fs {
                    acc *= self.eval_expr(f, vals)?;
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Sum { var, upper, body } => {
                let u = upper.eval(vals).floor().to_integer();
                if u.is_negative() {
                    return Ok(BigInt::zero());
                }
                let u = u.to_u64().ok_or_else(|| CountError::RangeTooLarge(u.to_string()))?;
                let mut acc = BigInt::zero();
                for s in 0..=u {
                    vals.bound[*var] = BigInt::from(s);
                    acc += self.eval_expr(body, vals)?;
                }
                acc
            }
            Expr::Enumerate(q) => {
                let mut fixed = Valuation::new();
                for (name, v) in self.places.iter().zip(&vals.places) {
                    if q.contains_var(name) {
                        let v = v.to_u64().ok_or_else(|| CountError::RangeTooLarge(v.to_string()))?;
                        fixed.insert(name.clone(), v);
                    }
                }
                BigInt::from(count_solutions(q, &fixed)?)
            }
        })
    }

    /// Expands the term into a polynomial over the places it mentions and its
    /// parameters. `None` if the term enumerates, has divisibility guards, or
    /// exceeds `limits`.
    pub fn to_polynomial(&self, limits: &PolyLimits) -> Option<CountPolynomial> {
        if self.expr.has_enumerate() {
            return None;
        }
        let used: Vec<usize> = (0..self.places.len())
            .filter(|&i| self.expr.mentions(Symbol::Place(i)))
            .collect();
        if used.len() + self.params.len() > limits.max_vars {
            return None;
        }
        let mut names: Vec<String> = self.places.clone();
        names.extend(self.params.iter().map(|p| p.name.clone()));
        names.extend((0..self.bound).map(|i| format!("s{}", i + 1)));
        let dims = Dims {
            names,
            places: self.places.len(),
            params: self.params.len(),
        };
        let p = expand(&self.expr, &dims, limits)?;
        let keep: Vec<usize> = used
            .into_iter()
            .chain((0..self.params.len()).map(|i| self.places.len() + i))
            .collect();
        Some(p.restrict(&keep))
    }

    /// Maps a polynomial from [`to_polynomial`](Self::to_polynomial) back to
    /// where its variables come from.
    pub fn poly_sources(&self, poly: &CountPolynomial) -> Vec<Symbol> {
        poly.vars()
            .iter()
            .map(|v| {
                if let Some(i) = self.params.iter().position(|p| &p.name == v) {
                    Symbol::Param(i)
                } else {
                    Symbol::Place(self.places.iter().position(|p| p == v).expect("polynomial variable is a place"))
                }
            })
            .collect()
    }
}

fn expand(e: &Expr, dims: &Dims, limits: &PolyLimits) -> Option<CountPolynomial> {
    let check = |p: CountPolynomial| (p.num_terms() <= limits.max_terms).then_some(p);
    match e {
        Expr::Const(c) => Some(CountPolynomial::constant(
            dims.names.clone(),
            BigRational::from_integer(BigInt::from(c.clone())),
        )),
        Expr::Nos { k, arg } => {
            // Π_{i=1}^{k-1} (x+i) / (k-1)!
            let x = arg.to_poly(dims);
            let mut acc = CountPolynomial::constant(dims.names.clone(), BigRational::one());
            let mut fact = BigInt::one();
            for i in 1..*k {
                let shift = CountPolynomial::constant(dims.names.clone(), BigRational::from_integer(BigInt::from(i)));
                acc = check(&acc * &(&x + &shift))?;
                fact *= BigInt::from(i);
            }
            Some(acc.scale(&BigRational::new(BigInt::one(), fact)))
        }
        Expr::Guard(_) | Expr::Enumerate(_) => None,
        Expr::Product(fs) => {
            let mut acc = CountPolynomial::constant(dims.names.clone(), BigRational::one());
            for f in fs {
                acc = check(&acc * &expand(f, dims, limits)?)?;
            }
            Some(acc)
        }
        Expr::Sum { var, upper, body } => {
            let b = expand(body, dims, limits)?;
            let u = upper.to_poly(dims);
            check(b.sum_over(dims.index(Symbol::Bound(*var)), &u))
        }
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut put = |f: &mut fmt::Formatter<'_>, c: &BigRational, body: String| -> fmt::Result {
            let neg = c.is_negative();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let a = c.abs();
            match (a.is_one(), body.is_empty()) {
                (true, false) => f.write_str(&body),
                (_, true) => write!(f, "{a}"),
                (false, false) => write!(f, "{a}.{body}"),
            }
        };
        for (s, c) in &self.terms {
            let name = match s {
                Symbol::Place(i) => format!("x{i}"),
                Symbol::Param(i) => format!("k{i}"),
                Symbol::Bound(i) => format!("s{}", i + 1),
            };
            put(f, c, name)?;
        }
        if !self.constant.is_zero() || self.terms.is_empty() {
            put(f, &self.constant, String::new())?;
        }
        Ok(())
    }
}

/// Renders a term with place and parameter names substituted.
pub struct TermDisplay<'a>(&'a CountTerm);

impl CountTerm {
    pub fn display(&self) -> TermDisplay<'_> {
        TermDisplay(self)
    }
}

impl TermDisplay<'_> {
    fn lin(&self, e: &LinExpr) -> String {
        let mut s = e.to_string();
        // longest indices first so x1 does not clobber x12
        for i in (0..self.0.places.len()).rev() {
            s = s.replace(&format!("x{i}"), &self.0.places[i]);
        }
        for i in (0..self.0.params.len()).rev() {
            s = s.replace(&format!("k{i}"), &self.0.params[i].name);
        }
        s
    }

    fn expr(&self, e: &Expr, out: &mut String) {
        match e {
            Expr::Const(c) => out.push_str(&c.to_string()),
            Expr::Nos { k, arg } => out.push_str(&format!("nos({k}, {})", self.lin(arg))),
            Expr::Guard(arg) => out.push_str(&format!("[{} in N]", self.lin(arg))),
            Expr::Product(fs) => {
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" * ");
                    }
                    let paren = matches!(f, Expr::Sum { .. });
                    if paren {
                        out.push('(');
                    }
                    self.expr(f, out);
                    if paren {
                        out.push(')');
                    }
                }
            }
            Expr::Sum { var, upper, body } => {
                out.push_str(&format!("sum(s{} = 0..{}) ", var + 1, self.lin(upper)));
                self.expr(body, out);
            }
            Expr::Enumerate(q) => out.push_str(&format!("#solutions({} constraints)", q.len())),
        }
    }
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.expr(&self.0.expr, &mut s);
        f.write_str(&s)
    }
}

/// Builds the count term of a whole trace over its residual places.
pub fn build_count_term(trace: &ReductionTrace) -> CountTerm {
    build_term(&trace.steps, trace.residual_net.place_names())
}

enum Layer {
    Factor(Expr),
    Sum(usize, LinExpr),
}

struct Builder<'a> {
    steps: &'a [ReductionStep],
    parts: HashMap<&'a str, &'a [String]>,
    required: HashSet<&'a str>,
    active: Vec<bool>,
}

impl<'a> Builder<'a> {
    fn new(steps: &'a [ReductionStep]) -> Self {
        let mut parts: HashMap<&str, &[String]> = HashMap::new();
        let mut required = HashSet::new();
        let mut active = Vec::with_capacity(steps.len());
        for s in steps {
            let mut on = false;
            match s.kind {
                RuleKind::A => {
                    if let Some(a) = &s.introduced_place {
                        parts.insert(a.as_str(), s.removed_places.as_slice());
                    }
                }
                RuleKind::R => {
                    if let (Some(c), Some(p)) = (&s.constraint, s.removed_places.first()) {
                        let k = c.lhs.first().map_or(1, |(_, k)| *k);
                        on = k != 1 || parts.contains_key(p.as_str()) || required.contains(p.as_str());
                        if on {
                            required.extend(c.rhs_terms.iter().map(|(v, _)| v.as_str()));
                        }
                    }
                }
                _ => {}
            }
            active.push(on);
        }
        Builder {
            steps,
            parts,
            required,
            active,
        }
    }

    /// Neither its value nor that of anything it was merged from is needed.
    fn free(&self, x: &str) -> bool {
        !self.required.contains(x) && self.parts.get(x).is_none_or(|ps| ps.iter().all(|p| self.free(p)))
    }

    fn slots(&self, x: &str) -> u64 {
        match self.parts.get(x) {
            Some(ps) => ps.iter().map(|p| self.slots(p)).sum(),
            None => 1,
        }
    }

    fn absorb(&self, x: &'a str, absorbed: &mut HashSet<&'a str>) {
        absorbed.insert(x);
        if let Some(ps) = self.parts.get(x) {
            for p in ps.iter() {
                self.absorb(p, absorbed);
            }
        }
    }

    /// The layers of the term, outermost first, or `None` when a step falls
    /// outside the shapes handled here.
    fn layers(&self, places: &[String], params: &mut Vec<Param>) -> Option<(Vec<Layer>, usize)> {
        let mut env: HashMap<&str, LinExpr> = places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), LinExpr::symbol(Symbol::Place(i))))
            .collect();
        let single_place = |s: &ReductionStep| match (&s.constraint, s.removed_places.as_slice()) {
            (Some(c), [p]) => matches!(c.lhs.as_slice(), [(v, k)] if v == p && *k > 0),
            _ => false,
        };
        if self
            .steps
            .iter()
            .any(|s| matches!(s.kind, RuleKind::R | RuleKind::L) && !single_place(s))
        {
            return None;
        }
        let mut absorbed: HashSet<&str> = HashSet::new();
        let mut layers = Vec::new();
        let mut bound = 0usize;
        let mut fresh_sum = |upper: LinExpr, layers: &mut Vec<Layer>| {
            let s = bound;
            bound += 1;
            layers.push(Layer::Sum(s, upper));
            LinExpr::symbol(Symbol::Bound(s))
        };
        for (i, s) in self.steps.iter().enumerate().rev() {
            match s.kind {
                RuleKind::A => {
                    let x = s.introduced_place.as_deref()?;
                    if absorbed.contains(x) {
                        continue;
                    }
                    let mut rem = env.get(x)?.clone();
                    let (free, req): (Vec<&String>, Vec<&String>) =
                        s.removed_places.iter().partition(|p| self.free(p));
                    let slots: u64 = free.iter().map(|p| self.slots(p)).sum();
                    for p in &free {
                        self.absorb(p, &mut absorbed);
                    }
                    let summed = if slots == 0 { req.len().checked_sub(1)? } else { req.len() };
                    for p in &req[..summed] {
                        let v = fresh_sum(rem.clone(), &mut layers);
                        rem.add_scaled(&v, &-BigRational::one());
                        env.insert(p.as_str(), v);
                    }
                    if slots == 0 {
                        env.insert(req[summed].as_str(), rem);
                    } else if slots > 1 || summed == 0 {
                        // with one slot and an enclosing sum, the remainder
                        // is non-negative by the sum's bound
                        layers.push(Layer::Factor(Expr::Nos { k: slots, arg: rem }));
                    }
                }
                RuleKind::R if self.active[i] => {
                    let c = s.constraint.as_ref()?;
                    let p = s.removed_places.first()?;
                    let [(lhs, k)] = c.lhs.as_slice() else {
                        return None;
                    };
                    if lhs != p || *k <= 0 {
                        return None;
                    }
                    if c.rhs_terms.is_empty() {
                        let b = c.rhs_const;
                        if b < 0 || b % k != 0 {
                            return None;
                        }
                        params.push(Param {
                            name: String::new(),
                            place: p.clone(),
                            value: (b / k) as u64,
                        });
                        env.insert(p.as_str(), LinExpr::symbol(Symbol::Param(params.len() - 1)));
                        continue;
                    }
                    let mut e = LinExpr::constant(BigRational::from_integer(c.rhs_const.into()));
                    for (v, coef) in &c.rhs_terms {
                        e.add_scaled(env.get(v.as_str())?, &BigRational::from_integer((*coef).into()));
                    }
                    let e = {
                        let mut scaled = LinExpr::constant(BigRational::zero());
                        scaled.add_scaled(&e, &BigRational::new(BigInt::one(), BigInt::from(*k)));
                        scaled
                    };
                    if *k > 1 {
                        layers.push(Layer::Factor(Expr::Guard(e.clone())));
                    }
                    env.insert(p.as_str(), e);
                }
                RuleKind::L => {
                    let c = s.constraint.as_ref()?;
                    let p = s.removed_places.first()?;
                    if c.rhs_const < 0 || !c.rhs_terms.is_empty() {
                        return None;
                    }
                    params.push(Param {
                        name: String::new(),
                        place: p.clone(),
                        value: c.rhs_const as u64,
                    });
                    let v = fresh_sum(LinExpr::symbol(Symbol::Param(params.len() - 1)), &mut layers);
                    env.insert(p.as_str(), v);
                }
                _ => {}
            }
        }
        Some((layers, bound))
    }
}

fn fold(layers: Vec<Layer>) -> Expr {
    let mut body = Expr::one();
    for layer in layers.into_iter().rev() {
        body = match layer {
            Layer::Factor(f) => f.times(body),
            Layer::Sum(var, upper) => {
                if body.mentions(Symbol::Bound(var)) {
                    Expr::Sum {
                        var,
                        upper,
                        body: Box::new(body),
                    }
                } else {
                    // independent body: (upper + 1) copies of it
                    Expr::Nos { k: 2, arg: upper }.times(body)
                }
            }
        };
    }
    body
}

fn name_params(params: &mut [Param], places: &[String]) {
    let base: Vec<String> = if params.len() == 1 {
        vec!["n".to_string()]
    } else {
        (1..=params.len()).map(|i| format!("n{i}")).collect()
    };
    for (p, mut name) in params.iter_mut().zip(base) {
        while places.contains(&name) {
            name.push('\'');
        }
        p.name = name;
    }
}

/// Builds the count term for `steps` over the places of the net they lead to.
///
/// Markings of the places in `places` are the term's free variables; every
/// place removed by the steps is summed over or determined. Steps outside
/// the recognized shapes make the whole term an [`Expr::Enumerate`] over the
/// steps' constraints.
pub fn build_term(steps: &[ReductionStep], places: &[String]) -> CountTerm {
    let system = prefix_system(steps);
    let builder = Builder::new(steps);
    let mut params = Vec::new();
    match builder.layers(places, &mut params) {
        Some((layers, bound)) => {
            name_params(&mut params, places);
            CountTerm {
                expr: fold(layers),
                places: places.to_vec(),
                params,
                bound,
                system,
            }
        }
        None => CountTerm {
            expr: Expr::Enumerate(system.clone()),
            places: places.to_vec(),
            params: Vec::new(),
            bound: 0,
            system,
        },
    }
}

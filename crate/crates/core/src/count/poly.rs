use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Multivariate polynomial with exact rational coefficients.
///
/// Monomials are exponent vectors indexed like [`vars`](Self::vars); zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountPolynomial {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl CountPolynomial {
    pub fn zero(vars: Vec<String>) -> Self {
        CountPolynomial {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Vec<String>, c: BigRational) -> Self {
        let mut p = Self::zero(vars);
        let key = vec![0; p.vars.len()];
        p.insert(key, c);
        p
    }

    /// The polynomial `x_i`.
    pub fn var(vars: Vec<String>, i: usize) -> Self {
        let mut key = vec![0; vars.len()];
        key[i] = 1;
        let mut p = Self::zero(vars);
        p.insert(key, BigRational::one());
        p
    }

    /// `Σ coeffs[d] · name^d`.
    pub fn univariate(name: &str, coeffs: &[BigRational]) -> Self {
        let mut p = Self::zero(vec![name.to_string()]);
        for (d, c) in coeffs.iter().enumerate() {
            p.insert(vec![d as u32], c.clone());
        }
        p
    }

    fn insert(&mut self, key: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(k, c)| (k.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> BigRational {
        self.terms.get(exponents).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.iter().sum()).max().unwrap_or(0)
    }

    /// Degree in variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|k| k[i]).max().unwrap_or(0)
    }

    /// Coefficients in ascending degree, for polynomials in at most one variable.
    pub fn univariate_coefficients(&self) -> Option<Vec<BigRational>> {
        match self.vars.len() {
            0 => Some(vec![self.coefficient(&[])]),
            1 => {
                let mut out = vec![BigRational::zero(); self.degree() as usize + 1];
                for (k, c) in &self.terms {
                    out[k[0] as usize] = c.clone();
                }
                Some(out)
            }
            _ => None,
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        let mut out = Self::zero(self.vars.clone());
        if r.is_zero() {
            return out;
        }
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), c * r);
        }
        out
    }

    pub fn eval(&self, point: &[BigInt]) -> BigRational {
        assert_eq!(point.len(), self.vars.len(), "one value per variable");
        let mut powers: Vec<Vec<BigInt>> = point.iter().map(|x| vec![BigInt::one(), x.clone()]).collect();
        let mut total = BigRational::zero();
        for (k, c) in &self.terms {
            let mut m = BigInt::one();
            for (i, &e) in k.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = &mut powers[i];
                while pw.len() <= e as usize {
                    let next = pw.last().unwrap() * &point[i];
                    pw.push(next);
                }
                m *= &pw[e as usize];
            }
            total += c * BigRational::from_integer(m);
        }
        total
    }

    /// Evaluates at a point that must give a natural number.
    pub fn eval_natural(&self, point: &[BigInt]) -> Option<BigUint> {
        let v = self.eval(point);
        if v.is_integer() && !v.is_negative() {
            v.to_integer().to_biguint()
        } else {
            None
        }
    }

    pub fn eval_u64(&self, point: &[u64]) -> BigRational {
        let pt: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
        self.eval(&pt)
    }

    /// `Σ_{x_i = 0}^{upper} self`, where `upper` does not mention `x_i`.
    ///
    /// Powers of `x_i` are rewritten in the binomial basis,
    /// `s^j = Σ S(j,r) r! C(s,r)`, and `Σ_{s=0}^{U} C(s,r) = C(U+1,r+1)`.
    pub(crate) fn sum_over(&self, i: usize, upper: &CountPolynomial) -> CountPolynomial {
        let d = self.degree_in(i) as usize;
        let vars = self.vars.clone();
        let one = Self::constant(vars.clone(), BigRational::one());
        // binom[r] = C(U+1, r+1)
        let u1 = upper + &one;
        let mut binom = vec![u1.clone()];
        for r in 1..=d {
            let shifted = &u1 + &Self::constant(vars.clone(), BigRational::from_integer(-BigInt::from(r)));
            let next = (&binom[r - 1] * &shifted).scale(&BigRational::new(BigInt::one(), BigInt::from(r + 1)));
            binom.push(next);
        }
        let stirling = stirling2(d);
        // power_sums[j] = Σ_{s=0}^{U} s^j
        let mut power_sums = Vec::with_capacity(d + 1);
        for (j, row) in stirling.iter().enumerate() {
            let mut acc = Self::zero(vars.clone());
            let mut fact = BigInt::one();
            for (r, s) in row.iter().enumerate().take(j + 1) {
                if r > 0 {
                    fact *= BigInt::from(r);
                }
                if s.is_zero() {
                    continue;
                }
                acc = &acc + &binom[r].scale(&BigRational::from_integer(s * &fact));
            }
            power_sums.push(acc);
        }
        let mut by_power: Vec<CountPolynomial> = vec![Self::zero(vars.clone()); d + 1];
        for (k, c) in &self.terms {
            let mut rest = k.clone();
            let e = rest[i] as usize;
            rest[i] = 0;
            by_power[e].insert(rest, c.clone());
        }
        let mut out = Self::zero(vars);
        for (j, cj) in by_power.iter().enumerate() {
            if !cj.is_zero() {
                out = &out + &(cj * &power_sums[j]);
            }
        }
        out
    }

    /// Keeps only the listed variables; every other one must have degree 0.
    pub(crate) fn restrict(&self, keep: &[usize]) -> CountPolynomial {
        let vars = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let mut out = Self::zero(vars);
        for (k, c) in &self.terms {
            debug_assert!(k
                .iter()
                .enumerate()
                .all(|(i, &e)| e == 0 || keep.contains(&i)));
            out.insert(keep.iter().map(|&i| k[i]).collect(), c.clone());
        }
        out
    }
}

/// Rows `0..=d` of the Stirling numbers of the second kind.
fn stirling2(d: usize) -> Vec<Vec<BigInt>> {
    let mut rows = vec![vec![BigInt::one()]];
    for j in 1..=d {
        let prev = &rows[j - 1];
        let mut row = vec![BigInt::zero(); j + 1];
        for (r, cell) in row.iter_mut().enumerate().skip(1) {
            let a = prev.get(r).cloned().unwrap_or_default() * BigInt::from(r);
            let b = prev.get(r - 1).cloned().unwrap_or_default();
            *cell = a + b;
        }
        rows.push(row);
    }
    rows
}

impl Add for &CountPolynomial {
    type Output = CountPolynomial;

    fn add(self, other: &CountPolynomial) -> CountPolynomial {
        debug_assert_eq!(self.vars, other.vars);
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.clone());
        }
        out
    }
}

impl Mul for &CountPolynomial {
    type Output = CountPolynomial;

    fn mul(self, other: &CountPolynomial) -> CountPolynomial {
        debug_assert_eq!(self.vars, other.vars);
        let mut out = CountPolynomial::zero(self.vars.clone());
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k: Vec<u32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.insert(k, ca * cb);
            }
        }
        out
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for CountPolynomial {
    /// Descending total degree, e.g. `1/8 n^4 + 11/12 n^3 + 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut keys: Vec<&Vec<u32>> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (n, k) in keys.into_iter().enumerate() {
            let c = &self.terms[k];
            let neg = c.is_negative();
            match (n, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            let mono: Vec<String> = k
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        self.vars[i].clone()
                    } else {
                        format!("{}^{}", self.vars[i], e)
                    }
                })
                .collect();
            if mono.is_empty() {
                f.write_str(&fmt_rational(&abs))?;
            } else if abs.is_one() {
                f.write_str(&mono.join("*"))?;
            } else {
                write!(f, "{} {}", fmt_rational(&abs), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Rounds to three significant digits: `1.58e24`.
pub fn scientific(n: &BigUint) -> String {
    let digits = n.to_string();
    let exp = digits.len() - 1;
    let padded = format!("{digits:0<4}");
    let mut lead: u64 = padded[..3].parse().unwrap();
    let mut exp = exp;
    if padded.as_bytes()[3] >= b'5' {
        lead += 1;
    }
    if lead == 1000 {
        lead = 100;
        exp += 1;
    }
    format!("{}.{:02}e{}", lead / 100, lead % 100, exp)
}

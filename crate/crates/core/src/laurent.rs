//! Sparse multivariate Laurent polynomials with exact coefficients.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};

/// Exponent vector; entries may be negative.
pub type Exponent = Vec<i32>;

/// Coefficient ring for [`LaurentPoly`].
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Display
    + FromStr
    + Send
    + Sync
{
}

impl Coeff for BigInt {}
impl Coeff for BigRational {}
impl Coeff for i64 {}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LaurentPoly<C = BigInt> {
    vars: usize,
    terms: BTreeMap<Exponent, C>,
}

impl<C: Coeff> LaurentPoly<C> {
    pub fn zero(vars: usize) -> Self {
        assert!(vars > 0, "a Laurent polynomial needs at least one variable");
        LaurentPoly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: C) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars], &c);
        p
    }

    pub fn one(vars: usize) -> Self {
        Self::constant(vars, C::one())
    }

    pub fn monomial(exp: Exponent, c: C) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, &c);
        p
    }

    /// `x_i^power` in a ring of `vars` variables.
    pub fn var_power(vars: usize, i: usize, power: i32) -> Self {
        assert!(i < vars);
        let mut e = vec![0; vars];
        e[i] = power;
        Self::monomial(e, C::one())
    }

    /// The symmetric sum `Σ_i (x_i + 1/x_i)`.
    pub fn symmetric_sum(vars: usize) -> Self {
        let mut p = Self::zero(vars);
        for i in 0..vars {
            for s in [1, -1] {
                let mut e = vec![0; vars];
                e[i] = s;
                p.add_term(e, &C::one());
            }
        }
        p
    }

    pub fn from_terms<I>(vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, C)>,
    {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            if e.len() != vars {
                return Err(Error::DimensionMismatch { expected: vars, got: e.len() });
            }
            p.add_term(e, &c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Exponent, C> {
        self.terms
    }

    pub fn coefficient_of(&self, e: &[i32]) -> Result<C> {
        if e.len() != self.vars {
            return Err(Error::DimensionMismatch { expected: self.vars, got: e.len() });
        }
        Ok(self.terms.get(e).cloned().unwrap_or_else(C::zero))
    }

    pub fn add_term(&mut self, e: Exponent, c: &C) {
        debug_assert_eq!(e.len(), self.vars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(e, c.clone());
            }
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, v)| (e.clone(), v.clone() * c))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        LaurentPoly { vars: self.vars, terms }
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> LaurentPoly<D> {
        let mut out = LaurentPoly::zero(self.vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &f(c));
        }
        out
    }

    /// Re-index exponents through `f`, summing coefficients that collide.
    pub fn map_exponents(&self, new_vars: usize, f: impl Fn(&[i32]) -> Exponent) -> Self {
        let mut out = Self::zero(new_vars);
        for (e, c) in &self.terms {
            out.add_term(f(e), c);
        }
        out
    }

    /// Value at `x_1 = … = x_k = 1`.
    pub fn sum_coefficients(&self) -> C {
        self.terms.values().fold(C::zero(), |acc, c| acc + c)
    }

    /// Substitute `x_i → 1/x_i` for every variable.
    pub fn invert_variables(&self) -> Self {
        self.map_exponents(self.vars, |e| e.iter().map(|v| -v).collect())
    }

    /// Product with `Σ_i (x_i + 1/x_i)`, the workhorse of every Chebyshev recurrence.
    pub fn mul_symmetric_sum(&self) -> Self {
        let mut out = Self::zero(self.vars);
        for (e, c) in &self.terms {
            for i in 0..self.vars {
                for s in [1, -1] {
                    let mut f = e.clone();
                    f[i] += s;
                    out.add_term(f, c);
                }
            }
        }
        out
    }

    /// Smallest and largest value of `Σ e_i` over stored terms.
    pub fn total_degree_range(&self) -> Option<(i32, i32)> {
        let sums = self.terms.keys().map(|e| e.iter().sum::<i32>());
        sums.fold(None, |acc, s| match acc {
            None => Some((s, s)),
            Some((lo, hi)) => Some((lo.min(s), hi.max(s))),
        })
    }

    /// Coefficients of a univariate polynomial as a dense vector starting at `lowest`.
    pub fn univariate_dense(&self) -> Result<(i32, Vec<C>)> {
        if self.vars != 1 {
            return invalid("univariate_dense needs a one-variable polynomial");
        }
        let Some((lo, hi)) = self.total_degree_range() else {
            return Ok((0, Vec::new()));
        };
        let mut v = vec![C::zero(); (hi - lo + 1) as usize];
        for (e, c) in &self.terms {
            v[(e[0] - lo) as usize] = c.clone();
        }
        Ok((lo, v))
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut row: Vec<Value> = e.iter().map(|v| json!(v)).collect();
                row.push(Value::String(c.to_string()));
                Value::Array(row)
            })
            .collect();
        json!({ "vars": self.vars, "terms": terms })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let vars = v
            .get("vars")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing \"vars\"".into()))? as usize;
        if vars == 0 {
            return invalid("\"vars\" must be positive");
        }
        let rows = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing \"terms\"".into()))?;
        let mut p = Self::zero(vars);
        for row in rows {
            let row = row.as_array().ok_or_else(|| Error::Parse("term is not an array".into()))?;
            if row.len() != vars + 1 {
                return Err(Error::DimensionMismatch { expected: vars + 1, got: row.len() });
            }
            let mut e = Vec::with_capacity(vars);
            for x in &row[..vars] {
                let x = x.as_i64().ok_or_else(|| Error::Parse("exponent is not an integer".into()))?;
                e.push(i32::try_from(x).map_err(|_| Error::Parse("exponent out of range".into()))?);
            }
            let c = row[vars]
                .as_str()
                .ok_or_else(|| Error::Parse("coefficient must be a decimal string".into()))?;
            let c = C::from_str(c).map_err(|_| Error::Parse(format!("bad coefficient {c:?}")))?;
            p.add_term(e, &c);
        }
        Ok(p)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }
}

impl<C: Coeff> Display for LaurentPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, p) in e.iter().enumerate() {
                if *p != 0 {
                    write!(f, "*x{}^{}", i + 1, p)?;
                }
            }
        }
        Ok(())
    }
}

impl<C: Coeff> Add for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn add(self, rhs: Self) -> LaurentPoly<C> {
        assert_eq!(self.vars, rhs.vars, "variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl<C: Coeff> Sub for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn sub(self, rhs: Self) -> LaurentPoly<C> {
        assert_eq!(self.vars, rhs.vars, "variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), &-c.clone());
        }
        out
    }
}

impl<C: Coeff> Neg for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn neg(self) -> LaurentPoly<C> {
        self.map_coeffs(|c| -c.clone())
    }
}

const PAR_THRESHOLD: usize = 4096;

fn mul_chunk<C: Coeff>(
    vars: usize,
    lhs: &[(&Exponent, &C)],
    rhs: &BTreeMap<Exponent, C>,
) -> LaurentPoly<C> {
    let mut out = LaurentPoly::zero(vars);
    for (ea, ca) in lhs {
        for (eb, cb) in rhs {
            let e: Exponent = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
            out.add_term(e, &((*ca).clone() * cb));
        }
    }
    out
}

impl<C: Coeff> Mul for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn mul(self, rhs: Self) -> LaurentPoly<C> {
        assert_eq!(self.vars, rhs.vars, "variable count mismatch");
        let lhs: Vec<(&Exponent, &C)> = self.terms.iter().collect();
        if lhs.len() * rhs.terms.len() < PAR_THRESHOLD {
            return mul_chunk(self.vars, &lhs, &rhs.terms);
        }
        // Exact addition is associative and commutative, so the merged result
        // does not depend on how rayon schedules the chunks.
        let chunk = (lhs.len() / rayon::current_num_threads().max(1)).max(1);
        lhs.par_chunks(chunk)
            .map(|part| mul_chunk(self.vars, part, &rhs.terms))
            .reduce(|| LaurentPoly::zero(self.vars), |a, b| &a + &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1(terms: &[(i32, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(1, terms.iter().map(|&(e, c)| (vec![e], BigInt::from(c)))).unwrap()
    }

    #[test]
    fn coefficient_lookup() {
        let p = p1(&[(1, 1), (-1, 1)]);
        assert_eq!(p.coefficient_of(&[1]).unwrap(), BigInt::from(1));
        assert_eq!(p.coefficient_of(&[0]).unwrap(), BigInt::from(0));
        assert!(matches!(p.coefficient_of(&[0, 0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_terms_are_dropped() {
        let p = p1(&[(1, 1), (2, 3)]);
        let q = p1(&[(1, -1)]);
        let s = &p + &q;
        assert_eq!(s.len(), 1);
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn product_of_binomials() {
        let s = p1(&[(1, 1), (-1, 1)]);
        let sq = &s * &s;
        assert_eq!(sq, p1(&[(2, 1), (0, 2), (-2, 1)]));
        assert_eq!(s.mul_symmetric_sum(), sq);
    }

    #[test]
    fn json_is_canonical() {
        let p = LaurentPoly::from_terms(
            2,
            vec![(vec![1, -1], BigInt::from(-7)), (vec![-2, 0], BigInt::from(3))],
        )
        .unwrap();
        let s = p.to_json_string();
        assert_eq!(s, r#"{"terms":[[-2,0,"3"],[1,-1,"-7"]],"vars":2}"#);
        let q = LaurentPoly::<BigInt>::from_json_str(&s).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_json_string(), s);
    }

    #[test]
    fn json_rejects_malformed() {
        assert!(LaurentPoly::<BigInt>::from_json_str(r#"{"vars":1,"terms":[[1,2,"3"]]}"#).is_err());
        assert!(LaurentPoly::<BigInt>::from_json_str(r#"{"vars":1,"terms":[[1,3]]}"#).is_err());
        assert!(LaurentPoly::<BigInt>::from_json_str(r#"{"vars":0,"terms":[]}"#).is_err());
    }

    #[test]
    fn large_product_matches_sequential() {
        let s = LaurentPoly::<BigInt>::symmetric_sum(3);
        let mut a = LaurentPoly::<BigInt>::one(3);
        for _ in 0..6 {
            a = a.mul_symmetric_sum();
        }
        let par = &a * &a;
        let lhs: Vec<_> = a.terms().collect();
        let seq = mul_chunk(3, &lhs, &a.terms);
        assert_eq!(par, seq);
        assert_eq!(par.sum_coefficients(), BigInt::from(6).pow(12));
        let _ = s;
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        prop::collection::vec(((-4i32..5, -4i32..5), -20i64..21), 0..8).prop_map(|v| {
            LaurentPoly::from_terms(2, v.into_iter().map(|((a, b), c)| (vec![a, b], BigInt::from(c))))
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!(a.terms().all(|(_, v)| !v.is_zero()));
        }

        #[test]
        fn json_round_trip(a in arb_poly()) {
            let s = a.to_json_string();
            let b = LaurentPoly::<BigInt>::from_json_str(&s).unwrap();
            prop_assert_eq!(b.to_json_string(), s);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn evaluation_at_one_is_multiplicative(a in arb_poly(), b in arb_poly()) {
            prop_assert_eq!((&a * &b).sum_coefficients(), a.sum_coefficients() * b.sum_coefficients());
        }
    }
}

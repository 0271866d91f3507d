//! Exact arithmetic in `Z[ζ_p]`, stored as residues modulo `x^p − 1`.
//!
//! Used to evaluate roots-of-unity filters without floating point. An element is a
//! rational integer iff its non-constant coordinates are all equal (because
//! `1 + ζ + … + ζ^{p−1} = 0`).

use num_bigint::BigInt;
use num_traits::Zero;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyclotomic {
    coeffs: Vec<BigInt>,
}

impl Cyclotomic {
    pub fn zero(p: usize) -> Self {
        Cyclotomic { coeffs: vec![BigInt::zero(); p] }
    }

    pub fn integer(p: usize, v: BigInt) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[0] = v;
        z
    }

    /// `ζ^j`.
    pub fn root_power(p: usize, j: i64) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[j.rem_euclid(p as i64) as usize] = BigInt::from(1);
        z
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, o: &Self) -> Self {
        Cyclotomic { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Cyclotomic { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Cyclotomic { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.order();
        let mut out = Self::zero(p);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out.coeffs[(i + j) % p] += a * b;
                }
            }
        }
        out
    }

    /// Multiply by `ζ^j` (a cyclic shift).
    pub fn shift(&self, j: i64) -> Self {
        let p = self.order();
        let mut out = Self::zero(p);
        let j = j.rem_euclid(p as i64) as usize;
        for (i, a) in self.coeffs.iter().enumerate() {
            out.coeffs[(i + j) % p] = a.clone();
        }
        out
    }

    /// The rational integer this element equals, if it is one.
    pub fn as_integer(&self) -> Option<BigInt> {
        let t = &self.coeffs[1];
        if self.coeffs[1..].iter().all(|c| c == t) {
            Some(&self.coeffs[0] - t)
        } else {
            None
        }
    }
}

//! Chebyshev polynomials and the Laurent generating functions built from them.
//!
//! `R_n(c; x_1..x_k) = T_n((c/2k) Σ(x_i + 1/x_i))` and `S_n` likewise with `U_n`.
//! For rational `c = a/b` everything is computed over the integers: with
//! `q = 2kb` and `s = Σ(x_i + 1/x_i)` the polynomials `W_n = q^n R_n` obey
//! `W_{n+1} = 2as·W_n − q²·W_{n−1}`.

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Result};
use crate::laurent::LaurentPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// `T_n`, first kind.
    First,
    /// `U_n`, second kind.
    Second,
}

fn x_poly() -> LaurentPoly {
    LaurentPoly::var_power(1, 0, 1)
}

fn chebyshev(kind: Kind, n: usize) -> LaurentPoly {
    let two_x = x_poly().scale(&BigInt::from(2));
    let mut prev = LaurentPoly::one(1);
    if n == 0 {
        return prev;
    }
    let mut cur = match kind {
        Kind::First => x_poly(),
        Kind::Second => two_x.clone(),
    };
    for _ in 1..n {
        let next = &(&two_x * &cur) - &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `T_n` from the three-term recurrence.
pub fn cheb_t(n: usize) -> LaurentPoly {
    chebyshev(Kind::First, n)
}

/// `U_n` from the three-term recurrence.
pub fn cheb_u(n: usize) -> LaurentPoly {
    chebyshev(Kind::Second, n)
}

/// Closed-form coefficient of `x^{n−2m}` in `T_n`.
pub fn cheb_coeff(n: usize, m: usize) -> Result<BigInt> {
    if m > n / 2 {
        return invalid(format!("m = {m} exceeds floor(n/2) = {}", n / 2));
    }
    if n == 0 {
        return Ok(BigInt::one());
    }
    // (n/(n−m))·C(n−m, m)·2^{n−2m−1}, kept integral by folding the halving into the division.
    let num = BigInt::from(n) * binomial(BigInt::from(n - m), BigInt::from(m)) << (n - 2 * m);
    let v = num / (BigInt::from(2 * (n - m)));
    Ok(if m % 2 == 1 { -v } else { v })
}

/// Integer-scaled sequence `q^j · P_j(c; x_1..x_k)` for `j = 0..=n_max`, with common ratio `q = 2k·den(c)`.
pub fn scaled_sequence(kind: Kind, n_max: usize, c: &BigRational, k: usize) -> (Vec<LaurentPoly>, BigInt) {
    assert!(k > 0);
    let a = c.numer().clone();
    let q = BigInt::from(2 * k) * c.denom();
    let q2 = &q * &q;
    let mut seq = vec![LaurentPoly::one(k)];
    if n_max == 0 {
        return (seq, q);
    }
    let s = LaurentPoly::<BigInt>::symmetric_sum(k);
    let first = match kind {
        Kind::First => s.scale(&a),
        Kind::Second => s.scale(&(&a * 2)),
    };
    seq.push(first);
    let two_a = &a * 2;
    for j in 1..n_max {
        let next = &seq[j].mul_symmetric_sum().scale(&two_a) - &seq[j - 1].scale(&q2);
        seq.push(next);
    }
    (seq, q)
}

fn unscale(w: &LaurentPoly, q_pow: &BigInt) -> LaurentPoly<BigRational> {
    w.map_coeffs(|c| BigRational::new(c.clone(), q_pow.clone()))
}

/// `R_n(c; x_1..x_k)` with exact rational coefficients.
pub fn r_poly(n: usize, c: &BigRational, k: usize) -> LaurentPoly<BigRational> {
    let (seq, q) = scaled_sequence(Kind::First, n, c, k);
    unscale(&seq[n], &num_traits::pow(q, n))
}

/// `S_n(c; x_1..x_k)` with exact rational coefficients.
pub fn s_poly(n: usize, c: &BigRational, k: usize) -> LaurentPoly<BigRational> {
    let (seq, q) = scaled_sequence(Kind::Second, n, c, k);
    unscale(&seq[n], &num_traits::pow(q, n))
}

/// Power sums `p_j = μ_1^j + μ_2^j` of the roots of `z² − s·z + d`, for `j = 0..=n_max`.
pub fn power_sum_sequence(s: &LaurentPoly, d: &BigInt, n_max: usize) -> Vec<LaurentPoly> {
    let vars = s.vars();
    let mut seq = vec![LaurentPoly::constant(vars, BigInt::from(2))];
    if n_max >= 1 {
        seq.push(s.clone());
    }
    for j in 2..=n_max {
        let next = &(s * &seq[j - 1]) - &seq[j - 2].scale(d);
        seq.push(next);
    }
    seq
}

fn free_group_correction(r: usize, len: usize) -> BigInt {
    if len % 2 == 0 {
        BigInt::from(2 * (r - 1))
    } else {
        BigInt::zero()
    }
}

/// Free-group counting series for lengths `0..=n_max` under an arbitrary substitution:
/// `s` must be the image of `Σ(x_i + 1/x_i)`.
pub fn free_group_series_with(s: &LaurentPoly, r: usize, n_max: usize) -> Result<Vec<LaurentPoly>> {
    if r < 2 {
        return invalid("rank must be at least 2");
    }
    let d = BigInt::from(2 * r - 1);
    let mut seq = power_sum_sequence(s, &d, n_max);
    let zero = vec![0; s.vars()];
    for (len, p) in seq.iter_mut().enumerate() {
        p.add_term(zero.clone(), &free_group_correction(r, len));
    }
    Ok(seq)
}

/// Counts of cyclically reduced words of length `k_len` in `F_r` keyed by abelianization.
///
/// `k_len = 0` is returned as the formula's value `2r` at the origin, which does not count
/// the empty word; see [`is_degenerate_length`].
pub fn scaled_free_group_series(k_len: usize, r: usize) -> Result<LaurentPoly> {
    if r < 2 {
        return invalid("rank must be at least 2");
    }
    let mut seq = free_group_series_with(&LaurentPoly::symmetric_sum(r), r, k_len)?;
    Ok(seq.swap_remove(k_len))
}

pub fn is_degenerate_length(k_len: usize) -> bool {
    k_len == 0
}

/// Coefficient of `x^k` in `R_n(c; x)` from the explicit binomial expansion.
pub fn explicit_coefficient(n: usize, k: i64, c: &BigRational) -> BigRational {
    let nn = n as i64;
    if k.abs() > nn || (nn - k).rem_euclid(2) == 1 {
        return BigRational::zero();
    }
    if n == 0 {
        return BigRational::one();
    }
    let c_inv2 = -(c * c).recip();
    let mut total = BigRational::zero();
    for m in 0..=n / 2 {
        let top = nn - 2 * m as i64;
        let b2 = (top - k) / 2;
        if b2 < 0 || b2 > top {
            continue;
        }
        let w = BigRational::new(
            BigInt::from(n) * binomial(BigInt::from(n - m), BigInt::from(m)),
            BigInt::from(n - m),
        ) * BigRational::from_integer(binomial(BigInt::from(top), BigInt::from(b2)));
        total += num_traits::pow(c_inv2.clone(), m) * w;
    }
    // The leading factor is c^n / 2: T_n carries 2^{n−2m−1}, one power of two short of (c/2)^{n−2m}·2^{n−2m}.
    total * num_traits::pow(c.clone(), n) / BigRational::from_integer(BigInt::from(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositivityCheck {
    /// Coefficients of `R_n` positive on the parity-support, zero elsewhere.
    SignR,
    /// Same for `S_n`; this is inequality (a) on the `U_n` coefficients.
    SignS,
    /// `a_n^e > a_{n−1}^{e±u_i}` on the support.
    Neighbour,
    /// `a_n^e > a_{n−2}^e` on the support.
    TwoStep,
}

#[derive(Clone, Debug)]
pub struct PositivityViolation {
    pub check: PositivityCheck,
    pub n: usize,
    pub exponent: Vec<i32>,
}

#[derive(Clone, Debug)]
pub struct PositivityReport {
    pub n_max: usize,
    pub c: BigRational,
    pub k: usize,
    pub violations: Vec<PositivityViolation>,
    /// Checked support sizes, n = 0..=n_max.
    pub support_sizes: Vec<usize>,
}

impl PositivityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: PositivityCheck) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }

    pub fn first(&self, check: PositivityCheck) -> Option<&PositivityViolation> {
        self.violations.iter().find(|v| v.check == check)
    }
}

/// Number of `e ∈ Z^k` with `Σ|e_i| ≤ n` and `Σe_i ≡ n (mod 2)`.
fn support_size(n: usize, k: usize) -> usize {
    // ways[m] = #{e : Σ|e_i| = m}
    let mut ways = vec![0usize; n + 1];
    ways[0] = 1;
    for _ in 0..k {
        let mut next = vec![0usize; n + 1];
        for (m, w) in ways.iter().enumerate() {
            if *w == 0 {
                continue;
            }
            next[m] += w;
            for j in 1..=n - m {
                next[m + j] += 2 * w;
            }
        }
        ways = next;
    }
    ways.iter().enumerate().filter(|(m, _)| (n - m) % 2 == 0).map(|(_, w)| w).sum()
}

fn in_support(e: &[i32], n: usize) -> bool {
    let l1: i64 = e.iter().map(|v| v.abs() as i64).sum();
    l1 <= n as i64 && (n as i64 - l1) % 2 == 0
}

fn sign_check(
    seq: &[LaurentPoly],
    check: PositivityCheck,
    out: &mut Vec<PositivityViolation>,
    sizes: &mut Vec<usize>,
) {
    let k = seq[0].vars();
    for (n, w) in seq.iter().enumerate() {
        let mut good = 0usize;
        for (e, c) in w.terms() {
            if in_support(e, n) && c.is_positive() {
                good += 1;
            } else {
                out.push(PositivityViolation { check, n, exponent: e.clone() });
            }
        }
        let expected = support_size(n, k);
        if sizes.len() <= n {
            sizes.push(expected);
        }
        if good < expected {
            // Missing support points are zero coefficients where a positive one is required;
            // locate them only when needed.
            let zero = vec![0i32; k];
            let mut stack = vec![zero];
            let mut seen = std::collections::HashSet::new();
            while let Some(e) = stack.pop() {
                if !seen.insert(e.clone()) {
                    continue;
                }
                if in_support(&e, n) && w.coefficient_of(&e).map(|c| c.is_zero()).unwrap_or(false) {
                    out.push(PositivityViolation { check, n, exponent: e.clone() });
                }
                for i in 0..k {
                    for s in [1, -1] {
                        let mut f = e.clone();
                        f[i] += s;
                        if f.iter().map(|v| v.abs() as usize).sum::<usize>() <= n {
                            stack.push(f);
                        }
                    }
                }
            }
        }
    }
}

/// Checks the sign pattern of `R_n`, `S_n` and the auxiliary inequalities on the `U_n`
/// coefficients, for `n ≤ n_max`, in `k` variables.
pub fn positivity_report(n_max: usize, c: &BigRational, k: usize) -> Result<PositivityReport> {
    if k == 0 {
        return invalid("k must be positive");
    }
    let mut violations = Vec::new();
    let mut sizes = Vec::new();
    let (t_seq, _) = scaled_sequence(Kind::First, n_max, c, k);
    sign_check(&t_seq, PositivityCheck::SignR, &mut violations, &mut sizes);
    drop(t_seq);
    let (u_seq, q) = scaled_sequence(Kind::Second, n_max, c, k);
    sign_check(&u_seq, PositivityCheck::SignS, &mut violations, &mut sizes);
    // With a_n = V_n / q^n, a_n^e > a_{n−1}^f  ⇔  V_n^e > q·V_{n−1}^f.
    let q2 = &q * &q;
    for n in 1..=n_max {
        for (e, v) in u_seq[n].terms() {
            if !in_support(e, n) {
                continue;
            }
            let mut worst = BigInt::zero();
            for i in 0..k {
                for s in [1, -1] {
                    let mut f = e.clone();
                    f[i] += s;
                    let w = u_seq[n - 1].coefficient_of(&f).unwrap_or_default() * &q;
                    if w > worst {
                        worst = w;
                    }
                }
            }
            if *v <= worst {
                violations.push(PositivityViolation {
                    check: PositivityCheck::Neighbour,
                    n,
                    exponent: e.clone(),
                });
            }
            if n >= 2 {
                let w = u_seq[n - 2].coefficient_of(e).unwrap_or_default() * &q2;
                if *v <= w {
                    violations.push(PositivityViolation {
                        check: PositivityCheck::TwoStep,
                        n,
                        exponent: e.clone(),
                    });
                }
            }
        }
    }
    Ok(PositivityReport { n_max, c: c.clone(), k, violations, support_sizes: sizes })
}

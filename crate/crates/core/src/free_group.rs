//! Words in the free group `F_r`, enumeration oracles, and homology-class counts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::Value;

use crate::chebyshev::{free_group_series_with, scaled_free_group_series};
use crate::cyclotomic::Cyclotomic;
use crate::error::{invalid, Error, Result};
use crate::laurent::LaurentPoly;
use crate::stats::normal_pdf;

/// A word over `a_1..a_r` and their inverses; `+i` is `a_i`, `−i` is `A_i = a_i⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    rank: usize,
    letters: Vec<i32>,
}

impl Word {
    pub fn new(rank: usize, letters: Vec<i32>) -> Result<Self> {
        if rank == 0 {
            return invalid("rank must be positive");
        }
        if let Some(l) = letters.iter().find(|l| **l == 0 || l.unsigned_abs() as usize > rank) {
            return invalid(format!("letter {l} outside ±1..±{rank}"));
        }
        Ok(Word { rank, letters })
    }

    /// Parse `a b A B …` style words: lowercase letters are generators, uppercase their inverses.
    pub fn parse(rank: usize, s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for ch in s.chars().filter(|c| !c.is_whitespace()) {
            let (base, sign) = if ch.is_ascii_lowercase() {
                (ch as u8 - b'a', 1)
            } else if ch.is_ascii_uppercase() {
                (ch as u8 - b'A', -1)
            } else {
                return invalid(format!("unexpected character {ch:?}"));
            };
            letters.push(sign * (base as i32 + 1));
        }
        Word::new(rank, letters)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| w[0] != -w[1])
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.letters.first(), self.letters.last()) {
                (Some(a), Some(b)) => self.letters.len() == 1 || *a != -*b,
                _ => true,
            }
    }

    pub fn reduce(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { rank: self.rank, letters: out }
    }

    /// Freely reduce, then strip inverse pairs from both ends (a conjugation).
    pub fn cyclic_reduce(&self) -> Word {
        let w = self.reduce().letters;
        let (mut lo, mut hi) = (0usize, w.len());
        while hi - lo >= 2 && w[lo] == -w[hi - 1] {
            lo += 1;
            hi -= 1;
        }
        Word { rank: self.rank, letters: w[lo..hi].to_vec() }
    }

    pub fn abelianization(&self) -> Vec<i32> {
        abelianization_of(self.rank, &self.letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.letters {
            let base = (l.unsigned_abs() - 1) as u8;
            let ch = if l > 0 { b'a' + base } else { b'A' + base };
            write!(f, "{}", ch as char)?;
        }
        Ok(())
    }
}

pub fn abelianization_of(rank: usize, letters: &[i32]) -> Vec<i32> {
    let mut e = vec![0i32; rank];
    for &l in letters {
        e[(l.unsigned_abs() - 1) as usize] += l.signum();
    }
    e
}

fn alphabet(r: usize) -> Vec<i32> {
    (1..=r as i32).chain((1..=r as i32).map(|i| -i)).collect()
}

fn visit_from(r: usize, m: usize, first: i32, f: &mut impl FnMut(&[i32])) {
    let letters = alphabet(r);
    let mut buf = Vec::with_capacity(m);
    buf.push(first);
    fn rec(buf: &mut Vec<i32>, m: usize, letters: &[i32], f: &mut impl FnMut(&[i32])) {
        let last = *buf.last().unwrap();
        if buf.len() == m {
            if m == 1 || buf[0] != -last {
                f(buf);
            }
            return;
        }
        for &l in letters {
            if l != -last {
                buf.push(l);
                rec(buf, m, letters, f);
                buf.pop();
            }
        }
    }
    rec(&mut buf, m, &letters, f);
}

/// Calls `f` once for each cyclically reduced word of length `m` (depth-first over walks of `G_r`).
pub fn for_each_cyclically_reduced(r: usize, m: usize, mut f: impl FnMut(&[i32])) -> Result<()> {
    check_rank_len(r, m)?;
    for first in alphabet(r) {
        visit_from(r, m, first, &mut f);
    }
    Ok(())
}

fn check_rank_len(r: usize, m: usize) -> Result<()> {
    if r < 2 {
        return invalid("rank must be at least 2");
    }
    if m < 1 {
        return invalid("length must be at least 1");
    }
    Ok(())
}

/// Streaming enumeration of the cyclically reduced words of length `m`.
pub struct CyclicallyReducedWords {
    rank: usize,
    letters: Vec<i32>,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

pub fn enumerate_cyclically_reduced(r: usize, m: usize) -> Result<CyclicallyReducedWords> {
    check_rank_len(r, m)?;
    Ok(CyclicallyReducedWords { rank: r, letters: alphabet(r), idx: vec![0; m], started: false, done: false })
}

impl CyclicallyReducedWords {
    fn reduced_from(&mut self, pos: usize) -> bool {
        // Fill positions pos.. with the smallest admissible letters.
        for i in pos..self.idx.len() {
            let mut j = 0;
            while i > 0 && self.letters[j] == -self.letters[self.idx[i - 1]] {
                j += 1;
            }
            self.idx[i] = j;
        }
        true
    }

    fn advance(&mut self) -> bool {
        let n = self.letters.len();
        let mut pos = self.idx.len();
        while pos > 0 {
            pos -= 1;
            let mut j = self.idx[pos] + 1;
            while j < n && pos > 0 && self.letters[j] == -self.letters[self.idx[pos - 1]] {
                j += 1;
            }
            if j < n {
                self.idx[pos] = j;
                return self.reduced_from(pos + 1);
            }
        }
        false
    }

    fn accept(&self) -> bool {
        let m = self.idx.len();
        m == 1 || self.letters[self.idx[0]] != -self.letters[self.idx[m - 1]]
    }
}

impl Iterator for CyclicallyReducedWords {
    type Item = Word;
    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        loop {
            let ok = if self.started {
                self.advance()
            } else {
                self.started = true;
                self.reduced_from(0)
            };
            if !ok {
                self.done = true;
                return None;
            }
            if self.accept() {
                let letters = self.idx.iter().map(|&i| self.letters[i]).collect();
                return Some(Word { rank: self.rank, letters });
            }
        }
    }
}

/// `(2r−1)^m + 1 + (r−1)(1 + (−1)^m)`.
pub fn count_cyclically_reduced(r: usize, m: usize) -> Result<BigInt> {
    check_rank_len(r, m)?;
    let base = num_traits::pow(BigInt::from(2 * r - 1), m);
    let extra = if m % 2 == 0 { 2 * (r - 1) } else { 0 };
    Ok(base + 1 + extra)
}

/// Exact counts keyed by integer vectors (homology classes or residues).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    dim: usize,
    entries: BTreeMap<Vec<i32>, BigInt>,
}

impl CountTable {
    pub fn new(dim: usize) -> Self {
        CountTable { dim, entries: BTreeMap::new() }
    }

    pub fn from_poly(p: &LaurentPoly) -> Self {
        let mut t = CountTable::new(p.vars());
        for (e, c) in p.terms() {
            t.add(e.clone(), c);
        }
        t
    }

    pub fn to_poly(&self) -> LaurentPoly {
        LaurentPoly::from_terms(self.dim, self.entries.iter().map(|(e, c)| (e.clone(), c.clone())))
            .expect("table keys have the table dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&mut self, key: Vec<i32>, c: &BigInt) {
        debug_assert_eq!(key.len(), self.dim);
        if c.is_zero() {
            return;
        }
        let v = self.entries.entry(key.clone()).or_insert_with(BigInt::zero);
        *v += c;
        if v.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn get(&self, key: &[i32]) -> BigInt {
        self.entries.get(key).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<i32>, &BigInt)> {
        self.entries.iter()
    }

    pub fn total(&self) -> BigInt {
        self.entries.values().sum()
    }

    /// Re-key every entry through `f`, summing collisions.
    pub fn fold(&self, dim: usize, f: impl Fn(&[i32]) -> Vec<i32>) -> CountTable {
        let mut out = CountTable::new(dim);
        for (k, v) in &self.entries {
            out.add(f(k), v);
        }
        out
    }

    /// CSV with columns `e_1,…,e_d,count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("e_{i}")).collect();
        header.push("count".into());
        wr.write_record(&header).map_err(csv_err)?;
        for (k, v) in &self.entries {
            let mut row: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            row.push(v.to_string());
            wr.write_record(&row).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> Value {
        self.to_poly().to_json()
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Homology-class counts of cyclically reduced words of length `k`, from the generating function.
pub fn homology_table(r: usize, k: usize) -> Result<CountTable> {
    check_rank_len(r, k)?;
    Ok(CountTable::from_poly(&scaled_free_group_series(k, r)?))
}

/// The same table by brute-force enumeration, sharded by first letter.
pub fn homology_table_by_enumeration(r: usize, k: usize) -> Result<CountTable> {
    check_rank_len(r, k)?;
    let shards: Vec<HashMap<Vec<i32>, u64>> = alphabet(r)
        .into_par_iter()
        .map(|first| {
            let mut m: HashMap<Vec<i32>, u64> = HashMap::new();
            visit_from(r, k, first, &mut |w| *m.entry(abelianization_of(r, w)).or_default() += 1);
            m
        })
        .collect();
    let mut t = CountTable::new(r);
    for shard in shards {
        for (e, c) in shard {
            t.add(e, &BigInt::from(c));
        }
    }
    Ok(t)
}

pub fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn check_odd_prime(p: usize) -> Result<()> {
    if p == 2 || !is_prime(p) {
        return invalid(format!("{p} is not an odd prime"));
    }
    Ok(())
}

fn residue(v: i32, p: usize) -> i32 {
    v.rem_euclid(p as i32)
}

/// `W_{r,n,h}` for `h ∈ (Z/p)^r`, by folding the exact homology table.
pub fn modp_table(r: usize, n: usize, p: usize) -> Result<CountTable> {
    check_odd_prime(p)?;
    Ok(homology_table(r, n)?.fold(r, |e| e.iter().map(|&v| residue(v, p)).collect()))
}

fn all_residue_vectors(r: usize, p: usize) -> Vec<Vec<i32>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..p as i32).map(move |j| {
                    let mut w = v.clone();
                    w.push(j);
                    w
                })
            })
            .collect();
    }
    out
}

/// Power sums of the free-group recurrence evaluated at a single point of `Z[ζ_p]`.
fn free_group_value(s: &Cyclotomic, r: usize, n: usize) -> Cyclotomic {
    let p = s.order();
    let d = BigInt::from(2 * r - 1);
    let mut prev = Cyclotomic::integer(p, BigInt::from(2));
    let mut cur = s.clone();
    if n == 0 {
        cur = prev.clone();
    }
    for _ in 1..n {
        let next = s.mul(&cur).sub(&prev.scale(&d));
        prev = std::mem::replace(&mut cur, next);
    }
    if n % 2 == 0 {
        cur = cur.add(&Cyclotomic::integer(p, BigInt::from(2 * (r - 1))));
    }
    cur
}

fn divide_exact(z: &Cyclotomic, d: &BigInt) -> Result<BigInt> {
    let v = z
        .as_integer()
        .ok_or_else(|| Error::Singular("character sum is not a rational integer".into()))?;
    if (&v % d).is_zero() {
        Ok(v / d)
    } else {
        Err(Error::Singular("character sum is not divisible by the group order".into()))
    }
}

/// `W_{r,n,h}` from the roots-of-unity filter `p^{-r} Σ_j ζ^{−j·h} F(ζ^j)`, in exact cyclotomic arithmetic.
pub fn modp_table_characters(r: usize, n: usize, p: usize) -> Result<CountTable> {
    check_odd_prime(p)?;
    check_rank_len(r, n)?;
    let chars = all_residue_vectors(r, p);
    let values: Vec<Cyclotomic> = chars
        .par_iter()
        .map(|j| {
            let mut s = Cyclotomic::zero(p);
            for &ji in j {
                s = s.add(&Cyclotomic::root_power(p, ji as i64));
                s = s.add(&Cyclotomic::root_power(p, -(ji as i64)));
            }
            free_group_value(&s, r, n)
        })
        .collect();
    let order = num_traits::pow(BigInt::from(p), r);
    let mut t = CountTable::new(r);
    for h in &chars {
        let mut acc = Cyclotomic::zero(p);
        for (j, v) in chars.iter().zip(&values) {
            let dot: i64 = j.iter().zip(h).map(|(a, b)| (*a as i64) * (*b as i64)).sum();
            acc = acc.add(&v.shift(-dot));
        }
        t.add(h.clone(), &divide_exact(&acc, &order)?);
    }
    Ok(t)
}

/// Largest `|W_{n,h₂}/W_{n,h₁} − 1|` over all pairs of classes.
pub fn max_ratio_deviation(t: &CountTable, p: usize) -> f64 {
    let cells = num_traits::pow(p, t.dim());
    let counts: Vec<BigInt> = t.entries().map(|(_, c)| c.clone()).collect();
    if counts.len() < cells {
        return f64::INFINITY;
    }
    let lo = counts.iter().min().unwrap();
    let hi = counts.iter().max().unwrap();
    BigRational::new(hi - lo, lo.clone()).to_f64().unwrap_or(f64::INFINITY)
}

/// Largest `|W_{n,h}/W_{n,0} − 1|` over classes `h`.
pub fn max_deviation_from_zero_class(t: &CountTable) -> f64 {
    let zero = t.get(&vec![0; t.dim()]);
    if zero.is_zero() {
        return f64::INFINITY;
    }
    t.entries()
        .map(|(_, c)| BigRational::new((c - &zero).abs(), zero.clone()).to_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Univariate series in the total exponent `e_1 + … + e_r`.
pub fn total_exponent_series(r: usize, n: usize) -> Result<LaurentPoly> {
    let s = LaurentPoly::<BigInt>::symmetric_sum(1).scale(&BigInt::from(r));
    Ok(free_group_series_with(&s, r, n)?.swap_remove(n))
}

/// Univariate series in the first coordinate `e_1` alone (the marginal of the homology table).
pub fn marginal_series(r: usize, n: usize) -> Result<LaurentPoly> {
    let s = &LaurentPoly::<BigInt>::symmetric_sum(1) + &LaurentPoly::constant(1, BigInt::from(2 * (r - 1)));
    Ok(free_group_series_with(&s, r, n)?.swap_remove(n))
}

/// Counts `N_{n,q}` of words whose total exponent is `q mod p`.
pub fn total_exponent_modp(r: usize, n: usize, p: usize) -> Result<Vec<BigInt>> {
    check_odd_prime(p)?;
    check_rank_len(r, n)?;
    let mut out = vec![BigInt::zero(); p];
    for (e, c) in total_exponent_series(r, n)?.terms() {
        out[residue(e[0], p) as usize] += c;
    }
    Ok(out)
}

/// `N_{n,q} = p^{-1} Σ_j ζ^{−qj} ψ_n(ζ^j)`, with `ψ_n` evaluated exactly in `Z[ζ_p]`.
pub fn total_exponent_modp_characters(r: usize, n: usize, p: usize) -> Result<Vec<BigInt>> {
    check_odd_prime(p)?;
    check_rank_len(r, n)?;
    let psi: Vec<Cyclotomic> = (0..p as i64)
        .map(|j| {
            let s = Cyclotomic::root_power(p, j).add(&Cyclotomic::root_power(p, -j)).scale(&BigInt::from(r));
            free_group_value(&s, r, n)
        })
        .collect();
    let pb = BigInt::from(p);
    (0..p as i64)
        .map(|q| {
            let acc = psi
                .iter()
                .enumerate()
                .fold(Cyclotomic::zero(p), |acc, (j, v)| acc.add(&v.shift(-q * j as i64)));
            divide_exact(&acc, &pb)
        })
        .collect()
}

/// Residues sorted by `N_{n,q}` descending (ties by residue).
pub fn bias_ranking(r: usize, n: usize, p: usize) -> Result<Vec<(usize, BigInt)>> {
    let counts = total_exponent_modp(r, n, p)?;
    let mut v: Vec<(usize, BigInt)> = counts.into_iter().enumerate().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(v)
}

/// Groups a ranking into blocks of equal counts. `N_q = N_{−q}` always, so blocks are `±q` pairs.
pub fn bias_classes(ranking: &[(usize, BigInt)]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut last: Option<&BigInt> = None;
    for (q, c) in ranking {
        if last == Some(c) {
            out.last_mut().unwrap().push(*q);
        } else {
            out.push(vec![*q]);
        }
        last = Some(c);
    }
    for b in &mut out {
        b.sort_unstable();
    }
    out
}

/// The predicted order of the nonzero `±q` classes for even `n`: `±(p−2), ±(p−4), …`.
pub fn predicted_even_classes(p: usize) -> Vec<Vec<usize>> {
    (1..=(p - 1) / 2)
        .map(|j| {
            let a = p - 2 * j;
            let mut v = vec![a, p - a];
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

/// `c = r/√(2r−1)`, the parameter at which `R_n` counts words of `F_r`.
pub fn free_group_c(r: usize) -> f64 {
    r as f64 / ((2 * r - 1) as f64).sqrt()
}

/// Per-coordinate limiting variance as stated for the Gaussian limit: `(c/k)(1 + √((c+1)/(c−1)))`.
pub fn gaussian_limit_sigma2(c: f64, k: usize) -> Result<f64> {
    if !(c > 1.0) {
        return invalid("c must exceed 1");
    }
    if k == 0 {
        return invalid("k must be positive");
    }
    Ok(c / k as f64 * (1.0 + ((c + 1.0) / (c - 1.0)).sqrt()))
}

/// Per-coordinate variance obtained by expanding `log T_n(c·u/k)` to second order:
/// `c / (k √(c² − 1))`. Agrees with the exact tables and with the graph formula on `G_r`.
pub fn gaussian_limit_sigma2_derived(c: f64, k: usize) -> Result<f64> {
    if !(c > 1.0) {
        return invalid("c must exceed 1");
    }
    if k == 0 {
        return invalid("k must be positive");
    }
    Ok(c / (k as f64 * (c * c - 1.0).sqrt()))
}

#[derive(Clone, Debug)]
pub struct DistributionReport {
    pub r: usize,
    pub n: usize,
    /// Exact mean of `e_1` (zero by the `x → 1/x` symmetry).
    pub mean: BigRational,
    /// Exact `Var(e_1)/n`.
    pub variance: BigRational,
    pub sigma2: f64,
    /// L1 distance between the `e_1` marginal and `N(0, nσ²)` sampled on the integers.
    pub l1: f64,
}

impl DistributionReport {
    pub fn variance_f64(&self) -> f64 {
        self.variance.to_f64().unwrap_or(f64::NAN)
    }
}

/// Moments of the exact `e_1` marginal and its L1 distance to the limiting normal with the given variance.
pub fn empirical_distribution_report_with(r: usize, n: usize, sigma2: f64) -> Result<DistributionReport> {
    check_rank_len(r, n)?;
    if !(sigma2 > 0.0) {
        return invalid("sigma2 must be positive");
    }
    let m = marginal_series(r, n)?;
    let total = m.sum_coefficients();
    let mut first = BigInt::zero();
    let mut second = BigInt::zero();
    for (e, c) in m.terms() {
        let j = BigInt::from(e[0]);
        first += &j * c;
        second += &j * &j * c;
    }
    let mean = BigRational::new(first, total.clone());
    let ex2 = BigRational::new(second, total.clone());
    let variance = (ex2 - &mean * &mean) / BigRational::from_integer(BigInt::from(n));
    let sd = (n as f64 * sigma2).sqrt();
    let reach = n as i64 + (12.0 * sd).ceil() as i64;
    let mut l1 = 0.0;
    for j in -reach..=reach {
        let c = i32::try_from(j).ok().and_then(|j| m.coefficient_of(&[j]).ok()).unwrap_or_default();
        let mass = BigRational::new(c, total.clone()).to_f64().unwrap_or(0.0);
        l1 += (mass - normal_pdf(j as f64, 0.0, sd)).abs();
    }
    Ok(DistributionReport { r, n, mean, variance, sigma2, l1 })
}

/// As [`empirical_distribution_report_with`], using [`gaussian_limit_sigma2`] at the free-group `c`.
pub fn empirical_distribution_report(r: usize, n: usize) -> Result<DistributionReport> {
    let sigma2 = gaussian_limit_sigma2(free_group_c(r), r)?;
    empirical_distribution_report_with(r, n, sigma2)
}

/// Exact mean and `Var/n` of an integer-valued distribution.
pub fn exact_moments(dist: &BTreeMap<i64, BigInt>) -> (BigRational, BigRational) {
    let total: BigInt = dist.values().sum();
    let mut m1 = BigInt::zero();
    let mut m2 = BigInt::zero();
    for (v, c) in dist {
        let v = BigInt::from(*v);
        m1 += &v * c;
        m2 += &v * &v * c;
    }
    let mean = BigRational::new(m1, total.clone());
    let var = BigRational::new(m2, total) - &mean * &mean;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        Word::parse(2, s).unwrap()
    }

    #[test]
    fn cyclic_reduction_examples() {
        assert_eq!(Word::new(2, vec![1, 2, -1]).unwrap().cyclic_reduce().letters(), &[2]);
        assert!(Word::new(2, vec![1, -1]).unwrap().cyclic_reduce().is_empty());
        let fixed = Word::new(2, vec![1, 2, 1, -2]).unwrap();
        assert_eq!(fixed.cyclic_reduce(), fixed);
        assert!(Word::new(2, vec![3]).is_err());
        assert_eq!(w("abAB").to_string(), "abAB");
    }

    #[test]
    fn abelianization_examples() {
        assert_eq!(w("abA").abelianization(), vec![0, 1]);
        assert_eq!(w("abab").abelianization(), vec![2, 2]);
        assert_eq!(w("aB").abelianization(), vec![1, -1]);
    }

    #[test]
    fn word_counts() {
        assert_eq!(count_cyclically_reduced(2, 1).unwrap(), BigInt::from(4));
        assert_eq!(count_cyclically_reduced(2, 2).unwrap(), BigInt::from(12));
        // 3^10 + 1 + 2
        assert_eq!(count_cyclically_reduced(2, 10).unwrap(), BigInt::from(59052));
        let mut n = 0u64;
        for_each_cyclically_reduced(2, 10, |_| n += 1).unwrap();
        assert_eq!(n, 59052);
        assert_eq!(count_cyclically_reduced(3, 4).unwrap(), BigInt::from(630));
        assert!(count_cyclically_reduced(1, 3).is_err());
        assert!(count_cyclically_reduced(2, 0).is_err());
    }

    #[test]
    fn iterator_and_visitor_agree() {
        for (r, m) in [(2, 1), (2, 2), (2, 5), (3, 4)] {
            let from_iter: Vec<Word> = enumerate_cyclically_reduced(r, m).unwrap().collect();
            let mut from_visit = Vec::new();
            for_each_cyclically_reduced(r, m, |l| from_visit.push(Word::new(r, l.to_vec()).unwrap())).unwrap();
            let mut a = from_iter.clone();
            a.sort();
            from_visit.sort();
            assert_eq!(a, from_visit);
            a.dedup();
            assert_eq!(a.len(), from_iter.len());
            assert!(from_iter.iter().all(|w| w.is_cyclically_reduced() && w.len() == m));
            assert_eq!(BigInt::from(a.len()), count_cyclically_reduced(r, m).unwrap());
        }
        let one: Vec<String> = enumerate_cyclically_reduced(2, 1).unwrap().map(|w| w.to_string()).collect();
        assert_eq!(one, vec!["a", "b", "A", "B"]);
    }

    #[test]
    fn length_two_table() {
        let t = homology_table(2, 2).unwrap();
        let expect = [
            ([2, 0], 1),
            ([-2, 0], 1),
            ([0, 2], 1),
            ([0, -2], 1),
            ([1, 1], 2),
            ([1, -1], 2),
            ([-1, 1], 2),
            ([-1, -1], 2),
        ];
        assert_eq!(t.len(), 8);
        for (e, c) in expect {
            assert_eq!(t.get(&e), BigInt::from(c));
        }
        assert_eq!(t.total(), BigInt::from(12));
        let t1 = homology_table(2, 1).unwrap();
        assert_eq!(t1.len(), 4);
        assert!(t1.entries().all(|(_, c)| *c == BigInt::from(1)));
    }

    #[test]
    fn table_matches_enumeration() {
        for k in 1..=8 {
            assert_eq!(homology_table(2, k).unwrap(), homology_table_by_enumeration(2, k).unwrap());
        }
    }

    #[test]
    fn modp_small() {
        let t = modp_table(2, 2, 3).unwrap();
        assert_eq!(t.get(&[1, 1]), BigInt::from(2));
        assert_eq!(t.get(&[2, 2]), BigInt::from(2));
        assert_eq!(t.get(&[0, 0]), BigInt::zero());
        assert_eq!(t.get(&[2, 0]), BigInt::from(1));
        assert_eq!(t.total(), BigInt::from(12));
        assert_eq!(t, modp_table_characters(2, 2, 3).unwrap());
        assert!(modp_table(2, 2, 4).is_err());
        assert!(modp_table(2, 2, 2).is_err());
    }

    #[test]
    fn modp_fold_equals_characters() {
        for (r, n, p) in [(2, 7, 3), (2, 10, 5), (3, 6, 3), (2, 9, 7)] {
            assert_eq!(modp_table(r, n, p).unwrap(), modp_table_characters(r, n, p).unwrap());
        }
    }

    #[test]
    fn total_exponent_small() {
        let v = total_exponent_modp(2, 2, 3).unwrap();
        assert_eq!(v, vec![BigInt::from(4), BigInt::from(4), BigInt::from(4)]);
        for (r, n, p) in [(2, 11, 5), (3, 8, 3), (2, 20, 7)] {
            let direct = total_exponent_modp(r, n, p).unwrap();
            assert_eq!(direct, total_exponent_modp_characters(r, n, p).unwrap());
            let folded = homology_table(r, n).unwrap().fold(1, |e| vec![residue(e.iter().sum(), p)]);
            for q in 0..p {
                assert_eq!(direct[q], folded.get(&[q as i32]));
            }
            assert_eq!(direct.iter().sum::<BigInt>(), count_cyclically_reduced(r, n).unwrap());
        }
    }

    #[test]
    fn bias_grouping() {
        let ranking = bias_ranking(3, 40, 5).unwrap();
        let classes = bias_classes(&ranking);
        assert_eq!(classes[0], vec![0]);
        assert_eq!(classes[1..], predicted_even_classes(5)[..]);
        assert_eq!(predicted_even_classes(3), vec![vec![1, 2]]);
    }

    #[test]
    fn sigma2_formulas() {
        assert!((gaussian_limit_sigma2(3.0, 1).unwrap() - 3.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
        let big = 1e8;
        assert!((gaussian_limit_sigma2(big, 2).unwrap() / (2.0 * big / 2.0) - 1.0).abs() < 1e-6);
        assert!(gaussian_limit_sigma2(1.0, 2).is_err());
        assert!((gaussian_limit_sigma2_derived(free_group_c(2), 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((gaussian_limit_sigma2_derived(free_group_c(3), 3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn marginal_is_symmetric_with_exact_zero_mean() {
        for n in [5usize, 20, 51] {
            let rep = empirical_distribution_report(2, n).unwrap();
            assert!(rep.mean.is_zero());
        }
        let m = marginal_series(2, 6).unwrap();
        let t = homology_table(2, 6).unwrap().fold(1, |e| vec![e[0]]);
        assert_eq!(CountTable::from_poly(&m), t);
    }

    #[test]
    fn csv_output() {
        let t = homology_table(2, 1).unwrap();
        let s = t.to_csv_string();
        assert_eq!(s.lines().next(), Some("e_1,e_2,count"));
        assert_eq!(s.lines().count(), 5);
    }

    proptest! {
        #[test]
        fn cyclic_reduce_idempotent_and_conjugate(letters in prop::collection::vec(prop::sample::select(vec![1, 2, -1, -2]), 0..20)) {
            let w = Word::new(2, letters).unwrap();
            let c = w.cyclic_reduce();
            prop_assert!(c.is_cyclically_reduced());
            prop_assert_eq!(c.cyclic_reduce(), c.clone());
            // Conjugates share their abelianization.
            prop_assert_eq!(c.abelianization(), w.abelianization());
        }

        #[test]
        fn table_symmetries(k in 1usize..8, flip in 0usize..2) {
            let t = homology_table(2, k).unwrap();
            for (e, c) in t.entries() {
                let neg: Vec<i32> = e.iter().map(|v| -v).collect();
                prop_assert_eq!(&t.get(&neg), c);
                let swapped = vec![e[1], e[0]];
                prop_assert_eq!(&t.get(&swapped), c);
                let mut one = e.clone();
                one[flip] = -one[flip];
                prop_assert_eq!(&t.get(&one), c);
                prop_assert_eq!((k as i32 - e.iter().sum::<i32>()).rem_euclid(2), 0);
            }
        }
    }
}

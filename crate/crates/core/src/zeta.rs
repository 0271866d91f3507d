//! Conjugacy growth series of free groups, primitive-cycle zeta functions of graphs, and
//! the entropy `s₀(f)` of vertex-weighted cycles.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{hypothesis, invalid, Error, Result};
use crate::free_group::count_cyclically_reduced;
use crate::graph::MultiGraph;
use crate::linalg::{self, Mat, Vect};
use crate::perturbation::{perron_data, PerronData};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Power series truncated after `z^L`, exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<BigRational>,
}

impl PowerSeries {
    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![BigRational::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = BigRational::one();
        s
    }

    /// Coefficients `c_0..c_L`.
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a power series needs at least the constant term");
        PowerSeries { coeffs }
    }

    pub fn from_integers(c: &[BigInt]) -> Self {
        Self::from_coeffs(c.iter().map(|x| BigRational::from_integer(x.clone())).collect())
    }

    pub fn from_fn(order: usize, f: impl Fn(usize) -> BigRational) -> Self {
        PowerSeries { coeffs: (0..=order).map(f).collect() }
    }

    /// `1/(1 − a z^d)`.
    pub fn geometric(a: &BigRational, d: usize, order: usize) -> Self {
        assert!(d > 0, "geometric step must be positive");
        let mut s = Self::zero(order);
        let mut p = BigRational::one();
        let mut n = 0;
        while n <= order {
            s.coeffs[n] = p.clone();
            p *= a;
            n += d;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> BigRational {
        self.coeffs.get(n).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    fn common(&self, o: &Self) -> usize {
        self.order().min(o.order())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(self.common(o), |n| &self.coeffs[n] + &o.coeffs[n])
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(self.common(o), |n| &self.coeffs[n] - &o.coeffs[n])
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let l = self.common(o);
        let mut out = Self::zero(l);
        for i in 0..=l {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=l - i {
                if !o.coeffs[j].is_zero() {
                    out.coeffs[i + j] += &self.coeffs[i] * &o.coeffs[j];
                }
            }
        }
        out
    }

    /// `F(z^d)`, truncated at the same order.
    pub fn substitute_power(&self, d: usize) -> Self {
        assert!(d > 0, "substitution power must be positive");
        let mut out = Self::zero(self.order());
        for n in 0..=self.order() / d {
            out.coeffs[n * d] = self.coeffs[n].clone();
        }
        out
    }

    /// Term-wise `∫₀^z F(t)/t dt` (`c_n ↦ c_n/n`); the constant term of `F` is dropped and
    /// the result gets `constant` at `z⁰`.
    pub fn integrate_over_t(&self, constant: BigRational) -> Self {
        let mut out = Self::zero(self.order());
        out.coeffs[0] = constant;
        for n in 1..=self.order() {
            out.coeffs[n] = &self.coeffs[n] / rat(n as i64);
        }
        out
    }

    /// `1/F`, requiring a nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        if self.coeffs[0].is_zero() {
            return Err(Error::Singular("series with zero constant term is not invertible".into()));
        }
        let l = self.order();
        let mut out = Self::zero(l);
        let c0 = self.coeffs[0].clone();
        out.coeffs[0] = BigRational::one() / &c0;
        for n in 1..=l {
            let mut s = BigRational::zero();
            for i in 1..=n {
                s += &self.coeffs[i] * &out.coeffs[n - i];
            }
            out.coeffs[n] = -s / &c0;
        }
        Ok(out)
    }

    pub fn derivative(&self) -> Self {
        let l = self.order();
        Self::from_fn(l, |n| if n < l { &self.coeffs[n + 1] * rat(n as i64 + 1) } else { BigRational::zero() })
    }

    /// Integer coefficients, if all coefficients are integers.
    pub fn to_integers(&self) -> Option<Vec<BigInt>> {
        self.coeffs.iter().map(|c| c.is_integer().then(|| c.to_integer())).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "coefficient"]).map_err(csv_err)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            wr.write_record([i.to_string(), c.to_string()]).map_err(csv_err)?;
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
        json!({ "order": self.order(), "coefficients": self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>() })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn euler_phi(n: usize) -> usize {
    let mut m = n;
    let mut out = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if m > 1 {
        out -= out / m;
    }
    out
}

/// `N(r)` (elements of length `r`), `C(r)` (cyclically reduced words) and `CC(r)`
/// (conjugacy classes of length `r`) for `F_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingRow {
    pub r: usize,
    pub n: BigInt,
    pub c: BigInt,
    pub cc: BigInt,
}

/// `CC(r) = (1/r) Σ_{d|r} φ(d) C(r/d)`.
pub fn conjugacy_class_count(k: usize, r: usize) -> Result<BigInt> {
    if r == 0 {
        return Ok(BigInt::one());
    }
    let mut s = BigInt::zero();
    for d in 1..=r {
        if r % d == 0 {
            s += count_cyclically_reduced(k, r / d)? * BigInt::from(euler_phi(d));
        }
    }
    let (q, rem) = s.div_rem(&BigInt::from(r));
    if !rem.is_zero() {
        return Err(Error::InvalidArgument(format!("Burnside sum not divisible by {r}")));
    }
    Ok(q)
}

pub fn counting_functions_fk(k: usize, r_max: usize) -> Result<Vec<CountingRow>> {
    if k < 2 {
        return invalid("rank must be at least 2");
    }
    (1..=r_max)
        .map(|r| {
            let n = BigInt::from(2 * k) * BigInt::from(2 * k - 1).pow(r as u32 - 1);
            Ok(CountingRow { r, n, c: count_cyclically_reduced(k, r)?, cc: conjugacy_class_count(k, r)? })
        })
        .collect()
}

fn check_rank(k: usize) -> Result<()> {
    if k < 2 {
        return invalid("rank must be at least 2");
    }
    Ok(())
}

/// `Σ_{r≥1} C(r) z^r = 1/(1 − (2k−1)z) + 1/(1 − z) + 2(k−1)/(1 − z²) − 2k`.
pub fn series_c_fk(k: usize, order: usize) -> Result<PowerSeries> {
    check_rank(k)?;
    let a = rat(2 * k as i64 - 1);
    let one = BigRational::one();
    let s = PowerSeries::geometric(&a, 1, order)
        .add(&PowerSeries::geometric(&one, 1, order))
        .add(&PowerSeries::geometric(&one, 2, order).scale(&rat(2 * (k as i64 - 1))))
        .sub(&PowerSeries::one(order).scale(&rat(2 * k as i64)));
    Ok(s)
}

/// `𝓗 = 1 + Σ_d φ(d) 𝓕[C](z^d)`, only `d ≤ L` contributing.
pub fn series_h(k: usize, order: usize) -> Result<PowerSeries> {
    let c = series_c_fk(k, order)?;
    let mut h = PowerSeries::one(order);
    for d in 1..=order {
        h = h.add(&c.substitute_power(d).scale(&rat(euler_phi(d) as i64)));
    }
    Ok(h)
}

fn totient_geometric_sum(k: usize, order: usize) -> PowerSeries {
    let a = rat(2 * k as i64 - 1);
    let mut s = PowerSeries::zero(order);
    for d in 1..=order {
        let term = PowerSeries::geometric(&a, d, order).sub(&PowerSeries::one(order));
        s = s.add(&term.scale(&rat(euler_phi(d) as i64)));
    }
    s
}

/// `z^m/(1 − z^m)²`.
fn double_pole(m: usize, order: usize) -> PowerSeries {
    PowerSeries::from_fn(order, |n| if n >= m && n % m == 0 { rat((n / m) as i64) } else { BigRational::zero() })
}

/// `1 + (k−1)z²/(1 − z²)² + Σ_d φ(d)(1/(1 − (2k−1)z^d) − 1)`, as it is sometimes quoted.
pub fn series_h_printed(k: usize, order: usize) -> Result<PowerSeries> {
    check_rank(k)?;
    Ok(PowerSeries::one(order)
        .add(&double_pole(2, order).scale(&rat(k as i64 - 1)))
        .add(&totient_geometric_sum(k, order)))
}

/// Closed expansion of [`series_h`]:
/// `1 + z/(1 − z)² + 2(k−1)z²/(1 − z²)² + Σ_d φ(d)(1/(1 − (2k−1)z^d) − 1)`,
/// using `Σ_{d|n} φ(d) = n` on the two rational summands of `𝓕[C]`.
pub fn series_h_expanded(k: usize, order: usize) -> Result<PowerSeries> {
    check_rank(k)?;
    Ok(PowerSeries::one(order)
        .add(&double_pole(1, order))
        .add(&double_pole(2, order).scale(&rat(2 * (k as i64 - 1))))
        .add(&totient_geometric_sum(k, order)))
}

/// `𝓕[CC](z) = CC(0) + ∫₀^z (𝓗(t) − 𝓗(0))/t dt` with `CC(0) = 1`.
pub fn series_cc(k: usize, order: usize) -> Result<PowerSeries> {
    Ok(series_h(k, order)?.integrate_over_t(BigRational::one()))
}

/// Conjugacy growth series of a direct product.
pub fn series_product_cc(a: &PowerSeries, b: &PowerSeries) -> PowerSeries {
    a.mul(b)
}

/// `1 + 2z/(1 − z)` for `Z` with one generator.
pub fn series_cc_integers(order: usize) -> PowerSeries {
    PowerSeries::from_fn(order, |n| if n == 0 { BigRational::one() } else { rat(2) })
}

/// `|c_n|^{1/n}` at the largest multiple `n ≤ L` of `d` for `φ(d)(1/(1 − (2k−1)z^d) − 1)`.
pub fn totient_term_root_test(k: usize, d: usize, order: usize) -> Result<f64> {
    check_rank(k)?;
    if d == 0 || d > order {
        return invalid("need 1 ≤ d ≤ L");
    }
    let term = PowerSeries::geometric(&rat(2 * k as i64 - 1), d, order)
        .sub(&PowerSeries::one(order))
        .scale(&rat(euler_phi(d) as i64));
    let n = order / d * d;
    let c = term.coeff(n).to_f64().unwrap_or(f64::NAN);
    Ok(c.abs().powf(1.0 / n as f64))
}

/// `det(I − uA)` as integer coefficients of `1, u, …, u^n`.
pub fn zeta_det(g: &MultiGraph) -> Vec<BigInt> {
    linalg::charpoly_exact(&g.adjacency_i64())
}

/// `N_i` for `1 ≤ i ≤ L` from `Σ N_i u^i = −u (d/du) log det(I − uA)` (index 0 unused, set to 0).
pub fn cycle_counts_from_det(det: &[BigInt], order: usize) -> Result<Vec<BigInt>> {
    let mut c = det.to_vec();
    c.resize(order + 1, BigInt::zero());
    c.truncate(order + 1);
    let p = PowerSeries::from_integers(&c);
    let q = p.derivative().mul(&p.inverse()?);
    let mut out = vec![BigInt::zero(); order + 1];
    for i in 1..=order {
        let v = -q.coeff(i - 1);
        if !v.is_integer() {
            return Err(Error::InvalidArgument("non-integral cycle count".into()));
        }
        out[i] = v.to_integer();
    }
    Ok(out)
}

/// `tr A^i` for `0 ≤ i ≤ L`, exactly.
pub fn trace_powers(g: &MultiGraph, order: usize) -> Vec<BigInt> {
    let n = g.n();
    let a: Vec<Vec<BigInt>> = g.adjacency().iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut p: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as u8)).collect()).collect();
    let mut out = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        out.push((0..n).map(|i| p[i][i].clone()).sum());
        let mut next = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                if p[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !a[k][j].is_zero() {
                        next[i][j] += &p[i][k] * &a[k][j];
                    }
                }
            }
        }
        p = next;
    }
    out
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[BigInt], e: usize) -> Vec<BigInt> {
    (0..e).fold(vec![BigInt::one()], |acc, _| poly_mul(&acc, a))
}

/// `(1 − u²)^{𝓡−1} det((1 + (r−1)u²)I − uA)` for an undirected `r`-regular graph, where
/// `𝓡 = |E| − |V| + 1`; coefficients of `1, u, u², …`.
pub fn ihara_vertex_form(g: &MultiGraph) -> Result<Vec<BigInt>> {
    if g.is_directed() {
        return invalid("the vertex form needs an undirected graph");
    }
    let r = g.regular_degree().ok_or_else(|| Error::Hypothesis("graph is not regular".into()))? as i64;
    let n = g.n();
    let edges = n * r as usize / 2;
    if edges < n {
        return hypothesis("fundamental group rank below one");
    }
    // det(αI − uA) = Σ_i c_i α^{n−i} u^i with det(xI − A) = Σ_i c_i x^{n−i}.
    let c = linalg::charpoly_exact(&g.adjacency_i64());
    let alpha = vec![BigInt::one(), BigInt::zero(), BigInt::from(r - 1)];
    let mut det = vec![BigInt::zero(); 2 * n + 1];
    for (i, ci) in c.iter().enumerate() {
        let mut term = vec![BigInt::zero(); i];
        term.extend(poly_pow(&alpha, n - i));
        for (j, t) in term.iter().enumerate() {
            det[j] += ci * t;
        }
    }
    let one_minus_u2 = vec![BigInt::one(), BigInt::zero(), BigInt::from(-1)];
    Ok(poly_mul(&poly_pow(&one_minus_u2, edges - n), &det))
}

/// `det(I − uM)` with `M` the adjacency of the line digraph.
pub fn ihara_edge_form(g: &MultiGraph) -> Result<Vec<BigInt>> {
    let l = crate::graph::line_digraph(g)?;
    Ok(linalg::charpoly_exact(&l.graph().adjacency_i64()))
}

/// Arcs `(tail, head)`, parallel copies listed separately; undirected edges give both orientations
/// and a self-loop of multiplicity `m` gives `m` arcs.
fn arcs(g: &MultiGraph) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in g.adjacency().iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            for _ in 0..m {
                out.push((i, j));
            }
        }
    }
    out
}

fn is_primitive_sequence(s: &[usize]) -> bool {
    let l = s.len();
    (1..l).filter(|d| l % d == 0).all(|d| (0..l).any(|i| s[i] != s[(i + d) % l]))
}

fn is_min_rotation(s: &[usize]) -> bool {
    let l = s.len();
    (1..l).all(|r| {
        for i in 0..l {
            let (a, b) = (s[i], s[(i + r) % l]);
            if a != b {
                return a < b;
            }
        }
        true
    })
}

/// Number of primitive cycle classes (closed arc sequences up to rotation, not proper powers)
/// of each length `1..=L`, by enumerating rooted closed walks.
pub fn primitive_cycle_census(g: &MultiGraph, order: usize) -> BTreeMap<usize, BigInt> {
    let arcs = arcs(g);
    let mut out_arcs = vec![Vec::new(); g.n()];
    for (id, &(t, _)) in arcs.iter().enumerate() {
        out_arcs[t].push(id);
    }
    let mut census: BTreeMap<usize, BigInt> = (1..=order).map(|l| (l, BigInt::zero())).collect();
    fn dfs(
        arcs: &[(usize, usize)],
        out_arcs: &[Vec<usize>],
        start: usize,
        at: usize,
        seq: &mut Vec<usize>,
        order: usize,
        census: &mut BTreeMap<usize, BigInt>,
    ) {
        if !seq.is_empty() && at == arcs[seq[0]].0 && is_primitive_sequence(seq) && is_min_rotation(seq) {
            *census.get_mut(&seq.len()).expect("length in range") += 1;
        }
        if seq.len() == order {
            return;
        }
        for &a in &out_arcs[at] {
            // Rotation-minimal sequences start with their smallest arc.
            if a < start {
                continue;
            }
            seq.push(a);
            dfs(arcs, out_arcs, start, arcs[a].1, seq, order, census);
            seq.pop();
        }
    }
    for (first, &(_, h)) in arcs.iter().enumerate() {
        let mut seq = vec![first];
        dfs(&arcs, &out_arcs, first, h, &mut seq, order, &mut census);
    }
    census
}

/// `Π_{[c]} (1 − u^{l(c)})` through `u^L`.
pub fn euler_product(census: &BTreeMap<usize, BigInt>, order: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); order + 1];
    p[0] = BigInt::one();
    for (&l, cnt) in census {
        if l == 0 || l > order {
            continue;
        }
        let times = cnt.to_usize().expect("census count fits in usize");
        for _ in 0..times {
            for n in (l..=order).rev() {
                let sub = p[n - l].clone();
                p[n] -= sub;
            }
        }
    }
    p
}

/// `M(s, f) = diag(exp(−s f_i)) A`.
pub fn weighted_matrix(a: &Mat, f: &[f64], s: f64) -> Mat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (-s * f[i]).exp() * a[(i, j)])
}

fn check_entropy_input(a: &Mat, f: &[f64]) -> Result<()> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return invalid("matrix must be square and non-empty");
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    if f.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return invalid("weights must be finite and nonnegative");
    }
    if f.iter().all(|&x| x == 0.0) {
        return invalid("weights must not all vanish");
    }
    Ok(())
}

/// `ρ(s, f)` with its bi-orthogonal Perron pair.
pub fn entropy_perron(a: &Mat, f: &[f64], s: f64) -> Result<PerronData> {
    perron_data(&weighted_matrix(a, f, s))
}

/// `∂ρ/∂s = −ρ wᵗD(f)v` with `wᵗv = 1`.
pub fn entropy_ds(pd: &PerronData, f: &[f64]) -> f64 {
    -pd.lambda * (0..pd.k).map(|i| pd.w[i] * f[i] * pd.v[i]).sum::<f64>()
}

/// The unique `s₀ > 0` with `ρ(s₀, f) = 1`.
pub fn entropy_solve(a: &Mat, f: &[f64]) -> Result<f64> {
    check_entropy_input(a, f)?;
    let rho0 = entropy_perron(a, f, 0.0)?.lambda;
    if rho0 <= 1.0 {
        return hypothesis(format!("spectral radius {rho0} ≤ 1 at s = 0; there is no positive root"));
    }
    let rho = |s: f64| -> Result<PerronData> { entropy_perron(a, f, s) };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut tries = 0;
    while rho(hi)?.lambda >= 1.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return hypothesis("ρ(s, f) stays above 1; zero-weight vertices carry too many cycles");
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let pd = rho(s)?;
        let g = pd.lambda.ln();
        if g.abs() <= 1e-15 {
            return Ok(s);
        }
        if g > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let dg = entropy_ds(&pd, f) / pd.lambda;
        let newton = s - g / dg;
        s = if dg < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-16 * hi.max(1.0) {
            return Ok(s);
        }
    }
    let r = rho(s)?.lambda;
    if (r - 1.0).abs() <= 1e-10 {
        Ok(s)
    } else {
        Err(Error::NoConvergence(format!("entropy root search stalled at s = {s}, ρ = {r}")))
    }
}

/// `∇_f ρ = −sρ (w_i v_i)_i`.
pub fn entropy_gradient(a: &Mat, f: &[f64], s: f64) -> Result<Vec<f64>> {
    check_entropy_input(a, f)?;
    let pd = entropy_perron(a, f, s)?;
    Ok((0..pd.k).map(|i| -s * pd.lambda * pd.w[i] * pd.v[i]).collect())
}

/// `s₀(f)` and its gradient `−(∇_f ρ)/(∂ρ/∂s)` at the root.
pub fn entropy_s0_gradient(a: &Mat, f: &[f64]) -> Result<(f64, Vec<f64>)> {
    let s0 = entropy_solve(a, f)?;
    let pd = entropy_perron(a, f, s0)?;
    let ds = entropy_ds(&pd, f);
    let grad = (0..pd.k).map(|i| -(-s0 * pd.lambda * pd.w[i] * pd.v[i]) / ds).collect();
    Ok((s0, grad))
}

/// `d²ρ/dt²` of `ρ(s, f + tg)` at `t = 0`: `ρs² (D(g)w)ᵗ(2P − I − 2ρS)(D(g)v)`.
pub fn entropy_second_derivative(a: &Mat, f: &[f64], s: f64, g: &[f64]) -> Result<f64> {
    check_entropy_input(a, f)?;
    let pd = entropy_perron(a, f, s)?;
    let (dv, dw) = dg_pair(&pd, g)?;
    let k = pd.k;
    let form = pd.projection.clone() * 2.0 - Mat::identity(k, k) - &pd.reduced_resolvent * (2.0 * pd.lambda);
    Ok(pd.lambda * s * s * dw.dot(&(form * dv)))
}

/// `ρs² (D(g)v)ᵗ(P − ρS)(D(g)v)`, the expression obtained by inserting the second derivative
/// of `M` where the Taylor coefficient belongs.
pub fn entropy_second_derivative_printed(a: &Mat, f: &[f64], s: f64, g: &[f64]) -> Result<f64> {
    check_entropy_input(a, f)?;
    let pd = entropy_perron(a, f, s)?;
    let (dv, _) = dg_pair(&pd, g)?;
    let form = &pd.projection - &pd.reduced_resolvent * pd.lambda;
    Ok(pd.lambda * s * s * dv.dot(&(form * &dv)))
}

fn dg_pair(pd: &PerronData, g: &[f64]) -> Result<(Vect, Vect)> {
    if g.len() != pd.k {
        return Err(Error::DimensionMismatch { expected: pd.k, got: g.len() });
    }
    let dv = Vect::from_iterator(pd.k, (0..pd.k).map(|i| g[i] * pd.v[i]));
    let dw = Vect::from_iterator(pd.k, (0..pd.k).map(|i| g[i] * pd.w[i]));
    Ok((dv, dw))
}

/// Euclidean projection onto `{f ≥ 0, Σf = 1}`.
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Residuals certifying an entropy optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyCertificate {
    /// `‖Mv − v‖` at `(s₀, f*)`.
    pub eigen_residual: f64,
    /// `max_i |n w_i v_i − 1|` over the support of `f*` (`wᵗv = 1`).
    pub constancy_residual: f64,
    /// Largest spread of the right Perron vector entries.
    pub right_vector_spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyResult {
    pub f_star: Vec<f64>,
    pub s0: f64,
    pub iterations: usize,
    pub certificate: EntropyCertificate,
}

impl EntropyResult {
    pub fn to_json(&self) -> Value {
        json!({
            "f_star": self.f_star,
            "s0": self.s0,
            "iterations": self.iterations,
            "certificate": {
                "eigen_residual": self.certificate.eigen_residual,
                "constancy_residual": self.certificate.constancy_residual,
                "right_vector_spread": self.certificate.right_vector_spread,
            }
        })
    }
}

pub fn entropy_certificate(a: &Mat, f: &[f64], s0: f64) -> Result<EntropyCertificate> {
    let pd = entropy_perron(a, f, s0)?;
    let m = weighted_matrix(a, f, s0);
    let n = pd.k as f64;
    let eigen_residual = (&m * &pd.v - &pd.v).norm();
    let constancy_residual = (0..pd.k)
        .filter(|&i| f[i] > 0.0)
        .map(|i| (n * pd.w[i] * pd.v[i] - 1.0).abs())
        .fold(0.0, f64::max);
    let vmax = pd.v.max();
    let vmin = pd.v.min();
    Ok(EntropyCertificate { eigen_residual, constancy_residual, right_vector_spread: vmax - vmin })
}

/// Minimizes `s₀(f)` over the simplex by projected gradient descent from the barycenter.
pub fn entropy_minimize(a: &Mat) -> Result<EntropyResult> {
    let n = a.nrows();
    if n == 0 {
        return invalid("empty matrix");
    }
    let mut f = vec![1.0 / n as f64; n];
    let (mut s, mut grad) = entropy_s0_gradient(a, &f)?;
    let mut step = 1.0;
    let mut iterations = 0;
    for it in 0..20_000 {
        iterations = it + 1;
        let mut accepted = None;
        while step > 1e-16 {
            let y: Vec<f64> = f.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let cand = project_to_simplex(&y);
            let decrease: f64 = grad.iter().zip(cand.iter().zip(&f)).map(|(g, (c, x))| g * (c - x)).sum();
            match entropy_s0_gradient(a, &cand) {
                Ok((sc, gc)) if sc <= s + 1e-4 * decrease + 1e-15 => {
                    accepted = Some((cand, sc, gc));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        let Some((cand, sc, gc)) = accepted else { break };
        let moved = cand.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        f = cand;
        s = sc;
        grad = gc;
        step = (step * 2.0).min(1e3);
        if moved <= 1e-13 {
            break;
        }
    }
    let certificate = entropy_certificate(a, &f, s)?;
    Ok(EntropyResult { f_star: f, s0: s, iterations, certificate })
}

/// `f_i = log(A1)_i / Σ log(A1)_j`, `s₀ = Σ log(A1)_j`.
pub fn entropy_closed_form(a: &Mat) -> Result<(Vec<f64>, f64)> {
    let rows: Vec<f64> = (0..a.nrows()).map(|i| a.row(i).sum()).collect();
    if let Some(r) = rows.iter().find(|&&r| r <= 1.0) {
        return hypothesis(format!("row sum {r} ≤ 1 makes the logarithmic weights degenerate"));
    }
    let logs: Vec<f64> = rows.iter().map(|r| r.ln()).collect();
    let total: f64 = logs.iter().sum();
    Ok((logs.iter().map(|l| l / total).collect(), total))
}

/// Row and column scalings `(x, y)` with `diag(x) A diag(y)` doubly stochastic.
pub fn sinkhorn_scaling(a: &Mat, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.nrows();
    let mut x = vec![1.0; n];
    let mut y = vec![1.0; n];
    for _ in 0..1_000_000 {
        for i in 0..n {
            let s: f64 = (0..n).map(|j| a[(i, j)] * y[j]).sum();
            x[i] = 1.0 / s;
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| a[(i, j)] * x[i]).sum();
            y[j] = 1.0 / s;
        }
        let err = (0..n)
            .map(|i| ((0..n).map(|j| x[i] * a[(i, j)] * y[j]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if err <= tol {
            return Ok((x, y));
        }
    }
    Err(Error::NoConvergence("Sinkhorn scaling did not converge".into()))
}

/// Interior critical point of `s₀` on the plane `Σf = 1`: `exp(−s f_i) = x_i y_i` from the
/// Sinkhorn scaling (the Perron pair then satisfies `w_i v_i = const`). Coordinates may be
/// negative, in which case the simplex minimum lies on the boundary.
pub fn entropy_critical_point(a: &Mat) -> Result<(Vec<f64>, f64)> {
    let (x, y) = sinkhorn_scaling(a, 1e-15)?;
    let logs: Vec<f64> = x.iter().zip(&y).map(|(a, b)| -(a * b).ln()).collect();
    let s: f64 = logs.iter().sum();
    if !(s > 0.0) {
        return hypothesis("no critical point with positive entropy");
    }
    Ok((logs.iter().map(|l| l / s).collect(), s))
}

/// `tr M(s)ⁿ` for `n = 1..=terms`; the terms decay iff `s > s₀`.
pub fn entropy_series_terms(a: &Mat, f: &[f64], s: f64, terms: usize) -> Vec<f64> {
    let m = weighted_matrix(a, f, s);
    let mut p = m.clone();
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        out.push(p.trace());
        p *= &m;
    }
    out
}

/// Whether the partial sums of `Σ tr M(s)ⁿ` look convergent: geometric term ratio below one.
pub fn entropy_series_converges(a: &Mat, f: &[f64], s: f64, terms: usize) -> bool {
    let t = entropy_series_terms(a, f, s, terms);
    let n = t.len();
    if n < 4 {
        return false;
    }
    let ratio = (t[n - 1] / t[n / 2]).abs().powf(1.0 / (n - 1 - n / 2) as f64);
    ratio < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::free_group_graph;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn counting_small() {
        let rows = counting_functions_fk(2, 3).unwrap();
        assert_eq!((rows[0].c.clone(), rows[0].cc.clone()), (BigInt::from(4), BigInt::from(4)));
        assert_eq!((rows[1].c.clone(), rows[1].cc.clone()), (BigInt::from(12), BigInt::from(8)));
        assert_eq!(rows[2].n, BigInt::from(36));
    }

    #[test]
    fn h_coefficients_match_counts() {
        for k in [2, 3] {
            let h = series_h(k, 30).unwrap().to_integers().unwrap();
            assert_eq!(h[0], BigInt::one());
            for r in 1..=30 {
                assert_eq!(h[r], conjugacy_class_count(k, r).unwrap() * BigInt::from(r));
            }
            assert_eq!(series_h_expanded(k, 30).unwrap(), series_h(k, 30).unwrap());
            assert_ne!(series_h_printed(k, 30).unwrap(), series_h(k, 30).unwrap());
        }
        let h = series_h(2, 2).unwrap().to_integers().unwrap();
        assert_eq!(h, ints(&[1, 4, 16]));
    }

    #[test]
    fn cc_series_and_products() {
        let cc = series_cc(2, 10).unwrap();
        for r in 1..=10 {
            assert_eq!(cc.coeff(r), BigRational::from_integer(conjugacy_class_count(2, r).unwrap()));
        }
        let sq = series_product_cc(&cc, &cc);
        assert_eq!(sq.coeff(2), rat(32));
        assert_eq!(series_product_cc(&cc, &PowerSeries::one(10)), cc);
        let z = series_cc_integers(10);
        assert_eq!(series_product_cc(&cc, &z), series_product_cc(&z, &cc));
    }

    #[test]
    fn series_c_matches_word_counts() {
        let c = series_c_fk(3, 12).unwrap().to_integers().unwrap();
        assert_eq!(c[0], BigInt::zero());
        for r in 1..=12 {
            assert_eq!(c[r], count_cyclically_reduced(3, r).unwrap());
        }
    }

    #[test]
    fn determinants() {
        assert_eq!(zeta_det(&MultiGraph::complete(3)), ints(&[1, 0, -3, -2]));
        // (1 − 3u)(1 − u)²(1 + u) = 1 − 4u + 2u² + 4u³ − 3u⁴
        assert_eq!(zeta_det(&free_group_graph(2).unwrap()), ints(&[1, -4, 2, 4, -3]));
        for g in [MultiGraph::complete(4), free_group_graph(2).unwrap()] {
            let n = cycle_counts_from_det(&zeta_det(&g), 10).unwrap();
            let t = trace_powers(&g, 10);
            assert_eq!(&n[1..], &t[1..]);
        }
    }

    #[test]
    fn ihara_forms_agree() {
        for g in [MultiGraph::complete(4), MultiGraph::petersen(), MultiGraph::complete(5)] {
            assert_eq!(ihara_vertex_form(&g).unwrap(), ihara_edge_form(&g).unwrap());
        }
    }

    #[test]
    fn census_and_euler_product() {
        let loops = MultiGraph::from_adjacency(false, vec![vec![1, 0], vec![0, 1]]).unwrap();
        let c = primitive_cycle_census(&loops, 4);
        assert_eq!(c[&1], BigInt::from(2));
        assert!(c.values().skip(1).all(|x| x.is_zero()));
        for g in [MultiGraph::complete(3), MultiGraph::complete(4), free_group_graph(2).unwrap()] {
            let det = zeta_det(&g);
            let mut d = det.clone();
            d.resize(7, BigInt::zero());
            assert_eq!(euler_product(&primitive_cycle_census(&g, 6), 6), d[..7].to_vec());
        }
    }

    #[test]
    fn entropy_regular() {
        let a = MultiGraph::complete(3).adjacency_f64();
        let s = entropy_solve(&a, &[1.0; 3]).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-12);
        let a4 = MultiGraph::complete(4).adjacency_f64();
        let s = entropy_solve(&a4, &[0.5; 4]).unwrap();
        assert!((s - 3f64.ln() / 0.5).abs() < 1e-12);
        let r = entropy_minimize(&a4).unwrap();
        assert!((r.s0 - 4.0 * 3f64.ln()).abs() < 1e-9);
        assert!(r.f_star.iter().all(|x| (x - 0.25).abs() < 1e-7));
    }

    #[test]
    fn entropy_scan_oracle() {
        let a = MultiGraph::complete(4).adjacency_f64();
        let f = [1.0, 2.0, 1.0, 2.0];
        let s = entropy_solve(&a, &f).unwrap();
        // Dense scan then bisection on the spectral radius alone.
        let rho = |s: f64| linalg::spectral_radius(&weighted_matrix(&a, &f, s));
        let mut lo = 0.0;
        while rho(lo + 0.01) > 1.0 {
            lo += 0.01;
        }
        let mut hi = lo + 0.01;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if rho(mid) > 1.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((s - lo).abs() < 1e-8);
    }

    #[test]
    fn entropy_derivatives_match_differences() {
        let a = linalg::from_rows(&[vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 0.0]]);
        let f = [0.2, 0.5, 0.3];
        let g = [1.0, -0.4, 0.7];
        let s = 0.8;
        let rho = |t: f64| {
            let ft: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + t * b).collect();
            linalg::spectral_radius(&weighted_matrix(&a, &ft, s))
        };
        let h = 1e-4;
        let fd1 = (rho(h) - rho(-h)) / (2.0 * h);
        let grad = entropy_gradient(&a, &f, s).unwrap();
        let dir: f64 = grad.iter().zip(&g).map(|(a, b)| a * b).sum();
        assert!((dir - fd1).abs() < 1e-7, "{dir} vs {fd1}");
        let h = 1e-3;
        let fd2 = (rho(h) - 2.0 * rho(0.0) + rho(-h)) / (h * h);
        let d2 = entropy_second_derivative(&a, &f, s, &g).unwrap();
        assert!((d2 - fd2).abs() < 1e-5, "{d2} vs {fd2}");
    }

    #[test]
    fn critical_point_is_certified() {
        let a = linalg::from_rows(&[vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 0.0]]);
        let (f, s) = entropy_critical_point(&a).unwrap();
        assert!((entropy_solve(&a, &f).unwrap() - s).abs() < 1e-9);
        assert!(entropy_certificate(&a, &f, s).unwrap().constancy_residual < 1e-8);
        let r = entropy_minimize(&a).unwrap();
        assert!((r.s0 - s).abs() < 1e-9);
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[0.5, 0.9, -1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
        assert!((p[1] - p[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn series_helpers() {
        let g = PowerSeries::geometric(&rat(3), 2, 6);
        assert_eq!(g.to_integers().unwrap(), ints(&[1, 0, 3, 0, 9, 0, 27]));
        let inv = g.inverse().unwrap();
        assert_eq!(inv.mul(&g), PowerSeries::one(6));
        assert_eq!(euler_phi(12), 4);
        assert!(series_c_fk(2, 5).unwrap().to_csv_string().starts_with("index,coefficient\n0,0\n1,4\n"));
    }
}

//! Exact value distributions of vertex sums over closed walks, their CLT variances,
//! and equidistribution of walk sums modulo `p` and in finite groups.
//!
//! A closed walk `v_1 … v_N v_1` contributes `X_f = f(v_1) + … + f(v_N)`, the
//! coefficient extraction from `tr (D(x)A)^N` with `D(x) = diag(x^{f(v)})`.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use num_complex::Complex;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{hypothesis, invalid, Error, Result};
use crate::free_group::{exact_moments, is_prime};
use crate::graph::{laplacian_reduced_inverse, line_digraph, LineDigraph, MultiGraph};
use crate::linalg::{self, CMat, Mat, Vect};
use crate::stats::{extrapolate_inverse_n, normal_pdf};

/// Counts of closed walks of a fixed length by the value of `X_f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkDistribution {
    n_steps: usize,
    values: BTreeMap<i64, BigInt>,
}

/// One row of plot data: value, exact count and the count predicted by the normal limit.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotRow {
    pub value: i64,
    pub standardized: f64,
    pub count: BigInt,
    pub mass: f64,
    pub gaussian_prediction: f64,
    pub normal_density: f64,
}

impl WalkDistribution {
    pub fn new(n_steps: usize, values: BTreeMap<i64, BigInt>) -> Self {
        let values = values.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        WalkDistribution { n_steps, values }
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn values(&self) -> &BTreeMap<i64, BigInt> {
        &self.values
    }

    pub fn count(&self, v: i64) -> BigInt {
        self.values.get(&v).cloned().unwrap_or_default()
    }

    pub fn total(&self) -> BigInt {
        self.values.values().sum()
    }

    pub fn mean(&self) -> BigRational {
        exact_moments(&self.values).0
    }

    /// Exact variance of `X_f` (not divided by `N`).
    pub fn variance(&self) -> BigRational {
        exact_moments(&self.values).1
    }

    pub fn mean_f64(&self) -> f64 {
        self.mean().to_f64().unwrap_or(f64::NAN)
    }

    pub fn variance_f64(&self) -> f64 {
        self.variance().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_point_mass(&self) -> bool {
        self.values.len() == 1
    }

    /// Reduce values modulo `p`.
    pub fn fold_mod(&self, p: usize) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); p];
        for (v, c) in &self.values {
            out[v.rem_euclid(p as i64) as usize] += c;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["value", "count"]).map_err(csv_err)?;
        for (v, c) in &self.values {
            wr.write_record([v.to_string(), c.to_string()]).map_err(csv_err)?;
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
        let vals: Vec<Value> = self.values.iter().map(|(v, c)| json!([v, c.to_string()])).collect();
        json!({ "length": self.n_steps, "total": self.total().to_string(), "values": vals })
    }

    /// Rows comparing the exact counts with `N(Nμ, Nσ²)` on the support lattice.
    ///
    /// The lattice step is the gcd of the gaps in the support, so a parity-constrained
    /// distribution is compared with twice the density. A point mass yields one row.
    pub fn plot_rows(&self, mu: f64, sigma2: f64) -> Vec<PlotRow> {
        let total = self.total();
        let n = self.n_steps as f64;
        let mean = n * mu;
        let sd = (n * sigma2).sqrt();
        let keys: Vec<i64> = self.values.keys().copied().collect();
        let step = keys.windows(2).fold(0i64, |g, w| g.gcd(&(w[1] - w[0]))).max(1) as f64;
        let tot = total.to_f64().unwrap_or(f64::NAN);
        self.values
            .iter()
            .map(|(&v, c)| {
                let mass = BigRational::new(c.clone(), total.clone()).to_f64().unwrap_or(f64::NAN);
                let (z, dens) = if sd > 0.0 {
                    ((v as f64 - mean) / sd, normal_pdf(v as f64, mean, sd) * step)
                } else {
                    (0.0, if (v as f64 - mean).abs() < 1e-9 { 1.0 } else { 0.0 })
                };
                PlotRow {
                    value: v,
                    standardized: z,
                    count: c.clone(),
                    mass,
                    gaussian_prediction: tot * dens,
                    normal_density: if sd > 0.0 { normal_pdf(z, 0.0, 1.0) } else { dens },
                }
            })
            .collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn check_function<T>(g: &MultiGraph, f: &[T]) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: f.len() });
    }
    Ok(())
}

/// Dense polynomials for every end vertex after `n` steps from `start`.
/// Index `i` of the polynomial at `w` is the number of walks with `X_f = n·fmin + i`.
fn dense_walk_dp(adj: &[Vec<u32>], f: &[i64], n: usize, start: usize) -> Vec<Vec<BigInt>> {
    let k = adj.len();
    let fmin = f.iter().copied().min().unwrap_or(0);
    let width = f.iter().map(|&x| (x - fmin) as usize).max().unwrap_or(0);
    let len = n * width + 1;
    let mut cur = vec![Vec::new(); k];
    cur[start] = vec![BigInt::zero(); len];
    cur[start][0] = BigInt::from(1);
    for _ in 0..n {
        let mut next: Vec<Vec<BigInt>> = vec![Vec::new(); k];
        for v in 0..k {
            if cur[v].is_empty() {
                continue;
            }
            let s = (f[v] - fmin) as usize;
            for w in 0..k {
                let a = adj[v][w];
                if a == 0 {
                    continue;
                }
                if next[w].is_empty() {
                    next[w] = vec![BigInt::zero(); len];
                }
                for (i, c) in cur[v].iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    if a == 1 {
                        next[w][i + s] += c;
                    } else {
                        next[w][i + s] += c * a;
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

fn dense_to_map(v: &[BigInt], offset: i64) -> BTreeMap<i64, BigInt> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (offset + i as i64, c.clone()))
        .collect()
}

/// Exact distribution of `X_f` over rooted closed walks of length `n`.
pub fn exact_cycle_distribution(g: &MultiGraph, f: &[i64], n: usize) -> Result<WalkDistribution> {
    check_function(g, f)?;
    if n == 0 {
        return invalid("walk length must be at least 1");
    }
    let fmin = f.iter().copied().min().unwrap_or(0);
    let offset = n as i64 * fmin;
    let parts: Vec<Vec<BigInt>> =
        (0..g.n()).into_par_iter().map(|i| dense_walk_dp(g.adjacency(), f, n, i).swap_remove(i)).collect();
    let mut acc: Vec<BigInt> = Vec::new();
    for p in parts {
        if acc.len() < p.len() {
            acc.resize(p.len(), BigInt::zero());
        }
        for (i, c) in p.into_iter().enumerate() {
            acc[i] += c;
        }
    }
    Ok(WalkDistribution::new(n, dense_to_map(&acc, offset)))
}

/// Distribution of `X_f = f(v_1) + … + f(v_N)` over walks `i = v_1, …, v_{N+1} = j`
/// (the arrival vertex is not counted).
pub fn exact_path_distribution(g: &MultiGraph, f: &[i64], n: usize, i: usize, j: usize) -> Result<WalkDistribution> {
    check_function(g, f)?;
    if i >= g.n() || j >= g.n() {
        return invalid(format!("vertex out of range for a graph on {} vertices", g.n()));
    }
    if n == 0 {
        return invalid("walk length must be at least 1");
    }
    let fmin = f.iter().copied().min().unwrap_or(0);
    let dp = dense_walk_dp(g.adjacency(), f, n, i);
    Ok(WalkDistribution::new(n, dense_to_map(&dp[j], n as i64 * fmin)))
}

/// Checks shared by the CLT variance formulas; returns the common degree.
pub fn check_clt_graph(g: &MultiGraph) -> Result<u64> {
    if !g.is_connected() {
        return hypothesis(if g.is_directed() { "graph is not strongly connected" } else { "graph is disconnected" });
    }
    let r = match g.regular_degree() {
        Some(r) if r > 0 => r,
        _ => return hypothesis("graph is not regular"),
    };
    if !g.is_primitive() {
        return hypothesis(if g.is_directed() { "adjacency matrix is imprimitive" } else { "graph is bipartite" });
    }
    Ok(r)
}

fn centered(f: &[f64]) -> Vect {
    let mu = f.iter().sum::<f64>() / f.len() as f64;
    Vect::from_iterator(f.len(), f.iter().map(|x| x - mu))
}

/// `σ²(f) = (1/k)[−‖f₀‖² + 2r f₀ᵗ Δ₀⁻¹ f₀]` for a connected `r`-regular primitive graph.
pub fn clt_variance_vertex(g: &MultiGraph, f: &[f64]) -> Result<f64> {
    check_function(g, f)?;
    let r = check_clt_graph(g)? as f64;
    let f0 = centered(f);
    let inv = laplacian_reduced_inverse(g)?;
    let k = g.n() as f64;
    Ok((-f0.norm_squared() + 2.0 * r * f0.dot(&(&inv * &f0))) / k)
}

/// Support digraph of a nonnegative matrix.
fn support_graph(p: &Mat) -> Result<MultiGraph> {
    let n = p.nrows();
    let adj = (0..n).map(|i| (0..n).map(|j| (p[(i, j)] > 0.0) as u32).collect()).collect();
    MultiGraph::from_adjacency(true, adj)
}

fn check_doubly_stochastic(p: &Mat) -> Result<()> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return invalid("transition matrix must be square and non-empty");
    }
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return invalid("transition matrix has a negative or non-finite entry");
    }
    for i in 0..n {
        let row: f64 = p.row(i).sum();
        let col: f64 = p.column(i).sum();
        if (row - 1.0).abs() > 1e-9 || (col - 1.0).abs() > 1e-9 {
            return hypothesis("transition matrix is not doubly stochastic");
        }
    }
    let s = support_graph(p)?;
    if !s.is_connected() {
        return hypothesis("transition matrix is reducible");
    }
    if !s.is_primitive() {
        return hypothesis("transition matrix is imprimitive");
    }
    Ok(())
}

/// `σ²(f) = (1/k)[−‖f₀‖² + 2 f₀ᵗ(I₀ − P₀)⁻¹ f₀]` for a doubly stochastic primitive `P`.
pub fn clt_variance_markov(p: &Mat, f: &[f64]) -> Result<f64> {
    check_doubly_stochastic(p)?;
    markov_form(p, f, 1.0)
}

/// The same expression with `2r(I₀ − P₀)⁻¹` in place of `2(I₀ − P₀)⁻¹`, as sometimes written.
pub fn clt_variance_markov_scaled(p: &Mat, f: &[f64], r: f64) -> Result<f64> {
    check_doubly_stochastic(p)?;
    markov_form(p, f, r)
}

fn markov_form(p: &Mat, f: &[f64], r: f64) -> Result<f64> {
    let n = p.nrows();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let j = Mat::from_element(n, n, 1.0 / n as f64);
    let inv = linalg::inverse(&(Mat::identity(n, n) - p + &j))? - j;
    let f0 = centered(f);
    Ok((-f0.norm_squared() + 2.0 * r * f0.dot(&(&inv * &f0))) / n as f64)
}

/// Probability distribution of `X_f` over closed walks of length `n`, each weighted by
/// the product of its transition probabilities and normalized by `tr Pⁿ`.
pub fn markov_cycle_distribution(p: &Mat, f: &[i64], n: usize) -> Result<BTreeMap<i64, f64>> {
    let k = p.nrows();
    if f.len() != k || p.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: f.len() });
    }
    if n == 0 {
        return invalid("walk length must be at least 1");
    }
    let fmin = f.iter().copied().min().unwrap_or(0);
    let width = f.iter().map(|&x| (x - fmin) as usize).max().unwrap_or(0);
    let len = n * width + 1;
    let parts: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|start| {
            let mut cur = vec![vec![0.0; len]; k];
            cur[start][0] = 1.0;
            for _ in 0..n {
                let mut next = vec![vec![0.0; len]; k];
                for v in 0..k {
                    let s = (f[v] - fmin) as usize;
                    for w in 0..k {
                        let a = p[(v, w)];
                        if a == 0.0 {
                            continue;
                        }
                        for i in 0..len - s {
                            next[w][i + s] += a * cur[v][i];
                        }
                    }
                }
                cur = next;
            }
            cur.swap_remove(start)
        })
        .collect();
    let mut acc = vec![0.0; len];
    for part in parts {
        for (a, b) in acc.iter_mut().zip(part) {
            *a += b;
        }
    }
    let total: f64 = acc.iter().sum();
    if !(total > 0.0) {
        return hypothesis("no closed walks of this length");
    }
    let off = n as i64 * fmin;
    Ok(acc.into_iter().enumerate().filter(|(_, w)| *w > 0.0).map(|(i, w)| (off + i as i64, w / total)).collect())
}

/// Mean and variance of a probability distribution on the integers.
pub fn float_moments(d: &BTreeMap<i64, f64>) -> (f64, f64) {
    let m: f64 = d.iter().map(|(v, w)| *v as f64 * w).sum();
    let v: f64 = d.iter().map(|(x, w)| (*x as f64 - m).powi(2) * w).sum();
    (m, v)
}

/// `Var(X_f)/N` at `n` and `n/2`, extrapolated in `1/N`.
pub fn extrapolated_cycle_variance(g: &MultiGraph, f: &[i64], n: usize) -> Result<f64> {
    let half = n / 2;
    if half == 0 {
        return invalid("length must be at least 2");
    }
    let v1 = exact_cycle_distribution(g, f, half)?.variance_f64() / half as f64;
    let v2 = exact_cycle_distribution(g, f, n)?.variance_f64() / n as f64;
    Ok(extrapolate_inverse_n(half as f64, v1, n as f64, v2))
}

/// As [`extrapolated_cycle_variance`] for the orbit measure of a Markov chain.
pub fn extrapolated_markov_variance(p: &Mat, f: &[i64], n: usize) -> Result<f64> {
    let half = n / 2;
    if half == 0 {
        return invalid("length must be at least 2");
    }
    let v1 = float_moments(&markov_cycle_distribution(p, f, half)?).1 / half as f64;
    let v2 = float_moments(&markov_cycle_distribution(p, f, n)?).1 / n as f64;
    Ok(extrapolate_inverse_n(half as f64, v1, n as f64, v2))
}

/// Line digraph of a base graph suitable for backtrackless (or, for directed bases, all)
/// closed walks, with the common out-degree of the line digraph.
pub fn checked_line_digraph(g: &MultiGraph) -> Result<(LineDigraph, u64)> {
    if !g.is_connected() {
        return hypothesis("graph is disconnected");
    }
    let r = g.regular_degree().ok_or_else(|| Error::Hypothesis("graph is not regular".into()))?;
    if !g.is_directed() {
        if g.is_bipartite() {
            return hypothesis("graph is bipartite");
        }
        if r < 3 {
            return hypothesis("backtrackless walks need degree at least 3");
        }
    } else if !g.is_primitive() {
        return hypothesis("adjacency matrix is imprimitive");
    }
    let l = line_digraph(g)?;
    let d = if g.is_directed() { r } else { r - 1 };
    Ok((l, d))
}

/// Variance of an edge function summed along long backtrackless closed walks.
///
/// This is the vertex formula on the line digraph (out-degree `d = r−1`, `2E` vertices):
/// `σ² = (1/2E)[−‖g₀‖² + 2d g₀ᵗΔ₀⁻¹g₀] = (1/2E) vᵗ(d²I − MᵗM)v` with `v = Δ₀⁻¹g₀`.
/// For a directed base `d = r` and the line digraph has `E` vertices.
pub fn clt_variance_edge(g: &MultiGraph, w: &[f64]) -> Result<f64> {
    let (l, _) = checked_line_digraph(g)?;
    if w.len() != l.n() {
        return Err(Error::DimensionMismatch { expected: l.n(), got: w.len() });
    }
    clt_variance_vertex(l.graph(), w)
}

/// Variance of a vertex function over backtrackless closed walks: the edge variance of `𝓛f`.
pub fn clt_variance_backtrackless(g: &MultiGraph, f: &[f64]) -> Result<f64> {
    check_function(g, f)?;
    let (l, _) = checked_line_digraph(g)?;
    clt_variance_vertex(l.graph(), &l.lift(f))
}

/// Edge variance in the quadratic-form shape `(1/m) vᵗ(d²I − MᵗM)v`, `v = Δ₀⁻¹g₀`.
pub fn edge_variance_quadratic_form(g: &MultiGraph, w: &[f64]) -> Result<f64> {
    let (l, d) = checked_line_digraph(g)?;
    let (v, mtm) = quadratic_parts(&l, w)?;
    let m = l.n();
    let d2 = (d * d) as f64;
    let q = d2 * v.norm_squared() - v.dot(&(&mtm * &v));
    Ok(q / m as f64)
}

fn quadratic_parts(l: &LineDigraph, w: &[f64]) -> Result<(Vect, Mat)> {
    if w.len() != l.n() {
        return Err(Error::DimensionMismatch { expected: l.n(), got: w.len() });
    }
    let inv = laplacian_reduced_inverse(l.graph())?;
    let v = &inv * centered(w);
    let m = l.graph().adjacency_f64();
    Ok((v, m.transpose() * m))
}

/// The printed alternatives for the edge variance, evaluated literally, with `k = |V(G)|`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeVarianceForms {
    /// Value that ships (vertex formula on the line digraph).
    pub shipped: f64,
    /// `(1/2rk) vᵗ(d²I − MᵗM)v`.
    pub quadratic_printed: f64,
    /// Undirected: `((r−1)/2rk) g₀ᵗ(I − 2(r−1)Δ₀⁻¹)g₀`. Directed: `(1/2k) g₀ᵗ(I − 2rΔ₀⁻¹)g₀`.
    pub laplacian_printed: f64,
}

pub fn edge_variance_forms(g: &MultiGraph, w: &[f64]) -> Result<EdgeVarianceForms> {
    let (l, d) = checked_line_digraph(g)?;
    let shipped = clt_variance_vertex(l.graph(), w)?;
    let (v, mtm) = quadratic_parts(&l, w)?;
    let r = g.regular_degree().unwrap_or(0) as f64;
    let k = g.n() as f64;
    let d = d as f64;
    let quadratic_printed = (d * d * v.norm_squared() - v.dot(&(&mtm * &v))) / (2.0 * r * k);
    let inv = laplacian_reduced_inverse(l.graph())?;
    let g0 = centered(w);
    let form = g0.norm_squared() - 2.0 * d * g0.dot(&(&inv * &g0));
    let laplacian_printed = if g.is_directed() { form / (2.0 * k) } else { (r - 1.0) * form / (2.0 * r * k) };
    Ok(EdgeVarianceForms { shipped, quadratic_printed, laplacian_printed })
}

/// Distribution of an integer edge function over closed walks of the line digraph,
/// i.e. over backtrackless closed walks of an undirected base.
pub fn backtrackless_edge_distribution(g: &MultiGraph, w: &[i64], n: usize) -> Result<WalkDistribution> {
    let (l, _) = checked_line_digraph(g)?;
    exact_cycle_distribution(l.graph(), w, n)
}

/// Integer gradient `u(t(e)) − u(h(e))` on the oriented edges.
pub fn integer_gradient(l: &LineDigraph, u: &[i64]) -> Vec<i64> {
    (0..l.n()).map(|e| u[l.tail(e)] - u[l.head(e)]).collect()
}

/// Per-step convergence rate of `X_f mod p` to uniform:
/// `max_{χ ≠ 1} ρ(U(χ)A)/ρ(A)` with `U(χ) = diag(χ^{f_j})`.
pub fn modp_rate(g: &MultiGraph, f: &[i64], p: usize) -> Result<f64> {
    check_function(g, f)?;
    if !is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    if !g.is_connected() {
        return hypothesis("adjacency matrix is reducible");
    }
    if !g.is_primitive() {
        return hypothesis("adjacency matrix is imprimitive");
    }
    let f0 = f[0].rem_euclid(p as i64);
    if f.iter().all(|x| x.rem_euclid(p as i64) == f0) {
        return invalid("labels are constant modulo p; the sum does not mix");
    }
    let a = g.adjacency_f64();
    let rho = linalg::spectral_radius(&a);
    let n = g.n();
    let mut best: f64 = 0.0;
    for j in 1..p {
        let m = CMat::from_fn(n, n, |i, k| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) * (f[i].rem_euclid(p as i64) as f64) / p as f64;
            Complex::from_polar(1.0, theta) * a[(i, k)]
        });
        best = best.max(linalg::complex_spectral_radius(&m) / rho);
    }
    Ok(best)
}

/// Total-variation distance from the uniform distribution, computed exactly before rounding.
pub fn tv_from_uniform(counts: &[BigInt]) -> f64 {
    let m = BigInt::from(counts.len());
    let total: BigInt = counts.iter().sum();
    if total.is_zero() {
        return f64::NAN;
    }
    let dev: BigInt = counts.iter().map(|c| (c * &m - &total).abs()).sum();
    BigRational::new(dev, BigInt::from(2) * m * total).to_f64().unwrap_or(f64::NAN)
}

/// Finite group given by its multiplication table; element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return invalid("empty multiplication table");
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return invalid("multiplication table must be square with entries in 0..n");
        }
        if (0..n).any(|g| table[0][g] != g || table[g][0] != g) {
            return invalid("element 0 is not the identity");
        }
        let mut inverse = vec![usize::MAX; n];
        for g in 0..n {
            match (0..n).find(|&h| table[g][h] == 0 && table[h][g] == 0) {
                Some(h) => inverse[g] = h,
                None => return invalid(format!("element {g} has no inverse")),
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return invalid(format!("multiplication is not associative at ({a}, {b}, {c})"));
                    }
                }
            }
        }
        Ok(FiniteGroup { table, inverse })
    }

    /// `Z/p` with addition.
    pub fn cyclic(p: usize) -> Result<Self> {
        if p == 0 {
            return invalid("cyclic group order must be positive");
        }
        Self::from_table((0..p).map(|a| (0..p).map(|b| (a + b) % p).collect()).collect())
    }

    /// `S_n` on lexicographically ordered permutations, `(στ)(i) = σ(τ(i))`.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n == 0 || n > 5 {
            return invalid("symmetric group degree must be in 1..=5");
        }
        let perms = permutations(n);
        let index: BTreeMap<Vec<usize>, usize> = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let table = perms
            .iter()
            .map(|s| perms.iter().map(|t| index[&t.iter().map(|&i| s[i]).collect::<Vec<_>>()]).collect())
            .collect();
        Self::from_table(table)
    }

    /// `{"table": [[…], …]}`.
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let table: Vec<Vec<usize>> = serde_json::from_value(
            v.get("table").cloned().ok_or_else(|| Error::Parse("group JSON needs a \"table\" field".into()))?,
        )?;
        Self::from_table(table)
    }

    /// `cyclic:p`, `s3`, or `symmetric:n`.
    pub fn builtin(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        if lower == "s3" {
            return Self::symmetric(3);
        }
        if let Some(p) = lower.strip_prefix("cyclic:") {
            return Self::cyclic(p.parse().map_err(|_| Error::Parse(format!("bad group order in {name}")))?);
        }
        if let Some(n) = lower.strip_prefix("symmetric:") {
            return Self::symmetric(n.parse().map_err(|_| Error::Parse(format!("bad degree in {name}")))?);
        }
        Err(Error::Parse(format!("unknown group {name}")))
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Membership vector of the subgroup generated by `gens`.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.order()];
        seen[0] = true;
        let mut q = VecDeque::from([0usize]);
        while let Some(x) = q.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
        seen
    }

    pub fn commutators(&self) -> Vec<usize> {
        let n = self.order();
        let mut out: Vec<usize> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| self.mul(self.mul(a, b), self.mul(self.inv(a), self.inv(b))))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Permutations of `0..n` in lexicographic order (the identity first).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// A group element on every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroupLabeling {
    group: FiniteGroup,
    labels: Vec<usize>,
}

/// Equidistribution hypotheses for a labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupHypotheses {
    pub group_order: usize,
    /// Order of the subgroup generated by the labels.
    pub generated_order: usize,
    pub generates: bool,
    /// The labels do not all share one value under any one-dimensional representation.
    pub separated_by_characters: bool,
}

impl GroupHypotheses {
    pub fn hold(&self) -> bool {
        self.generates && self.separated_by_characters
    }
}

impl FiniteGroupLabeling {
    pub fn new(group: FiniteGroup, labels: Vec<usize>) -> Result<Self> {
        if let Some(&x) = labels.iter().find(|&&x| x >= group.order()) {
            return invalid(format!("label {x} is not an element of a group of order {}", group.order()));
        }
        Ok(FiniteGroupLabeling { group, labels })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Generation, and the coset condition: the labels, shifted by the inverse of the first
    /// label, together with the commutator subgroup must generate the whole group.
    pub fn hypotheses(&self) -> GroupHypotheses {
        let t = &self.group;
        let generated = t.generated_subgroup(&self.labels);
        let generated_order = generated.iter().filter(|&&b| b).count();
        let mut gens = t.commutators();
        if let Some(&first) = self.labels.first() {
            let fi = t.inv(first);
            gens.extend(self.labels.iter().map(|&x| t.mul(x, fi)));
        }
        let h = t.generated_subgroup(&gens);
        GroupHypotheses {
            group_order: t.order(),
            generated_order,
            generates: generated_order == t.order(),
            separated_by_characters: h.iter().all(|&b| b),
        }
    }
}

/// Exact counts of closed walks by cycle product `t_{v_1} t_{v_2} ⋯ t_{v_N}`, with the
/// hypothesis report (a violation is reported, not treated as an error).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupWalkCounts {
    pub length: usize,
    pub counts: Vec<BigInt>,
    pub hypotheses: GroupHypotheses,
}

impl GroupWalkCounts {
    pub fn tv_from_uniform(&self) -> f64 {
        tv_from_uniform(&self.counts)
    }
}

fn check_group_graph(g: &MultiGraph, lab: &FiniteGroupLabeling) -> Result<()> {
    if lab.labels.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: lab.labels.len() });
    }
    if !g.is_connected() {
        return hypothesis("graph is disconnected");
    }
    if !g.is_primitive() {
        return hypothesis(if g.is_directed() { "adjacency matrix is imprimitive" } else { "graph is bipartite" });
    }
    Ok(())
}

pub fn finite_group_cycle_distribution(g: &MultiGraph, lab: &FiniteGroupLabeling, n: usize) -> Result<GroupWalkCounts> {
    check_group_graph(g, lab)?;
    if n == 0 {
        return invalid("walk length must be at least 1");
    }
    let t = &lab.group;
    let order = t.order();
    let k = g.n();
    let adj = g.adjacency();
    let parts: Vec<Vec<BigInt>> = (0..k)
        .into_par_iter()
        .map(|start| {
            let mut cur = vec![vec![BigInt::zero(); order]; k];
            cur[start][0] = BigInt::from(1);
            for _ in 0..n {
                let mut next = vec![vec![BigInt::zero(); order]; k];
                for v in 0..k {
                    let tv = lab.labels[v];
                    for x in 0..order {
                        let c = &cur[v][x];
                        if c.is_zero() {
                            continue;
                        }
                        let y = t.mul(x, tv);
                        for w in 0..k {
                            match adj[v][w] {
                                0 => {}
                                1 => next[w][y] += c,
                                a => next[w][y] += c * a,
                            }
                        }
                    }
                }
                cur = next;
            }
            cur.swap_remove(start)
        })
        .collect();
    let mut counts = vec![BigInt::zero(); order];
    for p in parts {
        for (a, b) in counts.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok(GroupWalkCounts { length: n, counts, hypotheses: lab.hypotheses() })
}

/// Predicted per-step decay of the distance to uniform: the spectral radius of the
/// transfer matrix on `(vertex, element)` restricted to fiberwise zero-sum vectors
/// (every non-trivial irreducible block of the regular representation at once), over `ρ(A)`.
pub fn predicted_group_rate(g: &MultiGraph, lab: &FiniteGroupLabeling) -> Result<f64> {
    check_group_graph(g, lab)?;
    let t = &lab.group;
    let order = t.order();
    let k = g.n();
    let a = g.adjacency_f64();
    let rho = linalg::spectral_radius(&a);
    if order == 1 {
        return Ok(0.0);
    }
    let size = k * order;
    let mut big = Mat::zeros(size, size);
    for v in 0..k {
        for x in 0..order {
            let y = t.mul(x, lab.labels[v]);
            for w in 0..k {
                big[(v * order + x, w * order + y)] += a[(v, w)];
            }
        }
    }
    // Orthonormal basis of 1⊥ in R^|T|, repeated on every fiber.
    let ones = Mat::from_element(order, 1, 1.0);
    let h = linalg::null_basis(&ones.transpose(), 1e-12);
    let mut q = Mat::zeros(size, k * (order - 1));
    for v in 0..k {
        for i in 0..order {
            for j in 0..order - 1 {
                q[(v * order + i, v * (order - 1) + j)] = h[(i, j)];
            }
        }
    }
    let restricted = q.transpose() * big * q;
    Ok(linalg::spectral_radius(&restricted) / rho)
}

/// `ρ(M_ρ)/ρ(A)` for an explicit representation, `M_ρ` having `(v, w)` block `A_{vw} ρ(t_v)`.
pub fn representation_rate(g: &MultiGraph, lab: &FiniteGroupLabeling, rep: &[Mat]) -> Result<f64> {
    check_group_graph(g, lab)?;
    if rep.len() != lab.group.order() {
        return Err(Error::DimensionMismatch { expected: lab.group.order(), got: rep.len() });
    }
    let d = rep[0].nrows();
    let k = g.n();
    let a = g.adjacency_f64();
    let mut m = Mat::zeros(k * d, k * d);
    for v in 0..k {
        let rv = &rep[lab.labels[v]];
        for w in 0..k {
            if a[(v, w)] == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    m[(v * d + i, w * d + j)] = a[(v, w)] * rv[(i, j)];
                }
            }
        }
    }
    Ok(linalg::spectral_radius(&m) / linalg::spectral_radius(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::free_group_graph;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn triangle_length_two() {
        let g = MultiGraph::complete(3);
        let d = exact_cycle_distribution(&g, &[1, 0, 0], 2).unwrap();
        assert_eq!(d.values().clone(), BTreeMap::from([(0, big(2)), (1, big(4))]));
    }

    #[test]
    fn trivial_functions() {
        let g = MultiGraph::petersen();
        let zero = exact_cycle_distribution(&g, &[0; 10], 6).unwrap();
        let ones = exact_cycle_distribution(&g, &[1; 10], 6).unwrap();
        let tr: i64 = linalg::eigenvalues(&g.adjacency_f64()).iter().map(|z| z.re.powi(6)).sum::<f64>().round() as i64;
        assert_eq!(zero.values().clone(), BTreeMap::from([(0, big(tr))]));
        assert_eq!(ones.values().clone(), BTreeMap::from([(6, big(tr))]));
    }

    #[test]
    fn path_conventions() {
        let g = MultiGraph::complete(3);
        let d = exact_path_distribution(&g, &[1, 0, 0], 1, 1, 2).unwrap();
        assert_eq!(d.values().clone(), BTreeMap::from([(0, big(1))]));
        let f = [2, -1, 0];
        let cyc = exact_cycle_distribution(&g, &f, 7).unwrap();
        let mut sum: BTreeMap<i64, BigInt> = BTreeMap::new();
        for i in 0..3 {
            for (v, c) in exact_path_distribution(&g, &f, 7, i, i).unwrap().values() {
                *sum.entry(*v).or_default() += c;
            }
        }
        assert_eq!(&sum, cyc.values());
        let long = exact_path_distribution(&g, &[1, 0, 0], 60, 1, 2).unwrap();
        assert!((long.mean_f64() / 60.0 / (1.0 / 3.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn triangle_variance() {
        let g = MultiGraph::complete(3);
        let s = clt_variance_vertex(&g, &[1.0, 0.0, 0.0]).unwrap();
        assert!((s - 2.0 / 27.0).abs() < 1e-12);
        let p = g.adjacency_f64() / 2.0;
        assert!((clt_variance_markov(&p, &[1.0, 0.0, 0.0]).unwrap() - 2.0 / 27.0).abs() < 1e-12);
        assert!(clt_variance_vertex(&g, &[3.0; 3]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn variance_rejections() {
        assert!(matches!(clt_variance_vertex(&MultiGraph::cycle(4), &[1.0, 0.0, 0.0, 0.0]), Err(Error::Hypothesis(_))));
        let two = MultiGraph::from_edges(false, 4, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        assert!(matches!(clt_variance_vertex(&two, &[1.0, 0.0, 0.0, 0.0]), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn free_group_graph_variance_is_one() {
        // e_1 on G_2: a_1 ↦ 1, A_1 ↦ −1.
        let g = free_group_graph(2).unwrap();
        let s = clt_variance_vertex(&g, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn edge_forms_relations() {
        let g = MultiGraph::complete(4);
        let l = line_digraph(&g).unwrap();
        let mut w = vec![0.0; l.n()];
        w[0] = 1.0;
        let forms = edge_variance_forms(&g, &w).unwrap();
        let quad = edge_variance_quadratic_form(&g, &w).unwrap();
        assert!((forms.shipped - quad).abs() < 1e-12);
        assert!((forms.quadratic_printed / forms.shipped - 0.5).abs() < 1e-9);
        assert!((forms.laplacian_printed / forms.shipped + 1.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_gives_point_mass() {
        let g = MultiGraph::complete(4);
        let l = line_digraph(&g).unwrap();
        let w = integer_gradient(&l, &[3, -1, 0, 5]);
        for n in 1..=10 {
            let d = backtrackless_edge_distribution(&g, &w, n).unwrap();
            // Some lengths (1, 2, …) carry no backtrackless closed walks at all.
            assert!(d.values().keys().all(|&v| v == 0));
            assert_eq!(d.total(), exact_cycle_distribution(l.graph(), &vec![0; l.n()], n).unwrap().total());
        }
        let wf: Vec<f64> = w.iter().map(|&x| x as f64).collect();
        assert!(clt_variance_edge(&g, &wf).unwrap().abs() < 1e-10);
    }

    #[test]
    fn modp_rate_on_free_group_graph() {
        let g = free_group_graph(2).unwrap();
        let rate = modp_rate(&g, &[1, 1, -1, -1], 3).unwrap();
        assert!((rate - 1.0 / 3f64.sqrt()).abs() < 1e-9, "{rate}");
        assert!(modp_rate(&g, &[0; 4], 3).is_err());
    }

    #[test]
    fn group_tables() {
        let s3 = FiniteGroup::symmetric(3).unwrap();
        assert_eq!(s3.order(), 6);
        assert_eq!(s3.commutators().len(), 3);
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![1, 1]]).is_err());
        let bad_assoc = vec![vec![0, 1, 2], vec![1, 0, 0], vec![2, 0, 0]];
        assert!(FiniteGroup::from_table(bad_assoc).is_err());
    }

    #[test]
    fn group_walks() {
        let g = MultiGraph::complete(4);
        let s3 = FiniteGroup::symmetric(3).unwrap();
        let ident = FiniteGroupLabeling::new(s3.clone(), vec![0; 4]).unwrap();
        let d = finite_group_cycle_distribution(&g, &ident, 5).unwrap();
        assert!(d.counts[1..].iter().all(|c| c.is_zero()));
        assert!(!d.hypotheses.generates);
        // (0 1) is permutation [1,0,2] = index 2; (0 1 2) is [1,2,0] = index 3.
        let lab = FiniteGroupLabeling::new(s3, vec![2, 3, 0, 0]).unwrap();
        assert!(lab.hypotheses().hold());
        let a = finite_group_cycle_distribution(&g, &lab, 10).unwrap().tv_from_uniform();
        let b = finite_group_cycle_distribution(&g, &lab, 20).unwrap().tv_from_uniform();
        assert!(b < a && b < 1e-3);
        let rate = predicted_group_rate(&g, &lab).unwrap();
        assert!(rate > 0.0 && rate < 1.0);
    }

    #[test]
    fn cyclic_group_matches_modp() {
        let g = MultiGraph::petersen();
        let f: Vec<i64> = vec![0, 1, 2, 3, 4, 0, 1, 1, 3, 2];
        let lab = FiniteGroupLabeling::new(FiniteGroup::cyclic(5).unwrap(), f.iter().map(|&x| x as usize).collect()).unwrap();
        let counts = finite_group_cycle_distribution(&g, &lab, 9).unwrap().counts;
        assert_eq!(counts, exact_cycle_distribution(&g, &f, 9).unwrap().fold_mod(5));
        let r1 = predicted_group_rate(&g, &lab).unwrap();
        let r2 = modp_rate(&g, &f, 5).unwrap();
        assert!((r1 - r2).abs() < 1e-9);
    }

    #[test]
    fn csv_and_json() {
        let d = exact_cycle_distribution(&MultiGraph::complete(3), &[1, 0, 0], 2).unwrap();
        assert_eq!(d.to_csv_string(), "value,count\n0,2\n1,4\n");
        assert_eq!(d.to_json()["total"], "6");
        let rows = d.plot_rows(1.0 / 3.0, 2.0 / 27.0);
        assert_eq!(rows.len(), 2);
    }
}

//! Multigraphs, the free-group graph `G_r`, Laplacians and line digraphs.

use std::collections::VecDeque;
use std::path::Path;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, invalid, Error, Result};
use crate::linalg::{self, Mat, Vect};

/// A finite multigraph with integer adjacency matrix.
///
/// Undirected graphs store a symmetric matrix; a self-loop adds 1 to its diagonal entry and
/// 1 to the degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    directed: bool,
    adj: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    directed: bool,
    n: usize,
    edges: Vec<(usize, usize, u32)>,
}

impl MultiGraph {
    pub fn from_adjacency(directed: bool, adj: Vec<Vec<u32>>) -> Result<Self> {
        let n = adj.len();
        if adj.iter().any(|r| r.len() != n) {
            return invalid("adjacency matrix must be square");
        }
        if !directed {
            for i in 0..n {
                for j in 0..i {
                    if adj[i][j] != adj[j][i] {
                        return invalid("undirected adjacency must be symmetric");
                    }
                }
            }
        }
        Ok(MultiGraph { n, directed, adj })
    }

    /// Undirected edges are listed once each.
    pub fn from_edges(directed: bool, n: usize, edges: &[(usize, usize, u32)]) -> Result<Self> {
        let mut adj = vec![vec![0u32; n]; n];
        for &(i, j, m) in edges {
            if i >= n || j >= n {
                return invalid(format!("edge ({i},{j}) outside 0..{n}"));
            }
            adj[i][j] += m;
            if !directed && i != j {
                adj[j][i] += m;
            }
        }
        Ok(MultiGraph { n, directed, adj })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: GraphFile = serde_json::from_str(s)?;
        Self::from_edges(f.directed, f.n, &f.edges)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adj[i][j] > 0 && (self.directed || j >= i) {
                    edges.push((i, j, self.adj[i][j]));
                }
            }
        }
        serde_json::to_string(&GraphFile { directed: self.directed, n: self.n, edges }).expect("serializable")
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|i| (0..n).map(|j| u32::from(i != j)).collect()).collect();
        MultiGraph { n, directed: false, adj }
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1)).collect();
        Self::from_edges(false, n, &edges).expect("valid cycle")
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5, 1));
            edges.push((i, i + 5, 1));
            edges.push((5 + i, 5 + (i + 2) % 5, 1));
        }
        Self::from_edges(false, 10, &edges).expect("valid Petersen graph")
    }

    /// Directed circulant on `n` vertices with arcs `i → i + s` for each offset.
    pub fn directed_circulant(n: usize, offsets: &[usize]) -> Self {
        let mut adj = vec![vec![0u32; n]; n];
        for i in 0..n {
            for &s in offsets {
                adj[i][(i + s) % n] += 1;
            }
        }
        MultiGraph { n, directed: true, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    pub fn adjacency_f64(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.adj[i][j] as f64)
    }

    pub fn adjacency_i64(&self) -> Vec<Vec<i64>> {
        self.adj.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect()
    }

    pub fn out_degrees(&self) -> Vec<u64> {
        self.adj.iter().map(|r| r.iter().map(|&x| x as u64).sum()).collect()
    }

    pub fn in_degrees(&self) -> Vec<u64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.adj[i][j] as u64).sum()).collect()
    }

    /// Common degree when every row sum (and, for directed graphs, column sum) agrees.
    pub fn regular_degree(&self) -> Option<u64> {
        let out = self.out_degrees();
        let r = *out.first()?;
        if out.iter().any(|&d| d != r) {
            return None;
        }
        if self.directed && self.in_degrees().iter().any(|&d| d != r) {
            return None;
        }
        Some(r)
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = q.pop_front() {
            for v in 0..self.n {
                let a = if forward { self.adj[u][v] } else { self.adj[v][u] };
                if a > 0 && !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }

    /// Connectivity for undirected graphs, strong connectivity for directed ones.
    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.reach(0, true).iter().all(|&b| b) && self.reach(0, false).iter().all(|&b| b)
    }

    /// Period of the adjacency matrix (gcd of closed-walk lengths); requires connectivity.
    pub fn period(&self) -> Option<usize> {
        if !self.is_connected() {
            return None;
        }
        let mut level = vec![usize::MAX; self.n];
        level[0] = 0;
        let mut q = VecDeque::from([0usize]);
        let mut g = 0usize;
        while let Some(u) = q.pop_front() {
            for v in 0..self.n {
                if self.adj[u][v] == 0 {
                    continue;
                }
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                } else {
                    let d = (level[u] + 1).abs_diff(level[v]);
                    g = g.gcd(&d);
                }
            }
        }
        Some(g)
    }

    /// Irreducible with period 1.
    pub fn is_primitive(&self) -> bool {
        self.period() == Some(1)
    }

    /// Undirected bipartiteness (a self-loop makes a graph non-bipartite).
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![u8::MAX; self.n];
        for s in 0..self.n {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for v in 0..self.n {
                    if self.adj[u][v] == 0 && self.adj[v][u] == 0 {
                        continue;
                    }
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        q.push_back(v);
                    } else if color[v] == color[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `Δ = D − A` with `D` the out-degree diagonal.
    pub fn laplacian(&self) -> Mat {
        let d = self.out_degrees();
        Mat::from_fn(self.n, self.n, |i, j| if i == j { d[i] as f64 } else { 0.0 } - self.adj[i][j] as f64)
    }

    /// Directed edge list: each undirected edge appears in both orientations
    /// (parallel edges separately); arcs of a directed graph appear once.
    pub fn oriented_edges(&self) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if !self.directed && i == j && self.adj[i][j] > 0 {
                    return invalid("oriented edges of undirected self-loops are not defined");
                }
                for _ in 0..self.adj[i][j] {
                    out.push((i, j));
                }
            }
        }
        Ok(out)
    }
}

/// `G_r`: vertices `a_1..a_r, A_r..A_1`; adjacency `J − P_r` with `P_r` the antidiagonal permutation.
pub fn free_group_graph(r: usize) -> Result<MultiGraph> {
    if r < 2 {
        return invalid("rank must be at least 2");
    }
    let n = 2 * r;
    let adj = (0..n).map(|i| (0..n).map(|j| u32::from(i + j != n - 1)).collect()).collect();
    Ok(MultiGraph { n, directed: false, adj })
}

/// Letter at vertex `i` of [`free_group_graph`]: `+i` for `a_i`, `−i` for `A_i`.
pub fn free_group_vertex_letter(r: usize, v: usize) -> i32 {
    if v < r {
        v as i32 + 1
    } else {
        -((2 * r - v) as i32)
    }
}

/// Directed line graph. A vertex is an oriented edge `t(e) → h(e)`; `e → e'` iff
/// `h(e) = t(e')`, excluding the reversal of `e` when the base is undirected.
#[derive(Clone, Debug)]
pub struct LineDigraph {
    base: MultiGraph,
    tails: Vec<usize>,
    heads: Vec<usize>,
    reverse: Option<Vec<usize>>,
    graph: MultiGraph,
}

pub fn line_digraph(g: &MultiGraph) -> Result<LineDigraph> {
    let edges = g.oriented_edges()?;
    let m = edges.len();
    let tails: Vec<usize> = edges.iter().map(|e| e.0).collect();
    let heads: Vec<usize> = edges.iter().map(|e| e.1).collect();
    let reverse = if g.is_directed() {
        None
    } else {
        // Pair the k-th copy of (i, j) with the k-th copy of (j, i).
        let mut rev = vec![usize::MAX; m];
        for a in 0..m {
            if rev[a] != usize::MAX {
                continue;
            }
            let b = (0..m)
                .find(|&b| b != a && rev[b] == usize::MAX && tails[b] == heads[a] && heads[b] == tails[a])
                .ok_or_else(|| Error::InvalidArgument("unpaired undirected edge".into()))?;
            rev[a] = b;
            rev[b] = a;
        }
        Some(rev)
    };
    let mut adj = vec![vec![0u32; m]; m];
    for a in 0..m {
        for b in 0..m {
            let skip = reverse.as_ref().is_some_and(|r| r[a] == b);
            if heads[a] == tails[b] && !skip {
                adj[a][b] = 1;
            }
        }
    }
    let graph = MultiGraph { n: m, directed: true, adj };
    Ok(LineDigraph { base: g.clone(), tails, heads, reverse, graph })
}

impl LineDigraph {
    pub fn base(&self) -> &MultiGraph {
        &self.base
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn tail(&self, e: usize) -> usize {
        self.tails[e]
    }

    pub fn head(&self, e: usize) -> usize {
        self.heads[e]
    }

    pub fn reverse(&self, e: usize) -> Option<usize> {
        self.reverse.as_ref().map(|r| r[e])
    }

    /// `(𝓛f)(e) = f(t(e))`.
    pub fn lift(&self, f: &[f64]) -> Vec<f64> {
        self.tails.iter().map(|&t| f[t]).collect()
    }

    /// `(∇f)(e) = f(t(e)) − f(h(e))`; with this sign `Δ_𝓛 𝓛 = (r−1)∇` (undirected) and `r∇` (directed).
    pub fn gradient(&self, f: &[f64]) -> Vec<f64> {
        self.tails.iter().zip(&self.heads).map(|(&t, &h)| f[t] - f[h]).collect()
    }

    pub fn lift_matrix(&self) -> Mat {
        Mat::from_fn(self.n(), self.base.n, |e, v| if self.tails[e] == v { 1.0 } else { 0.0 })
    }

    pub fn gradient_matrix(&self) -> Mat {
        Mat::from_fn(self.n(), self.base.n, |e, v| {
            (self.tails[e] == v) as i32 as f64 - (self.heads[e] == v) as i32 as f64
        })
    }

    /// `Δ_𝓛 = dI − A(𝓛)` where `d` is the common out-degree of the line digraph.
    pub fn laplacian(&self) -> Result<Mat> {
        let d = self
            .graph
            .regular_degree()
            .ok_or_else(|| Error::Hypothesis("line digraph is not regular".into()))?;
        let a = self.graph.adjacency_f64();
        Ok(Mat::identity(self.n(), self.n()) * d as f64 - a)
    }
}

#[derive(Clone, Debug)]
pub struct AtAReport {
    /// Eigenvalues of `AᵗA` ascending.
    pub eigenvalues: Vec<f64>,
    pub observed: Vec<(f64, usize)>,
    pub expected: Vec<(f64, usize)>,
    pub multiplicities_match: bool,
    /// `max ‖(AᵗA − top·I)𝓛δ_v‖`.
    pub lift_residual: f64,
    /// Dimension of the top eigenspace minus the rank of the lifts (0 when they coincide).
    pub eigenspace_defect: i64,
    /// Operator norm of `A` restricted to `1⊥`.
    pub a0_norm: f64,
    pub expected_a0_norm: f64,
}

impl AtAReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.multiplicities_match
            && self.lift_residual < tol
            && self.eigenspace_defect == 0
            && (self.a0_norm - self.expected_a0_norm).abs() < tol
    }
}

/// Spectrum of `AᵗA` for the line digraph of a regular base graph.
#[allow(non_snake_case)]
pub fn AtA_spectrum_check(l: &LineDigraph) -> Result<AtAReport> {
    let r = l.base.regular_degree().ok_or_else(|| Error::Hypothesis("base graph is not regular".into()))? as f64;
    let v = l.base.n;
    let m = l.n();
    let (top, low, expected_norm) = if l.base.directed { (r * r, 0.0, r) } else { ((r - 1.0).powi(2), 1.0, r - 1.0) };
    let a = l.graph.adjacency_f64();
    let ata = a.transpose() * &a;
    let eigenvalues = linalg::sym_eigenvalues(&ata);
    let observed = linalg::multiplicities(&eigenvalues, 1e-8);
    let mut expected = vec![(low, m - v), (top, v)];
    expected.retain(|x| x.1 > 0);
    let multiplicities_match = observed.len() == expected.len()
        && observed.iter().zip(&expected).all(|(o, e)| o.1 == e.1 && (o.0 - e.0).abs() < 1e-8);
    let lifts = l.lift_matrix();
    let shifted = &ata - Mat::identity(m, m) * top;
    let lift_residual = (&shifted * &lifts).column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let top_dim = linalg::null_basis(&shifted, 1e-10).ncols() as i64;
    let eigenspace_defect = top_dim - linalg::rank(&lifts, 1e-10) as i64;
    let d = a.row(0).sum();
    let a0 = &a - Mat::from_element(m, m, d / m as f64);
    Ok(AtAReport {
        eigenvalues,
        observed,
        expected,
        multiplicities_match,
        lift_residual,
        eigenspace_defect,
        a0_norm: linalg::operator_norm(&a0),
        expected_a0_norm: expected_norm,
    })
}

/// Orthogonal decomposition of an edge function into a gradient and a circulation.
#[derive(Clone, Debug)]
pub struct EdgeDecomposition {
    /// Potential `u` with `∇u` the gradient part; normalized to zero mean.
    pub potential: Vec<f64>,
    pub gradient: Vec<f64>,
    pub circulation: Vec<f64>,
}

pub fn decompose_edge_function(g: &[f64], l: &LineDigraph) -> Result<EdgeDecomposition> {
    if g.len() != l.n() {
        return Err(Error::DimensionMismatch { expected: l.n(), got: g.len() });
    }
    let b = l.gradient_matrix();
    let gv = Vect::from_column_slice(g);
    let nv = l.base.n;
    // BᵗB has the constants as kernel (connected base); pin it with J/n.
    let btb = b.transpose() * &b + Mat::from_element(nv, nv, 1.0 / nv as f64);
    let rhs = b.transpose() * &gv;
    let mut u = linalg::solve(&btb, &rhs)?;
    let mean = u.mean();
    u.add_scalar_mut(-mean);
    let grad = &b * &u;
    let circ = &gv - &grad;
    Ok(EdgeDecomposition {
        potential: u.iter().copied().collect(),
        gradient: grad.iter().copied().collect(),
        circulation: circ.iter().copied().collect(),
    })
}

/// `∇ᵗw`: net flow out of each base vertex.
pub fn divergence(w: &[f64], l: &LineDigraph) -> Vec<f64> {
    let b = l.gradient_matrix();
    (b.transpose() * Vect::from_column_slice(w)).iter().copied().collect()
}

/// `Δ₀⁻¹` as an `n×n` matrix that inverts `Δ` on `1⊥` and annihilates constants.
///
/// Valid for undirected graphs and for directed graphs whose row and column sums agree.
pub fn laplacian_reduced_inverse(g: &MultiGraph) -> Result<Mat> {
    if !g.is_connected() {
        return hypothesis("graph is disconnected; the reduced Laplacian is singular");
    }
    if g.directed && g.regular_degree().is_none() {
        return hypothesis("directed graph must have equal row and column sums");
    }
    let n = g.n;
    let j = Mat::from_element(n, n, 1.0 / n as f64);
    let inv = linalg::inverse(&(g.laplacian() + &j))?;
    Ok(inv - j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_group_graph_shape() {
        let g = free_group_graph(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g.adjacency()[i][j] == 0, i + j == 3);
            }
        }
        assert_eq!(g.regular_degree(), Some(3));
        let a = g.adjacency_f64();
        assert_eq!((&a * &a).trace(), 12.0);
        let ev = linalg::sym_eigenvalues(&free_group_graph(3).unwrap().adjacency_f64());
        let expect = [-1.0, -1.0, 1.0, 1.0, 1.0, 5.0];
        assert!(ev.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(free_group_graph(1).is_err());
        assert_eq!(free_group_vertex_letter(2, 0), 1);
        assert_eq!(free_group_vertex_letter(2, 2), -2);
        assert_eq!(free_group_vertex_letter(2, 3), -1);
    }

    #[test]
    fn graph_flags() {
        assert!(MultiGraph::cycle(4).is_bipartite());
        assert!(!MultiGraph::cycle(5).is_bipartite());
        assert!(!MultiGraph::cycle(4).is_primitive());
        assert!(MultiGraph::petersen().is_primitive());
        assert_eq!(MultiGraph::petersen().regular_degree(), Some(3));
        let two = MultiGraph::from_edges(false, 2, &[(0, 0, 1), (1, 1, 1)]).unwrap();
        assert!(!two.is_connected());
        assert!(free_group_graph(2).unwrap().is_primitive());
    }

    #[test]
    fn json_round_trip() {
        let g = MultiGraph::petersen();
        let h = MultiGraph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(g, h);
        assert!(MultiGraph::from_json_str(r#"{"directed":false,"n":2,"edges":[[0,2,1]]}"#).is_err());
    }

    #[test]
    fn line_digraph_degrees() {
        let l = line_digraph(&MultiGraph::complete(3)).unwrap();
        assert_eq!(l.n(), 6);
        assert_eq!(l.graph().regular_degree(), Some(1));
        let l = line_digraph(&MultiGraph::petersen()).unwrap();
        assert_eq!(l.n(), 30);
        assert_eq!(l.graph().regular_degree(), Some(2));
        for e in 0..l.n() {
            let r = l.reverse(e).unwrap();
            assert_eq!(l.graph().adjacency()[e][r], 0);
            assert_eq!(l.graph().adjacency()[r][e], 0);
        }
        let c = MultiGraph::directed_circulant(3, &[1, 2]);
        let l = line_digraph(&c).unwrap();
        assert_eq!(l.n(), 6);
        assert_eq!(l.graph().regular_degree(), Some(2));
    }

    #[test]
    fn ata_spectra() {
        for (g, top, low) in [
            (MultiGraph::complete(4), (4.0, 4), (1.0, 8)),
            (MultiGraph::petersen(), (4.0, 10), (1.0, 20)),
            (MultiGraph::directed_circulant(3, &[1, 2]), (4.0, 3), (0.0, 3)),
        ] {
            let rep = AtA_spectrum_check(&line_digraph(&g).unwrap()).unwrap();
            assert!(rep.passed(1e-9), "{rep:?}");
            assert!(rep.observed.contains(&(rep.observed[1].0, top.1)));
            assert!((rep.observed[1].0 - top.0).abs() < 1e-9);
            assert!((rep.observed[0].0 - low.0).abs() < 1e-9 && rep.observed[0].1 == low.1);
        }
    }

    #[test]
    fn reduced_laplacian_inverses() {
        let k3 = MultiGraph::complete(3);
        let inv = laplacian_reduced_inverse(&k3).unwrap();
        let p0 = Mat::identity(3, 3) - Mat::from_element(3, 3, 1.0 / 3.0);
        assert!((inv - &p0 / 3.0).norm() < 1e-12);
        let k4 = MultiGraph::complete(4);
        let inv = laplacian_reduced_inverse(&k4).unwrap();
        let p0 = Mat::identity(4, 4) - Mat::from_element(4, 4, 0.25);
        assert!((&k4.laplacian() * &inv - &p0).norm() < 1e-12);
        assert!((inv - p0 / 4.0).norm() < 1e-12);
        let c5 = MultiGraph::cycle(5);
        let ev = linalg::sym_eigenvalues(&c5.laplacian());
        let mut expect: Vec<f64> =
            (0..5).map(|j| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * j as f64 / 5.0).cos()).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(ev.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-10));
        let two = MultiGraph::from_edges(false, 4, &[(0, 1, 1), (2, 3, 1)]).unwrap();
        assert!(matches!(laplacian_reduced_inverse(&two), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn lift_and_gradient_identities() {
        for g in [MultiGraph::complete(3), MultiGraph::complete(4), MultiGraph::petersen()] {
            let l = line_digraph(&g).unwrap();
            let r = g.regular_degree().unwrap() as f64;
            let lhs = l.laplacian().unwrap() * l.lift_matrix();
            assert!((lhs - l.gradient_matrix() * (r - 1.0)).norm() < 1e-12);
            // (𝓛f)ᵗ∇g = fᵗΔg as bilinear forms
            let form = l.lift_matrix().transpose() * l.gradient_matrix();
            assert!((form - g.laplacian()).norm() < 1e-12);
        }
        let c = MultiGraph::directed_circulant(5, &[1, 2]);
        let l = line_digraph(&c).unwrap();
        let lhs = l.laplacian().unwrap() * l.lift_matrix();
        assert!((lhs - l.gradient_matrix() * 2.0).norm() < 1e-12);
    }

    #[test]
    fn decomposition_examples() {
        let g = MultiGraph::complete(4);
        let l = line_digraph(&g).unwrap();
        let mut delta = vec![0.0; 4];
        delta[2] = 1.0;
        let d = decompose_edge_function(&l.gradient(&delta), &l).unwrap();
        assert!(d.circulation.iter().all(|x| x.abs() < 1e-12));
        let ones = vec![1.0; l.n()];
        let d = decompose_edge_function(&ones, &l).unwrap();
        assert!(d.gradient.iter().all(|x| x.abs() < 1e-12));
    }
}

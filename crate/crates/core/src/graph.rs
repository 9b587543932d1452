//! Undirected simple graphs, the edge-list text format, and adjacency algebra.
//!
//! The text format is one edge per line as two whitespace-separated 0-based
//! node ids. Lines starting with `#` are comments, except the directive
//! `#n <count>` which raises the node count so trailing isolated nodes
//! survive a round trip. Serialization always writes the directive followed
//! by the edges in sorted order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{IntMatrix, RealMatrix};

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Each edge stored once as `(min, max)`.
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Build a graph, validating endpoints and rejecting self-loops.
    /// Duplicate edges (in either orientation) collapse to one.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Invalid(format!("self-loop on node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::Invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_set(n, set))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_set(n, BTreeSet::new())
    }

    fn from_set(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { n, edges, neighbors }
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Self::from_set(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    pub fn complete(n: usize) -> Self {
        Self::from_set(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect())
    }

    /// Erdős–Rényi G(n, p): each pair `u < v`, in lexicographic order, is
    /// kept when a uniform draw in `[0, 1)` falls below `p`.
    pub fn random_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut set = BTreeSet::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    set.insert((u, v));
                }
            }
        }
        Self::from_set(n, set)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Neighbors of `v` in ascending id order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Relabel node `v` as `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Shape("permutation length differs from node count".into()));
        }
        Graph::new(self.n, self.edges().map(|(u, v)| (perm[u], perm[v])))
    }

    /// Serialize to the edge-list format (header directive, sorted edges).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "#n {}", self.n).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}

/// Parse edge-list bytes; the input must be UTF-8.
pub fn parse_edge_list_bytes(bytes: &[u8]) -> Result<Graph> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse { line: 0, message: format!("input is not UTF-8: {e}") })?;
    parse_edge_list(text)
}

/// Parse the edge-list text format.
///
/// An input with neither edges nor a `#n` directive is rejected with
/// [`Error::NoEdges`]. With a directive, an edgeless graph is allowed.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut edges = BTreeSet::new();
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(rest) = comment.strip_prefix("n ").or_else(|| comment.strip_prefix("n\t")) {
                let count = rest.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad node-count directive '{line}'"),
                })?;
                declared = Some(declared.map_or(count, |d| d.max(count)));
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next_id = |what: &str| -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {what} node id"),
            })?;
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{tok}' is not a nonnegative integer"),
            })
        };
        let u = next_id("first")?;
        let v = next_id("second")?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unexpected trailing token '{extra}'"),
            });
        }
        if u == v {
            return Err(Error::SelfLoop { line: line_no, node: u });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.insert((u.min(v), u.max(v)));
    }

    if edges.is_empty() && declared.is_none() {
        return Err(Error::NoEdges);
    }
    let inferred = max_id.map_or(0, |m| m + 1);
    let n = declared.map_or(inferred, |d| d.max(inferred));
    Ok(Graph::from_set(n, edges))
}

/// 0/1 adjacency matrix; symmetric with zero diagonal.
pub fn adjacency(g: &Graph) -> IntMatrix {
    let n = g.node_count();
    let mut a = IntMatrix::zeros(n, n);
    for (u, v) in g.edges() {
        a[(u, v)] = 1;
        a[(v, u)] = 1;
    }
    a
}

/// Exact `a^power` by repeated squaring. `a^0` is the identity.
pub fn matrix_power(a: &IntMatrix, power: u32) -> Result<IntMatrix> {
    if !a.is_square() {
        return Err(Error::Shape(format!("matrix power of a {}x{} matrix", a.rows(), a.cols())));
    }
    let mut result = IntMatrix::identity(a.rows());
    let mut base = a.clone();
    let mut e = power;
    while e > 0 {
        if e & 1 == 1 {
            result = result.checked_mul(&base)?;
        }
        e >>= 1;
        if e > 0 {
            base = base.checked_mul(&base)?;
        }
    }
    Ok(result)
}

/// All powers `a^0, a^1, ..., a^max_power` by successive multiplication.
pub fn power_sequence(a: &IntMatrix, max_power: u32) -> Result<Vec<IntMatrix>> {
    if !a.is_square() {
        return Err(Error::Shape("power sequence of a non-square matrix".into()));
    }
    let mut powers = Vec::with_capacity(max_power as usize + 1);
    powers.push(IntMatrix::identity(a.rows()));
    for t in 1..=max_power as usize {
        let next = powers[t - 1].checked_mul(a)?;
        powers.push(next);
    }
    Ok(powers)
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the degree matrix of `A + I`.
pub fn normalize_sym(a: &IntMatrix) -> Result<RealMatrix> {
    if !a.is_symmetric() {
        return Err(Error::Shape("normalize_sym expects a symmetric square matrix".into()));
    }
    let n = a.rows();
    let deg: Vec<f64> = (0..n)
        .map(|i| a.row(i).iter().sum::<i64>() as f64 + if a.get(i, i) == 0 { 1.0 } else { 0.0 })
        .collect();
    Ok(RealMatrix::from_fn(n, n, |i, j| {
        let mut v = a.get(i, j) as f64;
        if i == j && v == 0.0 {
            v = 1.0;
        }
        v / (deg[i] * deg[j]).sqrt()
    }))
}

/// Integer power of a real square matrix (`m^0` is the identity).
pub fn real_power(m: &RealMatrix, power: u32) -> Result<RealMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::Shape("power of a non-square matrix".into()));
    }
    let mut out = RealMatrix::identity(m.rows());
    for _ in 0..power {
        out = out.matmul(m)?;
    }
    Ok(out)
}

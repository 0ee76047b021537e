//! Undirected simple graphs, the edge-list text format, fixture generators
//! and hop distances.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// An undirected simple graph with optional positive edge weights.
///
/// Adjacency lists are sorted; `weights[x][k]` is the weight of the edge
/// `(x, adjacency[x][k])` and is `1.0` when the graph is unweighted.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    degrees: Vec<usize>,
    weighted: bool,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("v{i}")).collect()
}

impl Graph {
    /// Builds an unweighted graph on `n` vertices labelled `v1..vn`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::build(default_labels(n), &weighted, false)
    }

    /// Builds a weighted graph on `n` vertices labelled `v1..vn`.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::build(default_labels(n), edges, true)
    }

    /// Builds a graph with explicit labels. Labels must be distinct.
    pub fn with_labels(
        labels: Vec<String>,
        edges: &[(usize, usize, f64)],
        weighted: bool,
    ) -> Result<Self> {
        Self::build(labels, edges, weighted)
    }

    fn build(labels: Vec<String>, edges: &[(usize, usize, f64)], weighted: bool) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate vertex label `{l}`"
                )));
            }
        }
        let mut pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (k, &(u, v, w)) in edges.iter().enumerate() {
            let line = k + 1;
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, len: n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop {
                    line,
                    label: labels[u].clone(),
                });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight {
                    line,
                    token: w.to_string(),
                });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge {
                    line,
                    u: labels[u].clone(),
                    v: labels[v].clone(),
                });
            }
            pairs[u].push((v, w));
            pairs[v].push((u, w));
        }
        let mut adjacency = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut row in pairs {
            row.sort_by_key(|&(y, _)| y);
            adjacency.push(row.iter().map(|&(y, _)| y).collect::<Vec<_>>());
            weights.push(row.iter().map(|&(_, w)| w).collect::<Vec<_>>());
        }
        let degrees = adjacency.iter().map(Vec::len).collect();
        Ok(Graph {
            adjacency,
            weights,
            degrees,
            weighted,
            labels,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().sum::<usize>() / 2
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    /// Weights aligned with [`Graph::neighbors`].
    pub fn neighbor_weights(&self, x: usize) -> &[f64] {
        &self.weights[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.degrees[x]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.weights[x].iter().sum()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn weight(&self, x: usize, y: usize) -> Option<f64> {
        self.adjacency[x]
            .binary_search(&y)
            .ok()
            .map(|k| self.weights[x][k])
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Edges `(x, y, w)` with `x < y`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(x, row)| {
            row.iter()
                .zip(&self.weights[x])
                .filter(move |(&y, _)| y > x)
                .map(move |(&y, &w)| (x, y, w))
        })
    }
}

/// Parses the whitespace-separated edge-list format.
///
/// Each non-empty line not starting with `#` is `u v` or `u v w`. Labels are
/// assigned dense indices in order of first appearance.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut weighted = false;

    let mut intern = |label: &str, labels: &mut Vec<String>| -> usize {
        *index.entry(label.to_string()).or_insert_with(|| {
            labels.push(label.to_string());
            labels.len() - 1
        })
    };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let (a, b, w) = match tokens.as_slice() {
            [a, b] => (*a, *b, 1.0),
            [a, b, w] => {
                let value: f64 = w.parse().map_err(|_| Error::InvalidWeight {
                    line,
                    token: w.to_string(),
                })?;
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::InvalidWeight {
                        line,
                        token: w.to_string(),
                    });
                }
                weighted = true;
                (*a, *b, value)
            }
            _ => {
                return Err(Error::EdgeList {
                    line,
                    message: format!("expected `u v [w]`, found {} tokens", tokens.len()),
                })
            }
        };
        if a == b {
            return Err(Error::SelfLoop {
                line,
                label: a.to_string(),
            });
        }
        let u = intern(a, &mut labels);
        let v = intern(b, &mut labels);
        let key = (u.min(v), u.max(v));
        if seen.insert(key, line).is_some() {
            return Err(Error::DuplicateEdge {
                line,
                u: a.to_string(),
                v: b.to_string(),
            });
        }
        edges.push((u, v, w));
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Graph::build(labels, &edges, weighted)
}

/// Writes `g` in edge-list form: smaller label first on each line, lines
/// sorted lexicographically. Weights are emitted only for weighted graphs.
pub fn serialize_edge_list(g: &Graph) -> String {
    let mut lines: Vec<(&str, &str, f64)> = g
        .edges()
        .map(|(x, y, w)| {
            let (a, b) = (g.label(x), g.label(y));
            if a <= b {
                (a, b, w)
            } else {
                (b, a, w)
            }
        })
        .collect();
    lines.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
    let mut out = String::new();
    for (a, b, w) in lines {
        if g.is_weighted() {
            let _ = writeln!(out, "{a} {b} {w}");
        } else {
            let _ = writeln!(out, "{a} {b}");
        }
    }
    out
}

/// Fixture families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    Path(usize),
    Cycle(usize),
    /// Star with one centre (`v1`) and the given number of leaves.
    Star(usize),
    Complete(usize),
    Grid2d {
        rows: usize,
        cols: usize,
    },
    RandomConnected {
        n: usize,
        p: f64,
        seed: u64,
    },
}

const MAX_RESAMPLES: usize = 100_000;

pub fn generate(kind: GraphKind) -> Result<Graph> {
    let zero = |what: &str| Error::InvalidParameter(format!("{what} must be at least 1"));
    match kind {
        GraphKind::Path(n) => {
            if n == 0 {
                return Err(zero("path length"));
            }
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Cycle(n) => {
            if n < 3 {
                return Err(Error::InvalidParameter(
                    "a simple cycle needs at least 3 vertices".into(),
                ));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Star(leaves) => {
            if leaves == 0 {
                return Err(zero("leaf count"));
            }
            let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
            Graph::from_edges(leaves + 1, &edges)
        }
        GraphKind::Complete(n) => {
            if n == 0 {
                return Err(zero("vertex count"));
            }
            let edges: Vec<_> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Grid2d { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(zero("grid dimension"));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Graph::from_edges(rows * cols, &edges)
        }
        GraphKind::RandomConnected { n, p, seed } => random_connected(n, p, seed),
    }
}

/// Erdős–Rényi `G(n, p)` resampled from one seeded stream until connected.
fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "vertex count must be at least 1".into(),
        ));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(n, &edges)?;
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no connected sample of G({n}, {p}) after {MAX_RESAMPLES} attempts"
    )))
}

fn bfs_into(g: &Graph, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.fill(UNREACHABLE);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(x) = queue.pop_front() {
        let next = dist[x] + 1;
        for &y in g.neighbors(x) {
            if dist[y] == UNREACHABLE {
                dist[y] = next;
                queue.push_back(y);
            }
        }
    }
}

pub fn is_connected(g: &Graph) -> bool {
    let n = g.n();
    if n <= 1 {
        return true;
    }
    let mut dist = vec![UNREACHABLE; n];
    bfs_into(g, 0, &mut dist, &mut VecDeque::with_capacity(n));
    dist.iter().all(|&d| d != UNREACHABLE)
}

/// Marker for vertex pairs with no connecting path.
pub const UNREACHABLE: u32 = u32::MAX;

/// Dense `n × n` table of hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    d: Vec<u32>,
}

impl DistanceTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Raw entry; [`UNREACHABLE`] if `y` cannot be reached from `x`.
    pub fn raw(&self, x: usize, y: usize) -> u32 {
        self.d[x * self.n + y]
    }

    pub fn get(&self, x: usize, y: usize) -> Option<u32> {
        Some(self.raw(x, y)).filter(|&d| d != UNREACHABLE)
    }

    pub fn row(&self, x: usize) -> &[u32] {
        &self.d[x * self.n..(x + 1) * self.n]
    }

    pub fn has_unreachable(&self) -> bool {
        self.d.contains(&UNREACHABLE)
    }
}

pub fn all_pairs_hop_distances(g: &Graph) -> DistanceTable {
    all_pairs_hop_distances_with(g, Execution::default())
}

/// One BFS per source; sources may run in parallel, output is identical.
pub fn all_pairs_hop_distances_with(g: &Graph, exec: Execution) -> DistanceTable {
    let n = g.n();
    let mut d = vec![UNREACHABLE; n * n];
    if n > 0 {
        exec::for_each_chunk_mut(exec, &mut d, n, |source, row| {
            bfs_into(g, source, row, &mut VecDeque::with_capacity(n));
        });
    }
    DistanceTable { n, d }
}

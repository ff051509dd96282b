//! Undirected, unweighted networks.
//!
//! A [`Graph`] is immutable once built. Node ids are contiguous `0..n`;
//! every edge is stored once as `(i, j)` with `i < j`, and adjacency lists
//! are kept sorted so iteration order is deterministic.

mod generate;
mod io;
mod spectral;
mod stats;

pub use generate::{generate_ba, generate_er, generate_ws};
pub use io::{load_edge_list, load_edge_list_file, EdgeListImport};
pub use spectral::{dominant_eigenvalue, spectral_radius, DEFAULT_SPECTRAL_TOL, MAX_POWER_ITERATIONS};
pub use stats::{network_stats, NetworkStats};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

/// Counts of input edges discarded while building a [`Graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dropped {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes, silently dropping self-loops and repeated
    /// pairs. Use [`Graph::from_edges_counted`] to learn how many were dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges_counted(n, edges).map(|(g, _)| g)
    }

    pub fn from_edges_counted(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<(Self, Dropped)> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut dropped = Dropped::default();
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                dropped.self_loops += 1;
                continue;
            }
            list.push((a.min(b), a.max(b)));
        }
        let before = list.len();
        list.sort_unstable();
        list.dedup();
        dropped.duplicates = before - list.len();
        for &(a, b) in &list {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok((Graph { adjacency, edges: list }, dropped))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.node_count() as f64
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// `out[i] = sum_j A_ij x_j`.
    pub fn adjacency_apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, nbrs) in out.iter_mut().zip(&self.adjacency) {
            *o = nbrs.iter().map(|&j| x[j]).sum();
        }
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count() {
            return Err(Error::LengthMismatch {
                left: perm.len(),
                right: self.node_count(),
            });
        }
        Graph::from_edges(
            self.node_count(),
            self.edges.iter().map(|&(a, b)| (perm[a], perm[b])),
        )
    }

    /// Hop distances from `source`; unreachable nodes get `usize::MAX`.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|&d| d != usize::MAX)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Graph::from_edges(n.max(1), edges).expect("valid complete graph")
    }

    pub fn path(n: usize) -> Self {
        Graph::from_edges(n.max(1), (1..n).map(|i| (i - 1, i))).expect("valid path graph")
    }

    pub fn cycle(n: usize) -> Self {
        let edges = (0..n).map(|i| (i, (i + 1) % n));
        Graph::from_edges(n.max(1), edges).expect("valid cycle graph")
    }

    /// Star with node 0 as the hub.
    pub fn star(leaves: usize) -> Self {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("valid star graph")
    }

    /// Ring lattice where each node links to its `k/2` nearest neighbours on each side.
    pub fn ring_lattice(n: usize, k: usize) -> Self {
        let half = k / 2;
        let edges = (0..n).flat_map(|i| (1..=half).map(move |j| (i, (i + j) % n)));
        Graph::from_edges(n.max(1), edges).expect("valid ring lattice")
    }
}

//! Synthetic network generators. All are deterministic for a fixed seed.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Barabási–Albert preferential attachment.
///
/// Starts from `m_attach` isolated nodes; node `m_attach` links to all of
/// them, and every later node links to `m_attach` distinct existing nodes
/// drawn with probability proportional to degree. Produces exactly
/// `m_attach * (n - m_attach)` edges and a connected graph.
pub fn generate_ba(n: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach < 1 || n <= m_attach {
        return Err(Error::InvalidParameter(format!(
            "BA requires n > m_attach >= 1 (got n={n}, m_attach={m_attach})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m_attach * (n - m_attach));
    // one entry per edge endpoint, so uniform draws are degree-proportional
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m_attach * n);
    let mut targets: Vec<usize> = (0..m_attach).collect();

    for source in m_attach..n {
        for &t in &targets {
            edges.push((t, source));
        }
        endpoints.extend_from_slice(&targets);
        endpoints.extend(std::iter::repeat(source).take(m_attach));

        let mut chosen = BTreeSet::new();
        while chosen.len() < m_attach {
            chosen.insert(endpoints[rng.gen_range(0..endpoints.len())]);
        }
        targets = chosen.into_iter().collect();
    }
    Graph::from_edges(n, edges)
}

/// Watts–Strogatz small world: ring lattice of even degree `k`, then each
/// lattice edge `(u, u+j)` is rewired to `(u, w)` with probability `p`,
/// avoiding self-loops and duplicates. Edge count stays `n * k / 2`.
pub fn generate_ws(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph> {
    if k % 2 != 0 {
        return Err(Error::InvalidParameter(format!("WS degree k must be even (got {k})")));
    }
    if k < 2 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "WS requires n > k >= 2 (got n={n}, k={k})"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("rewire probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.gen::<f64>() >= p {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let mut w = rng.gen_range(0..n);
            while w == u || adj[u].contains(&w) {
                w = rng.gen_range(0..n);
            }
            // the lattice edge may already have been rewired away from u's side
            if adj[u].remove(&v) {
                adj[v].remove(&u);
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)));
    Graph::from_edges(n, edges)
}

/// Erdős–Rényi G(n, m): exactly `m` distinct edges drawn uniformly.
pub fn generate_er(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("ER requires n >= 1".into()));
    }
    let total = n * (n - 1) / 2;
    if m > total {
        return Err(Error::InvalidParameter(format!(
            "ER edge count {m} exceeds n(n-1)/2 = {total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // row_start[i] = index of pair (i, i+1) in the row-major upper triangle
    let row_start: Vec<usize> = (0..n).map(|i| i * (2 * n - i - 1) / 2).collect();
    let mut picks = index::sample(&mut rng, total, m).into_vec();
    picks.sort_unstable();
    let edges = picks.into_iter().map(|p| {
        let i = row_start.partition_point(|&s| s <= p) - 1;
        (i, i + 1 + (p - row_start[i]))
    });
    Graph::from_edges(n, edges)
}

//! Cycle number and cycle ratio from per-node shortest cycles.
//!
//! For every node `i`, let `g_i` be the length of the shortest simple cycle
//! through `i` (ignored when longer than `max_len`). The cycles of length
//! `g_i` through `i` are node `i`'s shortest cycles; their union over all
//! nodes is the associated cycle set `S`.
//!
//! - cycle number: how many of its own shortest cycles pass through `i`;
//! - cycle ratio: `sum_j c_ij / c_jj`, where `c_ij` counts cycles of `S`
//!   containing both `i` and `j` (so `c_jj` counts those containing `j`).

use std::collections::{BTreeSet, VecDeque};

use super::{require_nodes, CentralityVector, Metric};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_MAX_CYCLE_LEN: usize = 6;

/// Per-node shortest cycles and their union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestCycles {
    /// Shortest cycle length through each node, if at most `max_len`.
    pub girth: Vec<Option<usize>>,
    /// Number of shortest cycles through each node (of length `girth[i]`).
    pub own_count: Vec<usize>,
    /// The associated set `S`, each cycle in canonical node order.
    pub cycles: BTreeSet<Vec<usize>>,
}

pub fn shortest_cycle_basis(g: &Graph, max_len: usize) -> Result<ShortestCycles> {
    if max_len < 3 {
        return Err(Error::InvalidParameter(format!(
            "cycle length cap must be at least 3 (got {max_len})"
        )));
    }
    require_nodes(g, 3, "cycle centralities")?;
    let n = g.node_count();
    let mut girth = vec![None; n];
    let mut own_count = vec![0; n];
    let mut cycles = BTreeSet::new();

    let mut on_path = vec![false; n];
    for i in 0..n {
        let (dist, len) = match shortest_cycle_through(g, i) {
            Some((dist, len)) if len <= max_len => (dist, len),
            _ => continue,
        };
        girth[i] = Some(len);
        let mut path = vec![i];
        on_path[i] = true;
        let mut found = Vec::new();
        extend_paths(g, &dist, len, &mut path, &mut on_path, &mut found);
        on_path[i] = false;
        own_count[i] = found.len();
        for c in found {
            cycles.insert(canonical(c));
        }
    }
    Ok(ShortestCycles {
        girth,
        own_count,
        cycles,
    })
}

pub fn cycle_number(g: &Graph, max_len: usize) -> Result<CentralityVector> {
    let basis = shortest_cycle_basis(g, max_len)?;
    Ok(CentralityVector {
        metric: Metric::Cn,
        values: basis.own_count.iter().map(|&c| c as f64).collect(),
    })
}

pub fn cycle_ratio(g: &Graph, max_len: usize) -> Result<CentralityVector> {
    let basis = shortest_cycle_basis(g, max_len)?;
    let n = g.node_count();
    let mut through = vec![0usize; n];
    for c in &basis.cycles {
        for &v in c {
            through[v] += 1;
        }
    }
    // sum_j c_ij / c_jj = sum over cycles C containing i of sum_{j in C} 1 / c_jj
    let mut values = vec![0.0; n];
    for c in &basis.cycles {
        let weight: f64 = c.iter().map(|&j| 1.0 / through[j] as f64).sum();
        for &i in c {
            values[i] += weight;
        }
    }
    Ok(CentralityVector {
        metric: Metric::Cr,
        values,
    })
}

/// BFS distances from `i` together with the length of the shortest cycle
/// through `i`. A cycle through `i` leaves and re-enters through two
/// different neighbours, so it must cross an edge joining two different
/// BFS branches; the shortest such crossing gives the girth at `i`.
fn shortest_cycle_through(g: &Graph, i: usize) -> Option<(Vec<usize>, usize)> {
    let n = g.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut branch = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[i] = 0;
    for &a in g.neighbors(i) {
        dist[a] = 1;
        branch[a] = a;
        queue.push_back(a);
    }
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                branch[w] = branch[v];
                queue.push_back(w);
            }
        }
    }
    let best = g
        .edges()
        .iter()
        .filter(|&&(x, y)| x != i && y != i)
        .filter(|&&(x, y)| dist[x] != usize::MAX && branch[x] != branch[y])
        .map(|&(x, y)| dist[x] + dist[y] + 1)
        .min()?;
    Some((dist, best))
}

/// Depth-first extension of simple paths from `path[0]` that can still close
/// into a cycle of exactly `len` edges. Each cycle is reported once, in the
/// orientation whose second node is smaller than its last.
fn extend_paths(
    g: &Graph,
    dist: &[usize],
    len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut Vec<Vec<usize>>,
) {
    let root = path[0];
    let last = *path.last().expect("path starts at the root");
    if path.len() == len {
        if g.has_edge(last, root) && path[1] < last {
            found.push(path.clone());
        }
        return;
    }
    let remaining_after_step = len - path.len();
    for &w in g.neighbors(last) {
        if on_path[w] || dist[w] > remaining_after_step {
            continue;
        }
        on_path[w] = true;
        path.push(w);
        extend_paths(g, dist, len, path, on_path, found);
        path.pop();
        on_path[w] = false;
    }
}

/// Rotates a cycle to start at its smallest node, oriented so the second
/// node is smaller than the last.
fn canonical(mut cycle: Vec<usize>) -> Vec<usize> {
    let pos = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, v)| *v)
        .map(|(p, _)| p)
        .unwrap_or(0);
    cycle.rotate_left(pos);
    if cycle.len() > 2 && cycle[1] > cycle[cycle.len() - 1] {
        cycle[1..].reverse();
    }
    cycle
}

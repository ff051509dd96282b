//! Node importance measures.
//!
//! All paths are unweighted hop counts found by breadth-first search.

mod cycles;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

pub use cycles::{cycle_number, cycle_ratio, shortest_cycle_basis, DEFAULT_MAX_CYCLE_LEN};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Degree centrality.
    Dc,
    /// Betweenness centrality.
    Bc,
    /// Closeness centrality.
    Cc,
    /// Cycle number.
    Cn,
    /// Cycle ratio.
    Cr,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Dc, Metric::Bc, Metric::Cc, Metric::Cn, Metric::Cr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Dc => "DC",
            Metric::Bc => "BC",
            Metric::Cc => "CC",
            Metric::Cn => "CN",
            Metric::Cr => "CR",
        }
    }

    /// Evaluates this metric; `max_cycle_len` only matters for CN and CR.
    pub fn compute(self, g: &Graph, max_cycle_len: usize) -> Result<CentralityVector> {
        match self {
            Metric::Dc => degree_centrality(g),
            Metric::Bc => betweenness_centrality(g),
            Metric::Cc => closeness_centrality(g),
            Metric::Cn => cycle_number(g, max_cycle_len),
            Metric::Cr => cycle_ratio(g, max_cycle_len),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dc" | "degree" => Ok(Metric::Dc),
            "bc" | "betweenness" => Ok(Metric::Bc),
            "cc" | "closeness" => Ok(Metric::Cc),
            "cn" | "cycle_number" => Ok(Metric::Cn),
            "cr" | "cycle_ratio" => Ok(Metric::Cr),
            other => Err(Error::InvalidParameter(format!("unknown centrality metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub metric: Metric,
    pub values: Vec<f64>,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest value (lowest index on ties).
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.map_or(true, |b| v > self.values[b]) {
                best = Some(i);
            }
        }
        best
    }
}

fn require_nodes(g: &Graph, min: usize, what: &str) -> Result<()> {
    if g.node_count() < min {
        return Err(Error::InvalidParameter(format!(
            "{what} needs at least {min} nodes (got {})",
            g.node_count()
        )));
    }
    Ok(())
}

/// `degree / (N - 1)`.
pub fn degree_centrality(g: &Graph) -> Result<CentralityVector> {
    require_nodes(g, 2, "degree centrality")?;
    let scale = 1.0 / (g.node_count() - 1) as f64;
    Ok(CentralityVector {
        metric: Metric::Dc,
        values: (0..g.node_count()).map(|i| g.degree(i) as f64 * scale).collect(),
    })
}

/// Shortest-path betweenness via Brandes accumulation, normalised by the
/// number of unordered pairs not containing the node, `(N-1)(N-2)/2`.
pub fn betweenness_centrality(g: &Graph) -> Result<CentralityVector> {
    require_nodes(g, 3, "betweenness centrality")?;
    let n = g.node_count();
    let mut score = vec![0.0; n];

    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        sigma.iter_mut().for_each(|v| *v = 0.0);
        dist.iter_mut().for_each(|v| *v = usize::MAX);
        delta.iter_mut().for_each(|v| *v = 0.0);
        order.clear();

        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in g.neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }

    // every unordered pair was visited from both ends
    let pairs = ((n - 1) * (n - 2)) as f64;
    Ok(CentralityVector {
        metric: Metric::Bc,
        values: score.into_iter().map(|v| v / pairs).collect(),
    })
}

/// Component-corrected closeness:
/// `(r / (N-1)) * (r / sum_of_distances)` with `r` the number of nodes reachable
/// from `i`. Isolated nodes score 0.
pub fn closeness_centrality(g: &Graph) -> Result<CentralityVector> {
    require_nodes(g, 2, "closeness centrality")?;
    let n = g.node_count();
    let values = (0..n)
        .map(|i| {
            let (reach, total) = g
                .bfs_distances(i)
                .into_iter()
                .filter(|&d| d != usize::MAX && d > 0)
                .fold((0usize, 0usize), |(r, t), d| (r + 1, t + d));
            if total == 0 {
                0.0
            } else {
                let r = reach as f64;
                (r / (n - 1) as f64) * (r / total as f64)
            }
        })
        .collect();
    Ok(CentralityVector {
        metric: Metric::Cc,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_on_star_and_complete() {
        let dc = degree_centrality(&Graph::star(4)).unwrap();
        assert_eq!(dc.values, vec![1.0, 0.25, 0.25, 0.25, 0.25]);
        let dc = degree_centrality(&Graph::complete(4)).unwrap();
        assert_eq!(dc.values, vec![1.0; 4]);
    }

    #[test]
    fn betweenness_path_and_cycle() {
        let bc = betweenness_centrality(&Graph::path(3)).unwrap();
        assert_eq!(bc.values, vec![0.0, 1.0, 0.0]);
        let bc = betweenness_centrality(&Graph::cycle(4)).unwrap();
        // each node lies on half of the two shortest paths between its two neighbours
        for v in &bc.values {
            assert_abs_diff_eq!(*v, bc.values[0], epsilon = 1e-15);
            assert_abs_diff_eq!(*v, 0.5 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn betweenness_star_center() {
        let bc = betweenness_centrality(&Graph::star(5)).unwrap();
        assert_abs_diff_eq!(bc.values[0], 1.0, epsilon = 1e-15);
        assert!(bc.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn closeness_cases() {
        let cc = closeness_centrality(&Graph::star(4)).unwrap();
        assert_eq!(cc.values[0], 1.0);
        let cc = closeness_centrality(&Graph::path(3)).unwrap();
        assert_eq!(cc.values[1], 1.0);
        assert_abs_diff_eq!(cc.values[0], 2.0 / 3.0, epsilon = 1e-15);
        let g = Graph::from_edges(4, vec![(0, 1), (2, 3)]).unwrap();
        let cc = closeness_centrality(&g).unwrap();
        for v in cc.values {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
        let g = Graph::from_edges(3, vec![(0, 1)]).unwrap();
        assert_eq!(closeness_centrality(&g).unwrap().values[2], 0.0);
    }

    #[test]
    fn too_small_graphs_rejected() {
        assert!(betweenness_centrality(&Graph::path(2)).is_err());
        assert!(degree_centrality(&Graph::path(1)).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("pagerank".parse::<Metric>().is_err());
    }
}

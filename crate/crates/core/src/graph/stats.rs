use super::Graph;
use crate::error::{Error, Result};

/// Topology summary of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub n: usize,
    pub m: usize,
    pub mean_degree: f64,
    /// Mean local clustering; nodes with degree < 2 count as 0.
    pub clustering: f64,
    /// Mean hop distance over ordered pairs that are connected.
    pub mean_path_length: f64,
    /// Degree correlation across edge ends; `None` when all edge ends have
    /// the same degree.
    pub assortativity: Option<f64>,
    /// Coefficient of variation of the degree sequence (population std / mean).
    pub heterogeneity: f64,
}

pub fn network_stats(g: &Graph) -> Result<NetworkStats> {
    let n = g.node_count();
    let m = g.edge_count();
    if n < 2 || m < 1 {
        return Err(Error::Undefined(format!(
            "network statistics need N >= 2 and M >= 1 (got N={n}, M={m})"
        )));
    }
    Ok(NetworkStats {
        n,
        m,
        mean_degree: g.mean_degree(),
        clustering: mean_clustering(g),
        mean_path_length: mean_path_length(g),
        assortativity: assortativity(g),
        heterogeneity: heterogeneity(&g.degrees()),
    })
}

fn mean_clustering(g: &Graph) -> f64 {
    let n = g.node_count();
    let total: f64 = (0..n)
        .map(|i| {
            let nbrs = g.neighbors(i);
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (a, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[a + 1..] {
                    if g.has_edge(x, y) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .sum();
    total / n as f64
}

fn mean_path_length(g: &Graph) -> f64 {
    let mut sum = 0u64;
    let mut pairs = 0u64;
    for s in 0..g.node_count() {
        for (t, &d) in g.bfs_distances(s).iter().enumerate() {
            if t != s && d != usize::MAX {
                sum += d as u64;
                pairs += 1;
            }
        }
    }
    sum as f64 / pairs as f64
}

fn assortativity(g: &Graph) -> Option<f64> {
    let ends = 2.0 * g.edge_count() as f64;
    let deg = g.degrees();
    // symmetric over edge orientation, so both end marginals share one mean/variance
    let mean = g.edges().iter().map(|&(a, b)| (deg[a] + deg[b]) as f64).sum::<f64>() / ends;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(a, b) in g.edges() {
        let x = deg[a] as f64 - mean;
        let y = deg[b] as f64 - mean;
        cov += 2.0 * x * y;
        var += x * x + y * y;
    }
    if var / ends < 1e-24 {
        None
    } else {
        Some(cov / var)
    }
}

pub(crate) fn heterogeneity(degrees: &[usize]) -> f64 {
    let n = degrees.len() as f64;
    let mean = degrees.iter().sum::<usize>() as f64 / n;
    let var = degrees.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

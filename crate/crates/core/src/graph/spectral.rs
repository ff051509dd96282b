use super::Graph;
use crate::error::{Error, Result};

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const MAX_POWER_ITERATIONS: usize = 100_000;

/// Largest eigenvalue of a symmetric nonnegative operator `M`, by power
/// iteration on `M + I`.
///
/// The unit shift moves the spectrum of a nonnegative symmetric matrix into
/// `[1 - rho, 1 + rho]`, so `1 + rho` strictly dominates and bipartite
/// structure cannot make the iteration oscillate. Convergence is declared
/// when the eigen-residual `||(M + I)x - mu x||` drops below `tol`, which
/// for a symmetric operator bounds the eigenvalue error by `tol`.
pub fn dominant_eigenvalue<F>(n: usize, mut apply: F, tol: f64, max_iterations: usize) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return Err(Error::InvalidParameter("empty operator".into()));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut mu = 0.0;
    let mut previous = f64::NAN;
    for _ in 0..max_iterations {
        apply(&x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        let xx = x.iter().map(|a| a * a).sum::<f64>();
        mu = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / xx;
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - mu * a).powi(2))
            .sum::<f64>()
            .sqrt();
        // below this the residual is dominated by rounding and cannot shrink further
        let stalled = (mu - previous).abs() <= 4.0 * f64::EPSILON * mu.abs();
        if residual <= tol || stalled {
            return Ok((mu - 1.0).max(0.0));
        }
        previous = mu;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        last_estimate: mu - 1.0,
    })
}

/// Spectral radius of the adjacency matrix.
pub fn spectral_radius(g: &Graph, tol: f64) -> Result<f64> {
    dominant_eigenvalue(
        g.node_count(),
        |x, y| g.adjacency_apply(x, y),
        tol,
        MAX_POWER_ITERATIONS,
    )
}

//! Suppression metrics and weight–centrality correlation analytics.
//!
//! Infection density is the node mean `(1/N) sum_i I_i(t)`. Peak is its
//! maximum over the grid and Area its trapezoidal integral.

use crate::centrality::{CentralityVector, Metric};
use crate::control::{trapezoid, ControlTrajectory};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sir::{fmt_sig, StateTrajectory};

/// Variances below this make a correlation undefined.
pub const VARIANCE_FLOOR: f64 = 1e-24;

/// Product-moment correlation; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewValues(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx / n < VARIANCE_FLOOR || syy / n < VARIANCE_FLOOR {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// `r(t_k)` between the weights and each centrality, over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub grid: Vec<f64>,
    pub metrics: Vec<Metric>,
    /// `values[m][k]`; `None` where the correlation is undefined.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationSeries {
    /// Mean of the defined values of metric `m` over grid indices whose
    /// fractional position `k / K` lies in `[from, to]`.
    pub fn window_mean(&self, m: usize, from: f64, to: f64) -> Option<f64> {
        window_mean(&self.values[m], from, to)
    }

    /// CSV with `t,r_<metric>...`; undefined entries are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for m in &self.metrics {
            out.push_str(&format!(",r_{}", m.name()));
        }
        out.push('\n');
        for (k, t) in self.grid.iter().enumerate() {
            out.push_str(&fmt_sig(*t));
            for series in &self.values {
                out.push(',');
                out.push_str(&series[k].map_or_else(|| "NA".to_string(), fmt_sig));
            }
            out.push('\n');
        }
        out
    }
}

fn window_mean(series: &[Option<f64>], from: f64, to: f64) -> Option<f64> {
    let last = series.len().saturating_sub(1).max(1) as f64;
    let picked: Vec<f64> = series
        .iter()
        .enumerate()
        .filter(|&(k, _)| {
            let pos = k as f64 / last;
            pos >= from && pos <= to
        })
        .filter_map(|(_, v)| *v)
        .collect();
    if picked.is_empty() {
        None
    } else {
        Some(picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

pub fn correlation_series(control: &ControlTrajectory, metrics: &[CentralityVector]) -> Result<CorrelationSeries> {
    let n = control.node_count();
    let mut values = Vec::with_capacity(metrics.len());
    for c in metrics {
        if c.len() != n {
            return Err(Error::LengthMismatch { left: c.len(), right: n });
        }
        let series = control
            .weights
            .iter()
            .map(|w| pearson(w, &c.values))
            .collect::<Result<Vec<_>>>()?;
        values.push(series);
    }
    Ok(CorrelationSeries {
        grid: control.grid.clone(),
        metrics: metrics.iter().map(|c| c.metric).collect(),
        values,
    })
}

/// Largest node-mean infection over the grid.
pub fn peak(traj: &StateTrajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(traj.mean_infected().into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Trapezoidal integral of the node-mean infection.
pub fn area(traj: &StateTrajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(trapezoid(&traj.grid, &traj.mean_infected()))
}

/// Gap between the best (smallest) and the runner-up value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// `v_(2) - v_(1)`.
    pub delta: f64,
    /// `delta / v_(2) * 100`.
    pub p: f64,
    /// `delta / v_(1) * 100`; `None` when `v_(1) = 0`.
    pub p_alt: Option<f64>,
    pub best: usize,
    pub second: usize,
}

pub fn efficiency(values: &[f64]) -> Result<Efficiency> {
    if values.len() < 2 {
        return Err(Error::TooFewValues(values.len()));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("value {k} is not finite")));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let (best, second) = (idx[0], idx[1]);
    let (v1, v2) = (values[best], values[second]);
    let delta = v2 - v1;
    let p = if delta == 0.0 || v2 == 0.0 { 0.0 } else { delta / v2 * 100.0 };
    let p_alt = if delta == 0.0 {
        Some(0.0)
    } else if v1 == 0.0 {
        None
    } else {
        Some(delta / v1 * 100.0)
    };
    Ok(Efficiency {
        delta,
        p,
        p_alt,
        best,
        second,
    })
}

/// Mean weight per degree class over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeClassSeries {
    pub grid: Vec<f64>,
    /// Lower edge of each bin in normalised degree `k / k_max`.
    pub lower: Vec<f64>,
    pub counts: Vec<usize>,
    /// `means[b][k]`; `None` for empty bins.
    pub means: Vec<Vec<Option<f64>>>,
}

impl DegreeClassSeries {
    /// Indices of the lowest and highest nonempty bins.
    pub fn extreme_bins(&self) -> Option<(usize, usize)> {
        let lo = self.counts.iter().position(|&c| c > 0)?;
        let hi = self.counts.iter().rposition(|&c| c > 0)?;
        Some((lo, hi))
    }

    pub fn window_mean(&self, b: usize, from: f64, to: f64) -> Option<f64> {
        window_mean(&self.means[b], from, to)
    }

    /// CSV with `t,bin_0,...`; empty bins are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (b, lo) in self.lower.iter().enumerate() {
            out.push_str(&format!(",bin_{b}[{}]", fmt_sig(*lo)));
        }
        out.push('\n');
        for (k, t) in self.grid.iter().enumerate() {
            out.push_str(&fmt_sig(*t));
            for series in &self.means {
                out.push(',');
                out.push_str(&series[k].map_or_else(|| "NA".to_string(), fmt_sig));
            }
            out.push('\n');
        }
        out
    }
}

/// Partitions nodes into `bins` equal-width classes of `k / k_max` (the
/// top class is closed) and averages the weights in each class.
pub fn degree_class_series(control: &ControlTrajectory, g: &Graph, bins: usize) -> Result<DegreeClassSeries> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins (got {bins})")));
    }
    let n = g.node_count();
    if control.node_count() != n {
        return Err(Error::LengthMismatch {
            left: control.node_count(),
            right: n,
        });
    }
    let kmax = g.max_degree().max(1) as f64;
    let class: Vec<usize> = (0..n)
        .map(|v| ((g.degree(v) as f64 / kmax * bins as f64) as usize).min(bins - 1))
        .collect();
    let mut counts = vec![0; bins];
    for &b in &class {
        counts[b] += 1;
    }
    let means = (0..bins)
        .map(|b| {
            control
                .weights
                .iter()
                .map(|w| {
                    if counts[b] == 0 {
                        return None;
                    }
                    let sum: f64 = (0..n).filter(|&v| class[v] == b).map(|v| w[v]).sum();
                    Some(sum / counts[b] as f64)
                })
                .collect()
        })
        .collect();
    Ok(DegreeClassSeries {
        grid: control.grid.clone(),
        lower: (0..bins).map(|b| b as f64 / bins as f64).collect(),
        counts,
        means,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMetrics {
    pub name: String,
    pub peak: f64,
    pub area: f64,
}

/// Peak/Area per strategy with the best-vs-runner-up gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<StrategyMetrics>,
    /// `None` when fewer than two strategies are present.
    pub peak_efficiency: Option<Efficiency>,
    pub area_efficiency: Option<Efficiency>,
}

impl MetricsReport {
    pub fn new(rows: Vec<StrategyMetrics>) -> Self {
        let peaks: Vec<f64> = rows.iter().map(|r| r.peak).collect();
        let areas: Vec<f64> = rows.iter().map(|r| r.area).collect();
        MetricsReport {
            peak_efficiency: efficiency(&peaks).ok(),
            area_efficiency: efficiency(&areas).ok(),
            rows,
        }
    }

    fn summary(&self) -> Vec<(&'static str, String, String)> {
        let cell = |e: &Option<Efficiency>, f: fn(&Efficiency) -> Option<f64>| {
            e.as_ref().and_then(f).map_or_else(|| "NA".to_string(), fmt_sig)
        };
        vec![
            (
                "Delta",
                cell(&self.peak_efficiency, |e| Some(e.delta)),
                cell(&self.area_efficiency, |e| Some(e.delta)),
            ),
            (
                "P(%)",
                cell(&self.peak_efficiency, |e| Some(e.p)),
                cell(&self.area_efficiency, |e| Some(e.p)),
            ),
            (
                "P_alt(%)",
                cell(&self.peak_efficiency, |e| e.p_alt),
                cell(&self.area_efficiency, |e| e.p_alt),
            ),
        ]
    }

    /// CSV with one row per strategy, followed by `Delta`, `P(%)` and `P_alt(%)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,peak,area\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.name, fmt_sig(r.peak), fmt_sig(r.area)));
        }
        for (label, p, a) in self.summary() {
            out.push_str(&format!("{label},{p},{a}\n"));
        }
        out
    }

    /// Aligned plain-text table with the same layout as the CSV.
    pub fn to_table(&self) -> String {
        let mut lines: Vec<(String, String, String)> = vec![("Method".into(), "Peak".into(), "Area".into())];
        for r in &self.rows {
            lines.push((r.name.clone(), format!("{:.4}", r.peak), format!("{:.4}", r.area)));
        }
        for (label, p, a) in self.summary() {
            lines.push((label.to_string(), p, a));
        }
        let w0 = lines.iter().map(|l| l.0.len()).max().unwrap_or(0);
        let w1 = lines.iter().map(|l| l.1.len()).max().unwrap_or(0);
        let w2 = lines.iter().map(|l| l.2.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, (a, b, c)) in lines.iter().enumerate() {
            out.push_str(&format!("{a:<w0$}  {b:>w1$}  {c:>w2$}\n"));
            if k == 0 || k == self.rows.len() {
                out.push_str(&format!("{}\n", "-".repeat(w0 + w1 + w2 + 4)));
            }
        }
        out
    }
}

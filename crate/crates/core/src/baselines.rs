//! Comparison allocation strategies.
//!
//! Static strategies fix one weight vector for the whole horizon: uniform,
//! or proportional to a centrality (`+`) or to its reflection
//! `max + min - c` (`-`). The dynamic DRA baseline treats the currently
//! infected nodes in a fixed priority order that approximately minimises the
//! order's maxcut, and uses the treatment rate rule `γ_i = γ0 + u w_i`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::centrality::{CentralityVector, Metric, DEFAULT_MAX_CYCLE_LEN};
use crate::control::{fbs_solve, ControlTrajectory, FbsConfig, FbsReport};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sir::{integrate, integrate_feedback, NodeState, RateRule, SirParams, StateTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// One of the fourteen compared strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Optimal,
    /// Uniform static allocation.
    Un,
    Centrality(Metric, Sign),
    Dra,
    /// No intervention.
    Unc,
}

impl Strategy {
    /// All strategies in the order they are tabulated.
    pub const ALL: [Strategy; 14] = [
        Strategy::Optimal,
        Strategy::Un,
        Strategy::Centrality(Metric::Dc, Sign::Plus),
        Strategy::Centrality(Metric::Dc, Sign::Minus),
        Strategy::Centrality(Metric::Bc, Sign::Plus),
        Strategy::Centrality(Metric::Bc, Sign::Minus),
        Strategy::Centrality(Metric::Cc, Sign::Plus),
        Strategy::Centrality(Metric::Cc, Sign::Minus),
        Strategy::Centrality(Metric::Cn, Sign::Plus),
        Strategy::Centrality(Metric::Cn, Sign::Minus),
        Strategy::Centrality(Metric::Cr, Sign::Plus),
        Strategy::Centrality(Metric::Cr, Sign::Minus),
        Strategy::Dra,
        Strategy::Unc,
    ];

    pub fn name(self) -> String {
        match self {
            Strategy::Optimal => "Optimal".into(),
            Strategy::Un => "UN".into(),
            Strategy::Centrality(m, Sign::Plus) => format!("{}+", m.name()),
            Strategy::Centrality(m, Sign::Minus) => format!("{}-", m.name()),
            Strategy::Dra => "DRA".into(),
            Strategy::Unc => "Unc".into(),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "optimal" => return Ok(Strategy::Optimal),
            "un" | "uniform" => return Ok(Strategy::Un),
            "dra" => return Ok(Strategy::Dra),
            "unc" | "none" => return Ok(Strategy::Unc),
            _ => {}
        }
        let sign = match lower.chars().last() {
            Some('+') => Sign::Plus,
            Some('-') => Sign::Minus,
            _ => return Err(Error::InvalidParameter(format!("unknown strategy {s:?}"))),
        };
        let metric: Metric = lower[..lower.len() - 1]
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("unknown strategy {s:?}")))?;
        Ok(Strategy::Centrality(metric, sign))
    }
}

/// How much the DRA baseline may spend per instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DraBudget {
    /// One unit of treatment at a time.
    #[default]
    Unit,
    /// The same `W_total` as every other strategy.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DraConfig {
    pub restarts: usize,
    pub seed: u64,
    /// A node counts as infected once `I_i` reaches this.
    pub infected_threshold: f64,
    pub budget: DraBudget,
}

impl Default for DraConfig {
    fn default() -> Self {
        DraConfig {
            restarts: 16,
            seed: 0,
            infected_threshold: 0.5,
            budget: DraBudget::Unit,
        }
    }
}

/// Strategy-specific settings shared by a comparison run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyOptions {
    pub fbs: FbsConfig,
    pub dra: DraConfig,
    pub max_cycle_len: usize,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        StrategyOptions {
            fbs: FbsConfig::default(),
            dra: DraConfig::default(),
            max_cycle_len: DEFAULT_MAX_CYCLE_LEN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StrategySpec {
    pub strategy: Strategy,
    pub options: StrategyOptions,
}

impl StrategySpec {
    pub fn new(strategy: Strategy) -> Self {
        StrategySpec {
            strategy,
            options: StrategyOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub control: ControlTrajectory,
    pub states: StateTrajectory,
    /// Present for the optimal strategy only.
    pub fbs: Option<FbsReport>,
}

fn check_budget(w_total: f64) -> Result<()> {
    if !(w_total >= 0.0) || !w_total.is_finite() {
        return Err(Error::InvalidParameter(format!("w_total must be finite and >= 0 (got {w_total})")));
    }
    Ok(())
}

/// `w_i = min(1, w_total / N)`.
pub fn uniform_allocation(g: &Graph, w_total: f64) -> Result<Vec<f64>> {
    check_budget(w_total)?;
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(vec![(w_total / n as f64).min(1.0); n])
}

/// Spends `min(w_total, N)` in proportion to the centrality (`+`) or its
/// reflection `max + min - c` (`-`), capping at 1 by water-filling.
pub fn centrality_allocation(g: &Graph, metric: &CentralityVector, sign: Sign, w_total: f64) -> Result<Vec<f64>> {
    check_budget(w_total)?;
    let n = g.node_count();
    if metric.len() != n {
        return Err(Error::LengthMismatch {
            left: metric.len(),
            right: n,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let hi = metric.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = metric.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let scores: Vec<f64> = metric
        .values
        .iter()
        .map(|&c| match sign {
            Sign::Plus => c,
            Sign::Minus => (hi + lo - c).max(0.0),
        })
        .collect();
    if scores.iter().all(|&s| s == 0.0) {
        return uniform_allocation(g, w_total);
    }
    Ok(water_fill(&scores, w_total))
}

/// Proportional allocation with cap 1. Excess from capped entries is
/// redistributed over the uncapped ones in proportion to their scores; if
/// only zero-score entries remain uncapped, the rest is spread evenly.
fn water_fill(scores: &[f64], w_total: f64) -> Vec<f64> {
    let n = scores.len();
    let target = w_total.min(n as f64);
    let mut w = vec![0.0; n];
    let mut capped = vec![false; n];
    let mut remaining = target;
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| !capped[i]).collect();
        if free.is_empty() || remaining <= 0.0 {
            break;
        }
        let mass: f64 = free.iter().map(|&i| scores[i]).sum();
        let share = |i: usize| {
            if mass > 0.0 {
                remaining * scores[i] / mass
            } else {
                remaining / free.len() as f64
            }
        };
        let over: Vec<usize> = free.iter().copied().filter(|&i| share(i) > 1.0).collect();
        if over.is_empty() {
            for &i in &free {
                w[i] = share(i);
            }
            break;
        }
        for i in over {
            w[i] = 1.0;
            capped[i] = true;
            remaining -= 1.0;
        }
    }
    w
}

/// Largest number of edges crossing any prefix/suffix cut of `order`.
pub fn maxcut(g: &Graph, order: &[usize]) -> usize {
    let mut placed = vec![false; g.node_count()];
    let mut cut: isize = 0;
    let mut best = 0;
    for &v in order {
        let inside = g.neighbors(v).iter().filter(|&&u| placed[u]).count() as isize;
        cut += g.degree(v) as isize - 2 * inside;
        placed[v] = true;
        best = best.max(cut as usize);
    }
    best
}

/// Greedy prefix growth from `start`: always append the node that adds the
/// fewest cut edges, preferring higher degree, then lower id.
fn greedy_order(g: &Graph, start: usize) -> Vec<usize> {
    let n = g.node_count();
    let mut placed = vec![false; n];
    // gain[v] = cut change if v were appended now
    let mut gain: Vec<isize> = (0..n).map(|v| g.degree(v) as isize).collect();
    let mut order = Vec::with_capacity(n);
    let mut next = start;
    loop {
        placed[next] = true;
        order.push(next);
        for &u in g.neighbors(next) {
            gain[u] -= 2;
        }
        if order.len() == n {
            break;
        }
        next = (0..n)
            .filter(|&v| !placed[v])
            .min_by(|&a, &b| {
                gain[a]
                    .cmp(&gain[b])
                    .then(g.degree(b).cmp(&g.degree(a)))
                    .then(a.cmp(&b))
            })
            .expect("unplaced node remains");
    }
    order
}

/// Node order with small maxcut; position 0 is the highest priority.
///
/// The first run starts from the node of smallest degree (lowest id on
/// ties); each restart starts from a node drawn from a seeded generator.
/// The order with the smallest maxcut wins, the earliest on ties.
pub fn dra_priority(g: &Graph, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::InvalidParameter("priority order needs at least one node".into()));
    }
    let first = (0..n).min_by_key(|&v| (g.degree(v), v)).expect("nonempty");
    let mut best = greedy_order(g, first);
    let mut best_cut = maxcut(g, &best);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let order = greedy_order(g, rng.gen_range(0..n));
        let cut = maxcut(g, &order);
        if cut < best_cut {
            best = order;
            best_cut = cut;
        }
    }
    Ok(best)
}

/// Full weight to infected nodes (`I_i >= threshold`) in priority order until
/// `w_total` is spent; the last treated node takes the fractional remainder.
pub fn dra_allocate(priority: &[usize], state: &NodeState, w_total: f64, infected_threshold: f64) -> Result<Vec<f64>> {
    check_budget(w_total)?;
    if !(0.0..=1.0).contains(&infected_threshold) {
        return Err(Error::InvalidParameter(format!(
            "infected threshold must lie in [0, 1] (got {infected_threshold})"
        )));
    }
    if priority.len() != state.len() {
        return Err(Error::LengthMismatch {
            left: priority.len(),
            right: state.len(),
        });
    }
    let mut w = vec![0.0; state.len()];
    let mut remaining = w_total;
    for &v in priority {
        if remaining <= 0.0 {
            break;
        }
        if state.i[v] >= infected_threshold {
            w[v] = remaining.min(1.0);
            remaining -= w[v];
        }
    }
    Ok(w)
}

/// Runs one strategy from `initial` on the grid of `params`.
pub fn run_strategy(spec: &StrategySpec, g: &Graph, params: &SirParams, initial: &NodeState) -> Result<StrategyRun> {
    params.validate()?;
    let opts = &spec.options;
    let stat = |w: Vec<f64>| -> Result<StrategyRun> {
        let control = ControlTrajectory::constant(&w, params);
        let states = integrate(initial, Some(&control), params, g)?;
        Ok(StrategyRun {
            strategy: spec.strategy,
            control,
            states,
            fbs: None,
        })
    };
    match spec.strategy {
        Strategy::Optimal => {
            let sol = fbs_solve(g, params, initial, &opts.fbs, None)?;
            Ok(StrategyRun {
                strategy: spec.strategy,
                control: sol.control,
                states: sol.states,
                fbs: Some(sol.report),
            })
        }
        Strategy::Un => stat(uniform_allocation(g, params.w_total)?),
        Strategy::Centrality(metric, sign) => {
            let c = metric.compute(g, opts.max_cycle_len)?;
            stat(centrality_allocation(g, &c, sign, params.w_total)?)
        }
        Strategy::Unc => stat(vec![0.0; g.node_count()]),
        Strategy::Dra => {
            let priority = dra_priority(g, opts.dra.restarts, opts.dra.seed)?;
            let budget = match opts.dra.budget {
                DraBudget::Unit => 1.0,
                DraBudget::Shared => params.w_total,
            };
            let threshold = opts.dra.infected_threshold;
            let (states, control) = integrate_feedback(
                initial,
                |_, st| dra_allocate(&priority, st, budget, threshold),
                RateRule::Treatment,
                params,
                g,
            )?;
            Ok(StrategyRun {
                strategy: spec.strategy,
                control,
                states,
                fbs: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("bc-".parse::<Strategy>().unwrap(), Strategy::Centrality(Metric::Bc, Sign::Minus));
        assert!("xy+".parse::<Strategy>().is_err());
        assert!("dc".parse::<Strategy>().is_err());
    }

    #[test]
    fn uniform_cases() {
        let g = Graph::complete(10);
        assert_eq!(uniform_allocation(&g, 1.0).unwrap(), vec![0.1; 10]);
        assert_eq!(uniform_allocation(&g, 20.0).unwrap(), vec![1.0; 10]);
    }

    #[test]
    fn star_degree_plus() {
        let g = Graph::star(4);
        let dc = Metric::Dc.compute(&g, 6).unwrap();
        let w = centrality_allocation(&g, &dc, Sign::Plus, 1.0).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-15);
        for v in &w[1..] {
            assert_abs_diff_eq!(*v, 0.125, epsilon = 1e-15);
        }
        let w = centrality_allocation(&g, &dc, Sign::Minus, 1.0).unwrap();
        // reflection: hub 0.25, leaves 1.0
        assert_abs_diff_eq!(w[0], 0.25 / 4.25, epsilon = 1e-15);
    }

    #[test]
    fn constant_metric_gives_uniform() {
        let g = Graph::cycle(5);
        let dc = Metric::Dc.compute(&g, 6).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let w = centrality_allocation(&g, &dc, sign, 2.0).unwrap();
            for v in w {
                assert_abs_diff_eq!(v, 0.4, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn water_filling_caps() {
        // scores (6, 2, 1, 1), budget 2.5: 6/10*2.5 = 1.5 > 1, so cap node 0 and
        // split the remaining 1.5 as 2:1:1
        let g = Graph::path(4);
        let c = CentralityVector {
            metric: Metric::Dc,
            values: vec![6.0, 2.0, 1.0, 1.0],
        };
        let w = centrality_allocation(&g, &c, Sign::Plus, 2.5).unwrap();
        assert_eq!(w[0], 1.0);
        assert_abs_diff_eq!(w[1], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(w[3], 0.375, epsilon = 1e-15);
    }

    #[test]
    fn water_filling_reaches_zero_scores() {
        let g = Graph::path(3);
        let c = CentralityVector {
            metric: Metric::Bc,
            values: vec![0.0, 1.0, 0.0],
        };
        let w = centrality_allocation(&g, &c, Sign::Plus, 2.0).unwrap();
        assert_eq!(w, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn path_priority_has_cut_one() {
        let g = Graph::path(7);
        let order = dra_priority(&g, 16, 3).unwrap();
        assert_eq!(maxcut(&g, &order), 1);
    }

    #[test]
    fn k4_priority_maxcut_is_four() {
        let g = Graph::complete(4);
        let order = dra_priority(&g, 4, 0).unwrap();
        assert_eq!(maxcut(&g, &order), 4);
    }

    #[test]
    fn dra_allocation_rules() {
        let st = NodeState {
            s: vec![0.2, 0.3, 0.0, 0.9],
            i: vec![0.8, 0.6, 0.9, 0.1],
            r: vec![0.0, 0.1, 0.1, 0.0],
        };
        let priority = [3, 2, 0, 1];
        assert_eq!(dra_allocate(&priority, &st, 2.0, 0.5).unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(dra_allocate(&priority, &st, 1.5, 0.5).unwrap(), vec![0.5, 0.0, 1.0, 0.0]);
        assert_eq!(dra_allocate(&priority, &st, 1.0, 0.95).unwrap(), vec![0.0; 4]);
        assert!(dra_allocate(&priority, &st, 1.0, 1.5).is_err());
    }

    #[test]
    fn un_with_zero_budget_is_unc() {
        let g = Graph::cycle(6);
        let p = SirParams {
            w_total: 0.0,
            ..SirParams::default()
        };
        let init = NodeState::uniform(6, 0.1).unwrap();
        let un = run_strategy(&StrategySpec::new(Strategy::Un), &g, &p, &init).unwrap();
        let unc = run_strategy(&StrategySpec::new(Strategy::Unc), &g, &p, &init).unwrap();
        assert_eq!(un.states, unc.states);
    }
}

//! Optimal node-level intervention by forward–backward sweep.
//!
//! We minimise
//!
//! ```text
//! J(w) = ∫_0^T ( sum_i I_i + (c/2) sum_i w_i^2 ) dt
//! ```
//!
//! over weights with `0 <= w_i(t) <= 1` and `sum_i w_i(t) <= W_total`,
//! subject to the controlled SIR dynamics. Costates `λ1, λ2, λ3` are
//! attached to `S, I, R`; the budget multiplier `λ4` is found pointwise by
//! bisection so the instantaneous constraint holds exactly.
//!
//! Stationarity of the Hamiltonian in `w_i` gives the candidate
//!
//! ```text
//! ŵ_i = -(1/c) [ β0 u S_i φ_i (λ1_i - λ2_i) - γ0 u I_i (λ2_i - λ3_i) + λ4 ]
//! ```
//!
//! clamped to `[0, 1]`, with `φ_i = sum_j A_ij I_j`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sir::{fmt_sig, integrate, rhs_rule, NodeState, RateRule, SirParams, StateTrajectory};

/// Slack allowed on the budget when checking admissibility.
pub const BUDGET_SLACK: f64 = 1e-9;

/// Intervention weights `w_i(t_k)` on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrajectory {
    pub grid: Vec<f64>,
    /// `weights[k][i]` is node `i`'s weight on `[t_k, t_{k+1})`.
    pub weights: Vec<Vec<f64>>,
}

impl ControlTrajectory {
    pub fn constant(w: &[f64], params: &SirParams) -> Self {
        let grid = params.grid();
        let weights = vec![w.to_vec(); grid.len()];
        ControlTrajectory { grid, weights }
    }

    pub fn zeros(n: usize, params: &SirParams) -> Self {
        Self::constant(&vec![0.0; n], params)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Checks the box and budget constraints at every grid point.
    pub fn check_admissible(&self, w_total: f64) -> Result<()> {
        for w in &self.weights {
            crate::sir::check_weights(w)?;
            let total: f64 = w.iter().sum();
            if total > w_total + BUDGET_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "weights sum to {total}, above budget {w_total}"
                )));
            }
        }
        Ok(())
    }

    /// Discrete L2 norm over all node-time entries.
    pub fn norm(&self) -> f64 {
        self.weights.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ControlTrajectory) -> f64 {
        self.weights
            .iter()
            .flatten()
            .zip(other.weights.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// CSV with `t,w_0,...,w_{N-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for v in 0..self.node_count() {
            out.push_str(&format!(",w_{v}"));
        }
        out.push('\n');
        for (t, w) in self.grid.iter().zip(&self.weights) {
            out.push_str(&fmt_sig(*t));
            for &x in w {
                out.push(',');
                out.push_str(&fmt_sig(x));
            }
            out.push('\n');
        }
        out
    }
}

/// Costates on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub grid: Vec<f64>,
    pub lambda1: Vec<Vec<f64>>,
    pub lambda2: Vec<Vec<f64>>,
    pub lambda3: Vec<Vec<f64>>,
    /// Budget multiplier chosen at each grid point.
    pub lambda4: Vec<f64>,
}

impl AdjointTrajectory {
    pub fn slice(&self, k: usize) -> AdjointPoint {
        AdjointPoint {
            l1: self.lambda1[k].clone(),
            l2: self.lambda2[k].clone(),
            l3: self.lambda3[k].clone(),
        }
    }
}

/// Costate values `(λ1, λ2, λ3)` for all nodes at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPoint {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l3: Vec<f64>,
}

impl AdjointPoint {
    pub fn zeros(n: usize) -> Self {
        AdjointPoint {
            l1: vec![0.0; n],
            l2: vec![0.0; n],
            l3: vec![0.0; n],
        }
    }

    fn offset(&self, h: f64, d: &AdjointPoint) -> AdjointPoint {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + h * y).collect();
        AdjointPoint {
            l1: add(&self.l1, &d.l1),
            l2: add(&self.l2, &d.l2),
            l3: add(&self.l3, &d.l3),
        }
    }

    fn is_finite(&self) -> bool {
        self.l1.iter().chain(&self.l2).chain(&self.l3).all(|v| v.is_finite())
    }
}

/// Which costate equation for `λ2` to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjointForm {
    /// `-∂H/∂I_i` in full, including the pressure node `i` exerts on its
    /// neighbours: `dλ2_i/dt = -1 + γ_i (λ2_i - λ3_i) + sum_j A_ij β_j S_j (λ1_j - λ2_j)`.
    #[default]
    Coupled,
    /// Node-local variant that keeps only node `i`'s own terms:
    /// `dλ2_i/dt = -1 + λ2_i γ_i - (λ1_i - λ2_i) β_i S_i k_i - λ3_i γ_i`.
    /// It omits the neighbour coupling, so it is not the exact gradient of `J`.
    NodeLocal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbsConfig {
    /// Stop when the relative change of the control drops below this.
    pub tolerance: f64,
    /// Weight kept on the previous iterate, in `(0, 1]`.
    pub relaxation: f64,
    pub max_iterations: usize,
    pub adjoint_form: AdjointForm,
}

impl Default for FbsConfig {
    fn default() -> Self {
        FbsConfig {
            tolerance: 1e-3,
            relaxation: 0.5,
            max_iterations: 100,
            adjoint_form: AdjointForm::Coupled,
        }
    }
}

impl FbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0 (got {})", self.tolerance)));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "relaxation must lie in (0, 1] (got {})",
                self.relaxation
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbsReport {
    pub iterations: usize,
    /// Objective of the initial control.
    pub initial_objective: f64,
    /// Objective after each update.
    pub objective: Vec<f64>,
    /// Relative control change of each update.
    pub rel_change: Vec<f64>,
    /// Largest budget multiplier used in each update.
    pub lambda4_max: Vec<f64>,
    pub converged: bool,
}

impl FbsReport {
    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(self.initial_objective)
    }

    /// CSV with `iteration,J,rel_change,lambda4_max`; row 0 is the initial control.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,J,rel_change,lambda4_max\n");
        out.push_str(&format!("0,{},,\n", fmt_sig(self.initial_objective)));
        for m in 0..self.objective.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                m + 1,
                fmt_sig(self.objective[m]),
                fmt_sig(self.rel_change[m]),
                fmt_sig(self.lambda4_max[m])
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FbsSolution {
    pub control: ControlTrajectory,
    pub states: StateTrajectory,
    pub adjoint: AdjointTrajectory,
    pub report: FbsReport,
}

fn check_grid(states: &StateTrajectory, control: &ControlTrajectory) -> Result<()> {
    if states.len() != control.len() {
        return Err(Error::GridMismatch {
            expected: states.len(),
            found: control.len(),
        });
    }
    Ok(())
}

/// Trapezoidal quadrature of `sum_i I_i + (c/2) sum_i w_i^2` on the grid.
pub fn objective(states: &StateTrajectory, control: &ControlTrajectory, params: &SirParams) -> Result<f64> {
    check_grid(states, control)?;
    let integrand: Vec<f64> = states
        .states
        .iter()
        .zip(&control.weights)
        .map(|(st, w)| st.total_infected() + 0.5 * params.c * w.iter().map(|x| x * x).sum::<f64>())
        .collect();
    Ok(trapezoid(&states.grid, &integrand))
}

pub(crate) fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Costate derivatives at one instant for weights `w` held on the current segment.
pub fn adjoint_rhs(
    state: &NodeState,
    adjoint: &AdjointPoint,
    w: &[f64],
    params: &SirParams,
    g: &Graph,
    form: AdjointForm,
) -> AdjointPoint {
    costate_rhs(state, adjoint, w, params, g, form, 1.0)
}

/// Costate derivatives with the running-cost forcing on `λ2` scaled by `running`.
fn costate_rhs(
    state: &NodeState,
    adjoint: &AdjointPoint,
    w: &[f64],
    params: &SirParams,
    g: &Graph,
    form: AdjointForm,
    running: f64,
) -> AdjointPoint {
    let n = state.len();
    let beta: Vec<f64> = w.iter().map(|&wi| params.beta0 * (1.0 - params.u * wi)).collect();
    let gamma: Vec<f64> = w.iter().map(|&wi| params.gamma0 * (1.0 + params.u * wi)).collect();
    let mut d = AdjointPoint::zeros(n);
    for i in 0..n {
        let pressure: f64 = g.neighbors(i).iter().map(|&j| state.i[j]).sum();
        let gap = adjoint.l1[i] - adjoint.l2[i];
        d.l1[i] = gap * beta[i] * pressure;
        d.l2[i] = match form {
            AdjointForm::Coupled => {
                let spill: f64 = g
                    .neighbors(i)
                    .iter()
                    .map(|&j| beta[j] * state.s[j] * (adjoint.l1[j] - adjoint.l2[j]))
                    .sum();
                -running + gamma[i] * (adjoint.l2[i] - adjoint.l3[i]) + spill
            }
            AdjointForm::NodeLocal => {
                -running + adjoint.l2[i] * gamma[i] - gap * beta[i] * state.s[i] * g.degree(i) as f64
                    - adjoint.l3[i] * gamma[i]
            }
        };
        d.l3[i] = 0.0;
    }
    d
}

/// State at the middle of segment `k` by cubic Hermite interpolation,
/// using the segment's weights for the end slopes.
fn state_midpoint(states: &StateTrajectory, k: usize, w: &[f64], params: &SirParams, g: &Graph) -> NodeState {
    let y0 = &states.states[k];
    let y1 = &states.states[k + 1];
    let f0 = rhs_rule(y0, w, RateRule::Controlled, params, g);
    let f1 = rhs_rule(y1, w, RateRule::Controlled, params, g);
    let h = states.grid[k + 1] - states.grid[k];
    let mid = |a: &[f64], b: &[f64], fa: &[f64], fb: &[f64]| -> Vec<f64> {
        (0..a.len())
            .map(|v| 0.5 * (a[v] + b[v]) + h / 8.0 * (fa[v] - fb[v]))
            .collect()
    };
    NodeState {
        s: mid(&y0.s, &y1.s, &f0.s, &f1.s),
        i: mid(&y0.i, &y1.i, &f0.i, &f1.i),
        r: mid(&y0.r, &y1.r, &f0.r, &f1.r),
    }
}

/// One RK4 step of the costate system from `t_{k+1}` back to `t_k`.
#[allow(clippy::too_many_arguments)]
fn backward_step(
    states: &StateTrajectory,
    k: usize,
    w: &[f64],
    end: &AdjointPoint,
    params: &SirParams,
    g: &Graph,
    form: AdjointForm,
    running: f64,
) -> AdjointPoint {
    let n = end.l1.len();
    let h = states.grid[k + 1] - states.grid[k];
    let mid_state = state_midpoint(states, k, w, params, g);
    let f = |st: &NodeState, a: &AdjointPoint| costate_rhs(st, a, w, params, g, form, running);
    let k1 = f(&states.states[k + 1], end);
    let k2 = f(&mid_state, &end.offset(-0.5 * h, &k1));
    let k3 = f(&mid_state, &end.offset(-0.5 * h, &k2));
    let k4 = f(&states.states[k], &end.offset(-h, &k3));
    let step = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|v| y[v] - h / 6.0 * (a[v] + 2.0 * b[v] + 2.0 * c[v] + d[v]))
            .collect()
    };
    AdjointPoint {
        l1: step(&end.l1, &k1.l1, &k2.l1, &k3.l1, &k4.l1),
        l2: step(&end.l2, &k1.l2, &k2.l2, &k3.l2, &k4.l2),
        l3: step(&end.l3, &k1.l3, &k2.l3, &k3.l3, &k4.l3),
    }
}

/// RK4 backward from `λ(T) = 0`. The returned `lambda4` is all zeros; the
/// sweep fills it in during the budget step.
pub fn integrate_adjoint_backward(
    states: &StateTrajectory,
    control: &ControlTrajectory,
    params: &SirParams,
    g: &Graph,
    form: AdjointForm,
) -> Result<AdjointTrajectory> {
    check_grid(states, control)?;
    let len = states.len();
    let n = states.node_count();
    let mut points = vec![AdjointPoint::zeros(n); len];
    for k in (0..len - 1).rev() {
        let next = backward_step(states, k, &control.weights[k], &points[k + 1], params, g, form, 1.0);
        if !next.is_finite() {
            return Err(Error::NonFinite {
                iteration: 0,
                what: "adjoint",
            });
        }
        points[k] = next;
    }
    debug_assert!(points.iter().all(|p| p.l3.iter().all(|&v| v == 0.0)));
    let mut adj = AdjointTrajectory {
        grid: states.grid.clone(),
        lambda1: Vec::with_capacity(len),
        lambda2: Vec::with_capacity(len),
        lambda3: Vec::with_capacity(len),
        lambda4: vec![0.0; len],
    };
    for p in points {
        adj.lambda1.push(p.l1);
        adj.lambda2.push(p.l2);
        adj.lambda3.push(p.l3);
    }
    Ok(adj)
}

/// Unclamped stationary weights `ŵ_i` at `λ4 = 0`.
pub fn optimality_candidates(state: &NodeState, adjoint: &AdjointPoint, params: &SirParams, g: &Graph) -> Vec<f64> {
    (0..state.len())
        .map(|i| {
            let pressure: f64 = g.neighbors(i).iter().map(|&j| state.i[j]).sum();
            let bracket = params.beta0 * params.u * state.s[i] * pressure * (adjoint.l1[i] - adjoint.l2[i])
                - params.gamma0 * params.u * state.i[i] * (adjoint.l2[i] - adjoint.l3[i]);
            -bracket / params.c
        })
        .collect()
}

/// Clamped stationary weights for a given budget multiplier.
pub fn optimality_map(
    state: &NodeState,
    adjoint: &AdjointPoint,
    lambda4: f64,
    params: &SirParams,
    g: &Graph,
) -> Vec<f64> {
    optimality_candidates(state, adjoint, params, g)
        .into_iter()
        .map(|v| (v - lambda4 / params.c).clamp(0.0, 1.0))
        .collect()
}

/// Chooses `λ4 >= 0` so that `sum_i clamp(ŵ_i - λ4/c, 0, 1) <= w_total`,
/// with equality whenever `λ4 > 0`.
///
/// `unconstrained` holds `ŵ_i` at `λ4 = 0`, before clamping.
pub fn enforce_budget(unconstrained: &[f64], w_total: f64, c: f64) -> Result<(Vec<f64>, f64)> {
    if !(w_total >= 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget step needs w_total >= 0 and c > 0 (got {w_total}, {c})"
        )));
    }
    let clamped_sum = |lambda: f64| -> f64 {
        unconstrained
            .iter()
            .map(|&v| (v - lambda / c).clamp(0.0, 1.0))
            .sum()
    };
    let apply = |lambda: f64| -> Vec<f64> {
        unconstrained
            .iter()
            .map(|&v| (v - lambda / c).clamp(0.0, 1.0))
            .collect()
    };
    if clamped_sum(0.0) <= w_total {
        return Ok((apply(0.0), 0.0));
    }
    // at lambda = c * max(ŵ) every weight is clamped to 0
    let top = unconstrained.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = 0.0;
    let mut hi = c * top.max(0.0);
    if clamped_sum(hi) > w_total {
        return Err(Error::Undefined("budget bisection bracket does not contain a root".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clamped_sum(mid) > w_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // solve exactly on the active set identified by the bracket
    let mut saturated = 0.0;
    let mut active_sum = 0.0;
    let mut active = 0usize;
    for &v in unconstrained {
        let x = v - hi / c;
        if x >= 1.0 {
            saturated += 1.0;
        } else if x > 0.0 || v - lo / c > 0.0 {
            active_sum += v;
            active += 1;
        }
    }
    let mut lambda = hi;
    if active > 0 {
        let exact = c * (active_sum + saturated - w_total) / active as f64;
        if exact >= lo && exact <= hi && clamped_sum(exact) <= w_total + 1e-12 {
            lambda = exact;
        }
    }
    let mut w = apply(lambda);
    let total: f64 = w.iter().sum();
    if total > w_total {
        // rounding residue: scale down the interior entries
        let excess = total - w_total;
        let interior: f64 = w.iter().filter(|&&x| x > 0.0 && x < 1.0).sum();
        if interior > 0.0 {
            let f = 1.0 - excess / interior;
            for x in w.iter_mut().filter(|x| **x > 0.0 && **x < 1.0) {
                *x *= f;
            }
        }
    }
    Ok((w, lambda))
}

/// Reduced gradient `∂J/∂w_i(t_k)` of the objective as evaluated by
/// [`objective`], with respect to the weight held on segment `k`.
///
/// The trapezoidal rule weighs `sum_i I_i(t_m)` by `ω_m` (`dt`, or `dt/2` at
/// the ends), so the matching costates solve the homogeneous costate system
/// between grid points and `λ2` jumps by `ω_m` at each `t_m`. With those
/// costates `∂H/∂w_i` (without the multiplier) is integrated over the segment
/// by Simpson's rule, midpoints by Hermite interpolation; the cost part is
/// `c w_i(t_k) ω_k`.
pub fn objective_gradient(
    states: &StateTrajectory,
    control: &ControlTrajectory,
    params: &SirParams,
    g: &Graph,
    form: AdjointForm,
) -> Result<Vec<Vec<f64>>> {
    check_grid(states, control)?;
    let len = states.len();
    let n = states.node_count();
    let weight = |k: usize| {
        let left = if k > 0 { states.grid[k] - states.grid[k - 1] } else { 0.0 };
        let right = if k + 1 < len { states.grid[k + 1] - states.grid[k] } else { 0.0 };
        0.5 * (left + right)
    };
    let sensitivity = |st: &NodeState, adj: &AdjointPoint| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let pressure: f64 = g.neighbors(i).iter().map(|&j| st.i[j]).sum();
                params.u * params.beta0 * st.s[i] * pressure * (adj.l1[i] - adj.l2[i])
                    - params.u * params.gamma0 * st.i[i] * (adj.l2[i] - adj.l3[i])
            })
            .collect()
    };
    let mut grad = vec![vec![0.0; n]; len];
    for (v, x) in grad[len - 1].iter_mut().enumerate() {
        *x = params.c * control.weights[len - 1][v] * weight(len - 1);
    }
    // costate just before t_{k+1}, after its jump
    let mut right = AdjointPoint::zeros(n);
    right.l2.iter_mut().for_each(|x| *x += weight(len - 1));
    for k in (0..len - 1).rev() {
        let w = &control.weights[k];
        let h = states.grid[k + 1] - states.grid[k];
        let left = backward_step(states, k, w, &right, params, g, form, 0.0);
        if !left.is_finite() {
            return Err(Error::NonFinite {
                iteration: 0,
                what: "adjoint",
            });
        }
        let d0 = costate_rhs(&states.states[k], &left, w, params, g, form, 0.0);
        let d1 = costate_rhs(&states.states[k + 1], &right, w, params, g, form, 0.0);
        let a_mid = AdjointPoint {
            l1: hermite_mid(&left.l1, &right.l1, &d0.l1, &d1.l1, h),
            l2: hermite_mid(&left.l2, &right.l2, &d0.l2, &d1.l2, h),
            l3: hermite_mid(&left.l3, &right.l3, &d0.l3, &d1.l3, h),
        };
        let s_mid = state_midpoint(states, k, w, params, g);
        let g0 = sensitivity(&states.states[k], &left);
        let gm = sensitivity(&s_mid, &a_mid);
        let g1 = sensitivity(&states.states[k + 1], &right);
        for i in 0..n {
            grad[k][i] = h / 6.0 * (g0[i] + 4.0 * gm[i] + g1[i]) + params.c * w[i] * weight(k);
        }
        right = left;
        right.l2.iter_mut().for_each(|x| *x += weight(k));
    }
    Ok(grad)
}

fn hermite_mid(a: &[f64], b: &[f64], da: &[f64], db: &[f64], h: f64) -> Vec<f64> {
    (0..a.len())
        .map(|v| 0.5 * (a[v] + b[v]) + h / 8.0 * (da[v] - db[v]))
        .collect()
}

/// Forward–backward sweep.
///
/// Each iteration integrates the state forward under the current control,
/// the costates backward from zero terminal values, evaluates the clamped
/// stationary weights with the budget enforced at every grid point, and
/// relaxes towards them: `w ← τ w + (1 − τ) w̃`. Iteration stops once
/// `‖w_new − w‖ / ‖w‖ < ε` (a zero previous iterate passes only if the new
/// one is zero too) or after `max_iterations`. The final iterate is always
/// returned; `report.converged` says which way the loop ended.
pub fn fbs_solve(
    g: &Graph,
    params: &SirParams,
    initial: &NodeState,
    cfg: &FbsConfig,
    w_init: Option<&ControlTrajectory>,
) -> Result<FbsSolution> {
    params.validate()?;
    cfg.validate()?;
    let n = g.node_count();
    let mut control = match w_init {
        Some(w) => w.clone(),
        None => ControlTrajectory::zeros(n, params),
    };
    if control.len() != params.steps + 1 {
        return Err(Error::GridMismatch {
            expected: params.steps + 1,
            found: control.len(),
        });
    }
    control.check_admissible(params.w_total)?;

    let mut states = integrate(initial, Some(&control), params, g)?;
    let mut report = FbsReport {
        iterations: 0,
        initial_objective: objective(&states, &control, params)?,
        objective: Vec::new(),
        rel_change: Vec::new(),
        lambda4_max: Vec::new(),
        converged: false,
    };
    let tau = cfg.relaxation;
    let mut lambda4 = vec![0.0; control.len()];

    for iteration in 1..=cfg.max_iterations {
        let adjoint = integrate_adjoint_backward(&states, &control, params, g, cfg.adjoint_form).map_err(|e| match e {
            Error::NonFinite { what, .. } => Error::NonFinite { iteration, what },
            other => other,
        })?;

        let mut next = control.clone();
        for k in 0..control.len() {
            let candidates = optimality_candidates(&states.states[k], &adjoint.slice(k), params, g);
            let (target, l4) = enforce_budget(&candidates, params.w_total, params.c)?;
            lambda4[k] = l4;
            for (w, t) in next.weights[k].iter_mut().zip(target) {
                *w = tau * *w + (1.0 - tau) * t;
            }
        }

        let change = next.distance(&control);
        let base = control.norm();
        let rel = if base > 0.0 {
            change / base
        } else if change == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };

        control = next;
        states = integrate(initial, Some(&control), params, g).map_err(|e| match e {
            Error::InvariantViolation { .. } => e,
            Error::NonFinite { what, .. } => Error::NonFinite { iteration, what },
            other => other,
        })?;
        let j = objective(&states, &control, params)?;
        if !j.is_finite() {
            return Err(Error::NonFinite {
                iteration,
                what: "objective",
            });
        }
        report.iterations = iteration;
        report.objective.push(j);
        report.rel_change.push(rel);
        report.lambda4_max.push(lambda4.iter().cloned().fold(0.0, f64::max));
        if rel < cfg.tolerance {
            report.converged = true;
            break;
        }
    }

    let mut adjoint = integrate_adjoint_backward(&states, &control, params, g, cfg.adjoint_form)?;
    adjoint.lambda4 = lambda4;
    Ok(FbsSolution {
        control,
        states,
        adjoint,
        report,
    })
}

//! Network SIR dynamics with node-level control.
//!
//! Node `i` carries probabilities `(S_i, I_i, R_i)`. With per-node rates
//! `beta_i`, `gamma_i` and infection pressure `phi_i = sum_j A_ij I_j`:
//!
//! ```text
//! dS_i/dt = -beta_i S_i phi_i
//! dI_i/dt =  beta_i S_i phi_i - gamma_i I_i
//! dR_i/dt =  gamma_i I_i
//! ```
//!
//! Under intervention weights `w_i` in `[0, 1]` the rates are
//! `beta_i = beta0 (1 - u w_i)` and `gamma_i = gamma0 (1 + u w_i)`.

use crate::control::ControlTrajectory;
use crate::error::{Error, Result};
use crate::graph::{dominant_eigenvalue, spectral_radius, Graph, DEFAULT_SPECTRAL_TOL, MAX_POWER_ITERATIONS};

const CONSERVATION_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirParams {
    /// Baseline propagation rate.
    pub beta0: f64,
    /// Baseline recovery rate.
    pub gamma0: f64,
    /// Global control intensity.
    pub u: f64,
    /// Quadratic control cost coefficient.
    pub c: f64,
    /// Per-instant budget on the sum of weights.
    pub w_total: f64,
    pub horizon: f64,
    /// Number of grid intervals; the grid has `steps + 1` points.
    pub steps: usize,
}

impl Default for SirParams {
    fn default() -> Self {
        SirParams {
            beta0: 0.3,
            gamma0: 0.1,
            u: 0.5,
            c: 1.0,
            w_total: 1.0,
            horizon: 10.0,
            steps: 200,
        }
    }
}

impl SirParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if !(self.beta0 >= 0.0 && self.beta0.is_finite()) {
            return bad(format!("beta0 must be finite and >= 0 (got {})", self.beta0));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad(format!("gamma0 must be > 0 (got {})", self.gamma0));
        }
        if !(0.0..=1.0).contains(&self.u) {
            return bad(format!("control intensity u must lie in [0, 1] (got {})", self.u));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("cost coefficient c must be > 0 (got {})", self.c));
        }
        if !(self.w_total >= 0.0 && self.w_total.is_finite()) {
            return bad(format!("budget must be >= 0 (got {})", self.w_total));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be > 0 (got {})", self.horizon));
        }
        if self.steps < 2 {
            return bad(format!("need at least 2 grid intervals (got {})", self.steps));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps).map(|k| k as f64 * dt).collect()
    }
}

/// How intervention weights modify the node rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateRule {
    /// `beta_i = beta0 (1 - u w_i)`, `gamma_i = gamma0 (1 + u w_i)`.
    #[default]
    Controlled,
    /// Treatment only raises recovery: `beta_i = beta0`, `gamma_i = gamma0 + u w_i`.
    Treatment,
}

impl RateRule {
    pub fn rates(self, params: &SirParams, w: &[f64], beta: &mut [f64], gamma: &mut [f64]) {
        for ((b, g), &wi) in beta.iter_mut().zip(gamma.iter_mut()).zip(w) {
            match self {
                RateRule::Controlled => {
                    *b = params.beta0 * (1.0 - params.u * wi);
                    *g = params.gamma0 * (1.0 + params.u * wi);
                }
                RateRule::Treatment => {
                    *b = params.beta0;
                    *g = params.gamma0 + params.u * wi;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

/// Per-node time derivatives `(dS, dI, dR)`.
pub type NodeDerivative = NodeState;

impl NodeState {
    pub fn zeros(n: usize) -> Self {
        NodeState {
            s: vec![0.0; n],
            i: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    /// Every node starts with infection probability `i0`.
    pub fn uniform(n: usize, i0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&i0) {
            return Err(Error::InvalidParameter(format!("initial infection {i0} outside [0, 1]")));
        }
        Ok(NodeState {
            s: vec![1.0 - i0; n],
            i: vec![i0; n],
            r: vec![0.0; n],
        })
    }

    /// The listed nodes are infected, all others susceptible.
    pub fn seeded(n: usize, infected: &[usize]) -> Result<Self> {
        let mut state = NodeState {
            s: vec![1.0; n],
            i: vec![0.0; n],
            r: vec![0.0; n],
        };
        for &v in infected {
            if v >= n {
                return Err(Error::InvalidParameter(format!("seed node {v} outside 0..{n}")));
            }
            state.s[v] = 0.0;
            state.i[v] = 1.0;
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn mean_s(&self) -> f64 {
        mean(&self.s)
    }

    pub fn mean_i(&self) -> f64 {
        mean(&self.i)
    }

    pub fn mean_r(&self) -> f64 {
        mean(&self.r)
    }

    pub fn total_infected(&self) -> f64 {
        self.i.iter().sum()
    }

    /// `self + h * d`, componentwise.
    fn offset(&self, h: f64, d: &NodeDerivative) -> NodeState {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + h * y).collect();
        NodeState {
            s: add(&self.s, &d.s),
            i: add(&self.i, &d.i),
            r: add(&self.r, &d.r),
        }
    }

    fn check(&self, time: f64, reference_sums: &[f64]) -> Result<()> {
        for v in 0..self.len() {
            let (s, i, r) = (self.s[v], self.i[v], self.r[v]);
            if !(s.is_finite() && i.is_finite() && r.is_finite()) {
                return Err(Error::InvariantViolation {
                    time,
                    node: v,
                    detail: "non-finite state".into(),
                });
            }
            let drift = (s + i + r - reference_sums[v]).abs();
            if drift > CONSERVATION_TOL {
                return Err(Error::InvariantViolation {
                    time,
                    node: v,
                    detail: format!("S+I+R drifted by {drift:e}"),
                });
            }
            let lowest = s.min(i).min(r);
            if lowest < -POSITIVITY_TOL {
                return Err(Error::InvariantViolation {
                    time,
                    node: v,
                    detail: format!("component fell to {lowest:e}"),
                });
            }
        }
        Ok(())
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// States sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub grid: Vec<f64>,
    pub states: Vec<NodeState>,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.states.first().map_or(0, NodeState::len)
    }

    /// Infection density `(1/N) sum_i I_i(t_k)` at each grid point.
    pub fn mean_infected(&self) -> Vec<f64> {
        self.states.iter().map(NodeState::mean_i).collect()
    }

    /// CSV with `t,mean_S,mean_I,mean_R`, optionally followed by `I_0..I_{N-1}`.
    pub fn to_csv(&self, per_node: bool) -> String {
        let mut out = String::from("t,mean_S,mean_I,mean_R");
        if per_node {
            for v in 0..self.node_count() {
                out.push_str(&format!(",I_{v}"));
            }
        }
        out.push('\n');
        for (t, st) in self.grid.iter().zip(&self.states) {
            let mut row = vec![fmt_sig(*t), fmt_sig(st.mean_s()), fmt_sig(st.mean_i()), fmt_sig(st.mean_r())];
            if per_node {
                row.extend(st.i.iter().map(|&v| fmt_sig(v)));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Formats a float with 10 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.9e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

fn rhs_with_rates(state: &NodeState, beta: &[f64], gamma: &[f64], g: &Graph, out: &mut NodeDerivative) {
    for v in 0..state.len() {
        let pressure: f64 = g.neighbors(v).iter().map(|&j| state.i[j]).sum();
        let inflow = beta[v] * state.s[v] * pressure;
        let recovery = gamma[v] * state.i[v];
        out.s[v] = -inflow;
        out.i[v] = inflow - recovery;
        out.r[v] = recovery;
    }
}

pub fn rhs_uncontrolled(state: &NodeState, params: &SirParams, g: &Graph) -> NodeDerivative {
    let n = state.len();
    let mut out = NodeState::zeros(n);
    rhs_with_rates(state, &vec![params.beta0; n], &vec![params.gamma0; n], g, &mut out);
    out
}

pub fn rhs_controlled(state: &NodeState, w: &[f64], params: &SirParams, g: &Graph) -> Result<NodeDerivative> {
    check_weights(w)?;
    Ok(rhs_rule(state, w, RateRule::Controlled, params, g))
}

pub(crate) fn rhs_rule(state: &NodeState, w: &[f64], rule: RateRule, params: &SirParams, g: &Graph) -> NodeDerivative {
    let n = state.len();
    let (mut beta, mut gamma) = (vec![0.0; n], vec![0.0; n]);
    rule.rates(params, w, &mut beta, &mut gamma);
    let mut out = NodeState::zeros(n);
    rhs_with_rates(state, &beta, &gamma, g, &mut out);
    out
}

pub(crate) fn check_weights(w: &[f64]) -> Result<()> {
    for (node, &value) in w.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ControlOutOfRange { node, value });
        }
    }
    Ok(())
}

fn rk4_step(state: &NodeState, beta: &[f64], gamma: &[f64], dt: f64, g: &Graph) -> NodeState {
    let n = state.len();
    let mut k1 = NodeState::zeros(n);
    let mut k2 = NodeState::zeros(n);
    let mut k3 = NodeState::zeros(n);
    let mut k4 = NodeState::zeros(n);
    rhs_with_rates(state, beta, gamma, g, &mut k1);
    rhs_with_rates(&state.offset(0.5 * dt, &k1), beta, gamma, g, &mut k2);
    rhs_with_rates(&state.offset(0.5 * dt, &k2), beta, gamma, g, &mut k3);
    rhs_with_rates(&state.offset(dt, &k3), beta, gamma, g, &mut k4);
    let step = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|v| y[v] + dt / 6.0 * (a[v] + 2.0 * b[v] + 2.0 * c[v] + d[v]))
            .collect()
    };
    NodeState {
        s: step(&state.s, &k1.s, &k2.s, &k3.s, &k4.s),
        i: step(&state.i, &k1.i, &k2.i, &k3.i, &k4.i),
        r: step(&state.r, &k1.r, &k2.r, &k3.r, &k4.r),
    }
}

/// Fixed-step RK4 over the parameter grid. Weights at grid point `k` are
/// held constant on `[t_k, t_{k+1})`; `None` means no intervention.
pub fn integrate(
    initial: &NodeState,
    control: Option<&ControlTrajectory>,
    params: &SirParams,
    g: &Graph,
) -> Result<StateTrajectory> {
    integrate_with_rule(initial, control, RateRule::Controlled, params, g)
}

pub fn integrate_with_rule(
    initial: &NodeState,
    control: Option<&ControlTrajectory>,
    rule: RateRule,
    params: &SirParams,
    g: &Graph,
) -> Result<StateTrajectory> {
    let n = g.node_count();
    if let Some(c) = control {
        if c.len() != params.steps + 1 {
            return Err(Error::GridMismatch {
                expected: params.steps + 1,
                found: c.len(),
            });
        }
        if c.node_count() != n {
            return Err(Error::LengthMismatch {
                left: c.node_count(),
                right: n,
            });
        }
    }
    let zeros = vec![0.0; n];
    let (traj, _) = integrate_feedback(
        initial,
        |k, _| Ok(control.map_or_else(|| zeros.clone(), |c| c.weights[k].clone())),
        rule,
        params,
        g,
    )?;
    Ok(traj)
}

/// Integrates with weights chosen from the current state at every grid point
/// (state feedback). Returns the trajectory and the weights actually applied;
/// the final grid point also records the policy's choice there.
pub fn integrate_feedback<P>(
    initial: &NodeState,
    mut policy: P,
    rule: RateRule,
    params: &SirParams,
    g: &Graph,
) -> Result<(StateTrajectory, ControlTrajectory)>
where
    P: FnMut(usize, &NodeState) -> Result<Vec<f64>>,
{
    params.validate()?;
    let n = g.node_count();
    if initial.len() != n {
        return Err(Error::LengthMismatch {
            left: initial.len(),
            right: n,
        });
    }
    let grid = params.grid();
    let dt = params.dt();
    let reference: Vec<f64> = (0..n).map(|v| initial.s[v] + initial.i[v] + initial.r[v]).collect();
    initial.check(0.0, &reference)?;

    let mut states = Vec::with_capacity(grid.len());
    let mut weights = Vec::with_capacity(grid.len());
    let (mut beta, mut gamma) = (vec![0.0; n], vec![0.0; n]);
    let mut current = initial.clone();
    for k in 0..params.steps {
        let w = policy(k, &current)?;
        check_weights(&w)?;
        rule.rates(params, &w, &mut beta, &mut gamma);
        let next = rk4_step(&current, &beta, &gamma, dt, g);
        next.check(grid[k + 1], &reference)?;
        states.push(std::mem::replace(&mut current, next));
        weights.push(w);
    }
    let w_last = policy(params.steps, &current)?;
    check_weights(&w_last)?;
    weights.push(w_last);
    states.push(current);
    Ok((
        StateTrajectory {
            grid: grid.clone(),
            states,
        },
        ControlTrajectory { grid, weights },
    ))
}

/// `R0 = (beta0 / gamma0) * rho(A)`.
pub fn basic_reproduction_number(params: &SirParams, g: &Graph) -> Result<f64> {
    Ok(params.beta0 / params.gamma0 * spectral_radius(g, DEFAULT_SPECTRAL_TOL)?)
}

/// Spectral radius of the frozen next-generation matrix
/// `(beta0/gamma0) diag((1 - u w_i)/(1 + u w_i)) A`.
///
/// `D A` is similar to the symmetric nonnegative `D^{1/2} A D^{1/2}`, so the
/// power iteration runs on the latter, where the residual test is rigorous.
pub fn controlled_reproduction_number(w: &[f64], params: &SirParams, g: &Graph) -> Result<f64> {
    check_weights(w)?;
    if w.len() != g.node_count() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: g.node_count(),
        });
    }
    let root: Vec<f64> = w
        .iter()
        .map(|&wi| ((1.0 - params.u * wi) / (1.0 + params.u * wi)).sqrt())
        .collect();
    let mut scaled = vec![0.0; w.len()];
    let rho = dominant_eigenvalue(
        w.len(),
        |x, y| {
            for ((s, xi), di) in scaled.iter_mut().zip(x).zip(&root) {
                *s = xi * di;
            }
            g.adjacency_apply(&scaled, y);
            for (yi, di) in y.iter_mut().zip(&root) {
                *yi *= di;
            }
        },
        DEFAULT_SPECTRAL_TOL,
        MAX_POWER_ITERATIONS,
    )?;
    Ok(params.beta0 / params.gamma0 * rho)
}

/// Instantaneous effective reproduction number at every grid point.
pub fn effective_reproduction_series(control: &ControlTrajectory, params: &SirParams, g: &Graph) -> Result<Vec<f64>> {
    control
        .weights
        .iter()
        .map(|w| controlled_reproduction_number(w, params, g))
        .collect()
}

/// Mean-field propagation threshold `<k> / (<k^2> - <k>)`.
pub fn epidemic_threshold(g: &Graph) -> Result<f64> {
    let degrees = g.degrees();
    let first: u64 = degrees.iter().map(|&k| k as u64).sum();
    let second: u64 = degrees.iter().map(|&k| (k * k) as u64).sum();
    if second <= first {
        return Err(Error::Undefined(format!(
            "epidemic threshold needs <k^2> > <k> (sums {second} vs {first})"
        )));
    }
    // the 1/N factors cancel
    Ok(first as f64 / (second - first) as f64)
}

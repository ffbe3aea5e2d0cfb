//! Mean-field transition and score operators, backward induction, mean
//! field flows and induced action kernels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{EvaluatorKind, GameSpec, PolicySpec};
use crate::modulus::Modulus;
use crate::risk;
use crate::spaces::{tv_distance, Dist, JointDist};

pub type ValueVector = Vec<f64>;

/// Tolerance used by the growth-bound assertion.
const GROWTH_TOL: f64 = 1e-9;

/// A score-operator family with its constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluator {
    pub kind: EvaluatorKind,
    pub c0: f64,
    pub c1: f64,
    pub c_bar: f64,
    pub zeta: Modulus,
}

impl Evaluator {
    /// The game's own evaluator.
    pub fn for_game(game: &GameSpec) -> Self {
        let m = &game.moduli;
        Self { kind: game.evaluator, c0: m.c0, c1: m.c1, c_bar: m.c_bar, zeta: m.zeta.clone() }
    }

    pub fn with_kind(game: &GameSpec, kind: EvaluatorKind) -> Result<Self> {
        if let EvaluatorKind::Avar { kappa } = kind {
            if !(kappa > 0.0 && kappa <= 1.0) {
                return invalid(format!("kappa must lie in (0, 1], got {kappa}"));
            }
        }
        let m = game.resolve_moduli(kind)?;
        Ok(Self { kind, c0: m.c0, c1: m.c1, c_bar: m.c_bar, zeta: m.zeta })
    }

    pub fn expected_sum(game: &GameSpec) -> Self {
        Self::with_kind(game, EvaluatorKind::ExpectedSum).expect("expected-sum constants")
    }

    pub fn avar(game: &GameSpec, kappa: f64) -> Result<Self> {
        Self::with_kind(game, EvaluatorKind::Avar { kappa })
    }

    pub fn kappa(&self) -> f64 {
        match self.kind {
            EvaluatorKind::ExpectedSum => 1.0,
            EvaluatorKind::Avar { kappa } => kappa,
        }
    }

    /// Expectation or AVaR of `values` under `probs`.
    pub fn risk(&self, values: &[f64], probs: &[f64]) -> f64 {
        match self.kind {
            EvaluatorKind::ExpectedSum => risk::expectation(values, probs),
            EvaluatorKind::Avar { kappa } => risk::avar(values, probs, kappa),
        }
    }

    pub(crate) fn risk_ordered(&self, order: &[usize], values: &[f64], probs: &[f64]) -> f64 {
        match self.kind {
            EvaluatorKind::ExpectedSum => risk::expectation(values, probs),
            EvaluatorKind::Avar { kappa } => risk::avar_ordered(order, values, probs, kappa),
        }
    }

    /// Initial functional: the risk of `v` under the initial law.
    pub fn initial(&self, game: &GameSpec, v: &[f64]) -> f64 {
        self.risk(v, game.initial.weights())
    }

    /// `c_r(z) = C0 sum_{k=1}^r C1^(k-1) + C1^r z`.
    pub fn growth(&self, r: usize, z: f64) -> f64 {
        let mut acc = z;
        for _ in 0..r {
            acc = self.c0 + self.c1 * acc;
        }
        acc
    }

    /// `c(x, xi, a) + rho(v; P_t(x, xi, a))`, zero-based step.
    pub(crate) fn action_value(
        &self,
        game: &GameSpec,
        step: usize,
        x: usize,
        xi: &[f64],
        a: usize,
        v: &[f64],
        order: &[usize],
        buf: &mut [f64],
    ) -> f64 {
        game.transition_into(step, x, xi, a, buf);
        game.cost_at(step, x, xi, a) + self.risk_ordered(order, v, buf)
    }

    /// `G^lambda_{t,xi} v (x)`.
    pub fn apply(&self, game: &GameSpec, t: usize, x: usize, xi: &Dist, lambda: &Dist, v: &[f64]) -> Result<f64> {
        check_time(game, t)?;
        if x >= game.n_states() || xi.len() != game.n_states() || v.len() != game.n_states() {
            return invalid("state, environment or value dimension mismatch");
        }
        if lambda.len() != game.n_actions() {
            return invalid("action distribution has the wrong dimension");
        }
        let order = ascending(v);
        let mut buf = vec![0.0; game.n_states()];
        let mut s = 0.0;
        for a in 0..game.n_actions() {
            let w = lambda.get(a);
            if w > 0.0 {
                s += w * self.action_value(game, t - 1, x, xi.weights(), a, v, &order, &mut buf);
            }
        }
        Ok(s)
    }

    /// `inf_lambda G^lambda_{t,xi} v (x)` and the lowest minimising action.
    pub fn apply_star(&self, game: &GameSpec, t: usize, x: usize, xi: &Dist, v: &[f64]) -> Result<(f64, usize)> {
        check_time(game, t)?;
        if x >= game.n_states() || xi.len() != game.n_states() || v.len() != game.n_states() {
            return invalid("state, environment or value dimension mismatch");
        }
        let order = ascending(v);
        let mut buf = vec![0.0; game.n_states()];
        Ok(self.star_at(game, t - 1, x, xi.weights(), v, &order, &mut buf))
    }

    pub(crate) fn star_at(
        &self,
        game: &GameSpec,
        step: usize,
        x: usize,
        xi: &[f64],
        v: &[f64],
        order: &[usize],
        buf: &mut [f64],
    ) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for a in 0..game.n_actions() {
            let q = self.action_value(game, step, x, xi, a, v, order, buf);
            if q < best.0 {
                best = (q, a);
            }
        }
        best
    }
}

pub(crate) fn ascending(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(std::cmp::Ordering::Equal));
    order
}

fn check_time(game: &GameSpec, t: usize) -> Result<()> {
    if t == 0 || t >= game.horizon {
        return invalid(format!("time {t} outside 1..{}", game.horizon - 1));
    }
    Ok(())
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `Q^lambda_{t,x,xi} = sum_a lambda(a) P_t(x, xi, a)`.
pub fn q_push(game: &GameSpec, t: usize, x: usize, xi: &Dist, lambda: &Dist) -> Result<Dist> {
    check_time(game, t)?;
    if lambda.len() != game.n_actions() {
        return invalid("action distribution has the wrong dimension");
    }
    let m = game.n_states();
    let mut out = vec![0.0; m];
    for a in 0..game.n_actions() {
        let w = lambda.get(a);
        if w > 0.0 {
            let p = game.transition_dist(t, x, xi, a)?;
            for y in 0..m {
                out[y] += w * p.get(y);
            }
        }
    }
    Dist::renormalized(out)
}

/// The tuple of joint state-action laws `psi_1 .. psi_{T-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldFlow {
    pub joints: Vec<JointDist>,
}

impl MeanFieldFlow {
    pub fn new(joints: Vec<JointDist>) -> Result<Self> {
        if joints.is_empty() {
            return invalid("a flow needs at least one joint");
        }
        let (m, k) = (joints[0].n_states(), joints[0].n_actions());
        if joints.iter().any(|j| j.n_states() != m || j.n_actions() != k) {
            return invalid("flow joints have unequal shapes");
        }
        Ok(Self { joints })
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// `xi_{psi_t}` for `t = 1..T-1`.
    pub fn marginals(&self) -> Vec<Dist> {
        self.joints.iter().map(|j| j.state_marginal()).collect()
    }

    pub fn check_shape(&self, game: &GameSpec) -> Result<()> {
        if self.joints.len() != game.horizon - 1 {
            return invalid(format!("flow has {} joints, horizon needs {}", self.joints.len(), game.horizon - 1));
        }
        let j = &self.joints[0];
        if j.n_states() != game.n_states() || j.n_actions() != game.n_actions() {
            return invalid("flow shape does not match the game");
        }
        Ok(())
    }
}

/// Push `mu` one step through `kernel` rows with environment `env`.
pub(crate) fn push_forward(game: &GameSpec, step: usize, mu: &[f64], env: &[f64], kernel: &[Vec<f64>]) -> Vec<f64> {
    let m = game.n_states();
    let mut out = vec![0.0; m];
    let mut buf = vec![0.0; m];
    for x in 0..m {
        if mu[x] == 0.0 {
            continue;
        }
        for (a, &w) in kernel[x].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            game.transition_into(step, x, env, a, &mut buf);
            for y in 0..m {
                out[y] += mu[x] * w * buf[y];
            }
        }
    }
    out
}

fn joint_push(game: &GameSpec, step: usize, psi: &JointDist, env: &[f64]) -> Vec<f64> {
    let m = game.n_states();
    let kernel: Vec<Vec<f64>> = (0..m).map(|x| psi.row(x).to_vec()).collect();
    // rows already carry the state mass
    push_forward(game, step, &vec![1.0; m], env, &kernel)
}

pub(crate) fn policy_row(p: &PolicySpec, step: usize, x: usize, xi: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    p.policy_into(step, x, xi, &mut out);
    out
}

/// Flow of `policy` with its own marginal fed back as the environment.
pub fn marginal_flow_of(game: &GameSpec, policy: &PolicySpec) -> MeanFieldFlow {
    let (m, k) = (game.n_states(), game.n_actions());
    let mut xi = game.initial.weights().to_vec();
    let mut joints = Vec::with_capacity(game.horizon - 1);
    for step in 0..game.horizon - 1 {
        let kernel: Vec<Vec<f64>> = (0..m).map(|x| policy_row(policy, step, x, &xi, k)).collect();
        let mut w = Vec::with_capacity(m * k);
        for x in 0..m {
            for a in 0..k {
                w.push(xi[x] * kernel[x][a]);
            }
        }
        joints.push(JointDist::from_raw(m, k, w));
        xi = push_forward(game, step, &xi, &xi, &kernel);
    }
    MeanFieldFlow { joints }
}

/// `xi_1 .. xi_T` of the policy's own flow.
pub fn marginal_flow(game: &GameSpec, policy: &PolicySpec) -> Result<Vec<Dist>> {
    let flow = marginal_flow_of(game, policy);
    let mut out = flow.marginals();
    out.push(flow_terminal_xi(game, &flow)?);
    Ok(out)
}

/// Flow generated by oblivious kernels `kernels[t][x]`.
pub fn flow_from_kernels(game: &GameSpec, kernels: &[Vec<Dist>]) -> Result<MeanFieldFlow> {
    let p = PolicySpec::oblivious(kernels.to_vec(), game.horizon, game.n_states(), game.n_actions())?;
    Ok(marginal_flow_of(game, &p))
}

fn check_env_flow(game: &GameSpec, xi_flow: &[Dist], terminal: &[f64]) -> Result<()> {
    if xi_flow.len() < game.horizon - 1 {
        return invalid(format!("environment flow needs at least {} entries", game.horizon - 1));
    }
    if xi_flow.iter().any(|d| d.len() != game.n_states()) || terminal.len() != game.n_states() {
        return invalid("environment or terminal dimension mismatch");
    }
    Ok(())
}

fn growth_check(eval: &Evaluator, r: usize, v: &[f64], terminal_norm: f64) -> Result<()> {
    let bound = eval.growth(r, terminal_norm);
    let n = sup_norm(v);
    if n > bound + GROWTH_TOL * (1.0 + bound) {
        return Err(Error::Consistency(format!("value norm {n} exceeds growth bound {bound} after {r} steps")));
    }
    Ok(())
}

/// Backward recursion `v_t = S^{pi_t}_{t, xi_t} v_{t+1}`, `v_T = terminal`.
pub fn mf_policy_values(
    game: &GameSpec,
    eval: &Evaluator,
    policy: &PolicySpec,
    xi_flow: &[Dist],
    terminal: &[f64],
) -> Result<Vec<ValueVector>> {
    check_env_flow(game, xi_flow, terminal)?;
    let (m, k, h) = (game.n_states(), game.n_actions(), game.horizon);
    let tn = sup_norm(terminal);
    let mut vals = vec![Vec::new(); h];
    vals[h - 1] = terminal.to_vec();
    let mut buf = vec![0.0; m];
    for step in (0..h - 1).rev() {
        let next = &vals[step + 1];
        let order = ascending(next);
        let xi = xi_flow[step].weights();
        let mut cur = vec![0.0; m];
        for x in 0..m {
            let lam = policy_row(policy, step, x, xi, k);
            let mut s = 0.0;
            for a in 0..k {
                if lam[a] > 0.0 {
                    s += lam[a] * eval.action_value(game, step, x, xi, a, next, &order, &mut buf);
                }
            }
            cur[x] = s;
        }
        growth_check(eval, h - 1 - step, &cur, tn)?;
        vals[step] = cur;
    }
    Ok(vals)
}

/// Optimal values and the greedy (lowest-index) oblivious policy.
pub fn mf_bellman(
    game: &GameSpec,
    eval: &Evaluator,
    xi_flow: &[Dist],
    terminal: &[f64],
) -> Result<(Vec<ValueVector>, PolicySpec)> {
    check_env_flow(game, xi_flow, terminal)?;
    let (m, k, h) = (game.n_states(), game.n_actions(), game.horizon);
    let tn = sup_norm(terminal);
    let mut vals = vec![Vec::new(); h];
    vals[h - 1] = terminal.to_vec();
    let mut table = vec![Vec::with_capacity(m); h - 1];
    let mut buf = vec![0.0; m];
    for step in (0..h - 1).rev() {
        let next = &vals[step + 1];
        let order = ascending(next);
        let xi = xi_flow[step].weights();
        let mut cur = vec![0.0; m];
        for x in 0..m {
            let (v, a) = eval.star_at(game, step, x, xi, next, &order, &mut buf);
            cur[x] = v;
            table[step].push(Dist::dirac(k, a));
        }
        growth_check(eval, h - 1 - step, &cur, tn)?;
        vals[step] = cur;
    }
    let greedy = PolicySpec::oblivious(table, h, m, k)?;
    Ok((vals, greedy))
}

/// Row-normalised joint; zero-mass states get the uniform kernel.
pub fn induced_kernel(joint: &JointDist) -> Vec<Dist> {
    let k = joint.n_actions();
    (0..joint.n_states())
        .map(|x| {
            let row = joint.row(x);
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                let w: Vec<f64> = row.iter().map(|v| v / mass).collect();
                Dist::renormalized(w).expect("row of a valid joint")
            } else {
                Dist::uniform(k)
            }
        })
        .collect()
}

/// Oblivious policy made of the flow's induced kernels.
pub fn induced_policy(game: &GameSpec, flow: &MeanFieldFlow) -> Result<PolicySpec> {
    flow.check_shape(game)?;
    let table = flow.joints.iter().map(induced_kernel).collect();
    PolicySpec::oblivious(table, game.horizon, game.n_states(), game.n_actions())
}

/// `xi_T = sum_{x,a} P_{T-1}(x, xi_{psi_{T-1}}, a) psi_{T-1}(x, a)`.
pub fn flow_terminal_xi(game: &GameSpec, flow: &MeanFieldFlow) -> Result<Dist> {
    flow.check_shape(game)?;
    let last = flow.joints.last().expect("nonempty");
    let env = last.state_marginal();
    Dist::renormalized(joint_push(game, game.horizon - 2, last, env.weights()))
}

/// `V_M = V(., xi_T)`.
pub fn flow_terminal_values(game: &GameSpec, flow: &MeanFieldFlow) -> Result<ValueVector> {
    game.terminal_vector(&flow_terminal_xi(game, flow)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResiduals {
    /// TV between the first marginal and the initial law
    pub initial: f64,
    /// entry `t-1`: TV between `xi_{psi_{t+1}}` and the push of `psi_t`;
    /// the last entry has no successor and is zero
    pub steps: Vec<f64>,
}

impl FlowResiduals {
    pub fn max(&self) -> f64 {
        self.steps.iter().fold(self.initial, |m, v| m.max(*v))
    }

    pub fn first_failure(&self, tol: f64) -> Option<String> {
        if self.initial > tol {
            return Some(format!("initial marginal is off by {:.3e}", self.initial));
        }
        self.steps
            .iter()
            .position(|r| *r > tol)
            .map(|t| format!("marginal consistency fails at t = {} (residual {:.3e})", t + 1, self.steps[t]))
    }
}

pub fn check_mff(game: &GameSpec, flow: &MeanFieldFlow) -> Result<FlowResiduals> {
    flow.check_shape(game)?;
    let marg = flow.marginals();
    let initial = tv_distance(&marg[0], &game.initial)?;
    let mut steps = Vec::with_capacity(flow.len());
    for step in 0..flow.len() {
        if step + 1 < flow.len() {
            let pushed = joint_push(game, step, &flow.joints[step], marg[step].weights());
            let s: f64 = pushed.iter().zip(marg[step + 1].weights()).map(|(a, b)| (a - b).abs()).sum();
            steps.push(0.5 * s);
        } else {
            steps.push(0.0);
        }
    }
    Ok(FlowResiduals { initial, steps })
}

pub const MFF_TOL: f64 = 1e-8;

pub(crate) fn require_mff(game: &GameSpec, flow: &MeanFieldFlow) -> Result<()> {
    let r = check_mff(game, flow)?;
    match r.first_failure(MFF_TOL) {
        Some(msg) => invalid(format!("flow is not a mean field flow: {msg}")),
        None => Ok(()),
    }
}

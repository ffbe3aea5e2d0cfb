//! Game definitions: spaces, horizon, initial law, transition / cost /
//! terminal families, moduli, and an optional default policy.
//!
//! Public operations take times `t = 1..T`; internal hot paths use the
//! zero-based `step = t - 1`.

pub mod builtin;
pub mod config;
pub mod policy;
pub mod random;
pub mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{AffineWeight, EvaluatorKind, GameConfig, ModuliConfig, PolicyConfig};
pub use policy::{PolicyKind, PolicySpec};

use crate::error::{invalid, Error, Result};
use crate::modulus::Modulus;
use crate::spaces::{bl_dual_constant, tv_distance, Dist, FiniteMetricSpace};
use config::{CostConfig, SpaceConfig, TerminalConfig, TransitionConfig};

pub type TransitionFn = dyn Fn(usize, usize, &Dist, usize) -> Dist + Send + Sync;

/// Host-code kernel; arguments are `(t, x, xi, a)` with `t` starting at 1.
#[derive(Clone)]
pub struct TransitionPlugin {
    pub name: String,
    pub f: Arc<TransitionFn>,
    pub eta: Modulus,
}

impl fmt::Debug for TransitionPlugin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransitionPlugin({})", self.name)
    }
}

impl PartialEq for TransitionPlugin {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f) && self.eta == other.eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionFamily {
    XiIndependent {
        table: Vec<Vec<Vec<Dist>>>,
    },
    TableAffine {
        p0: Vec<Vec<Vec<Dist>>>,
        p1: Vec<Vec<Vec<Dist>>>,
        weight: AffineWeight,
    },
    Plugin(TransitionPlugin),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostFamily {
    Zero,
    Affine {
        base: Vec<Vec<Vec<f64>>>,
        mean_field: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminalFamily {
    Zero,
    Affine {
        base: Vec<f64>,
        mean_field: Option<Vec<Vec<f64>>>,
    },
}

/// Closed-form constants read off the families at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct GameConstants {
    /// sup |c| over the simplex
    pub cost_sup: f64,
    /// max over (t,x,a) of the BL dual constant of the cost's xi-coefficients
    pub cost_xi_k: f64,
    /// Lipschitz constant of c in the action
    pub cost_action_lip: f64,
    /// TV(P(xi), P(xi')) <= eta_xi_k * BL(xi, xi')
    pub eta_xi_k: f64,
    /// TV(P(a), P(a')) <= eta_action_k * d(a, a')
    pub eta_action_k: f64,
    /// sup |V| over the simplex
    pub terminal_sup: f64,
    pub iota_k: f64,
}

/// Moduli and constants in force for the game's own evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliSpec {
    pub eta: Modulus,
    pub theta: Modulus,
    pub iota: Modulus,
    pub zeta: Modulus,
    pub c0: f64,
    pub c1: f64,
    pub c_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub name: String,
    pub horizon: usize,
    pub states: FiniteMetricSpace,
    pub actions: FiniteMetricSpace,
    pub initial: Dist,
    pub transition: TransitionFamily,
    pub cost: CostFamily,
    pub terminal: TerminalFamily,
    pub evaluator: EvaluatorKind,
    pub moduli: ModuliSpec,
    pub declared: ModuliConfig,
    pub constants: GameConstants,
    pub policy: Option<PolicySpec>,
}

pub fn load_game(text: &str) -> Result<GameSpec> {
    let cfg: GameConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    GameSpec::from_config(&cfg)
}

fn space_from(cfg: &SpaceConfig, what: &str) -> Result<FiniteMetricSpace> {
    let n = cfg.labels.len();
    let metric = cfg.metric.clone().unwrap_or_else(|| {
        (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect()
    });
    FiniteMetricSpace::new(cfg.labels.clone(), metric).map_err(|e| Error::Validation(format!("{what}: {e}")))
}

fn kernel_from(t: &config::KernelTable, h: usize, m: usize, k: usize, what: &str) -> Result<Vec<Vec<Vec<Dist>>>> {
    if t.len() != h - 1 {
        return Err(Error::Validation(format!("{what} needs {} time rows, got {}", h - 1, t.len())));
    }
    let mut out = Vec::with_capacity(h - 1);
    for (s, rows) in t.iter().enumerate() {
        if rows.len() != m {
            return Err(Error::Validation(format!("{what}[t={}] needs {m} state rows", s + 1)));
        }
        let mut tr = Vec::with_capacity(m);
        for (x, acts) in rows.iter().enumerate() {
            if acts.len() != k {
                return Err(Error::Validation(format!("{what}[t={}][x={x}] needs {k} action rows", s + 1)));
            }
            let mut xr = Vec::with_capacity(k);
            for (a, w) in acts.iter().enumerate() {
                if w.len() != m {
                    return Err(Error::Validation(format!("{what}[t={}][x={x}][a={a}] needs {m} entries", s + 1)));
                }
                xr.push(Dist::new(w.clone()).map_err(|e| {
                    Error::Validation(format!("{what}[t={}][x={x}][a={a}]: {e}", s + 1))
                })?);
            }
            tr.push(xr);
        }
        out.push(tr);
    }
    Ok(out)
}

fn kernel_raw(t: &[Vec<Vec<Dist>>]) -> config::KernelTable {
    t.iter()
        .map(|r| r.iter().map(|a| a.iter().map(|d| d.weights().to_vec()).collect()).collect())
        .collect()
}

fn finite_all<'a>(it: impl IntoIterator<Item = &'a f64>, what: &str) -> Result<()> {
    if it.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} must be finite")));
    }
    Ok(())
}

impl GameSpec {
    pub fn from_config(cfg: &GameConfig) -> Result<Self> {
        let horizon = cfg.horizon;
        if horizon < 2 {
            return Err(Error::Validation(format!("horizon must be >= 2, got {horizon}")));
        }
        let states = space_from(&cfg.states, "states")?;
        let actions = space_from(&cfg.actions, "actions")?;
        let (m, k) = (states.len(), actions.len());
        if cfg.initial.len() != m {
            return Err(Error::Validation(format!("initial needs {m} entries")));
        }
        let initial = Dist::new(cfg.initial.clone()).map_err(|e| Error::Validation(format!("initial: {e}")))?;

        let transition = match &cfg.transition {
            TransitionConfig::XiIndependent { table } => TransitionFamily::XiIndependent {
                table: kernel_from(table, horizon, m, k, "transition.table")?,
            },
            TransitionConfig::TableAffine { p0, p1, weight } => {
                if weight.coef.len() != m {
                    return Err(Error::Validation(format!("transition.weight.coef needs {m} entries")));
                }
                finite_all(weight.coef.iter().chain([&weight.c0]), "transition.weight")?;
                TransitionFamily::TableAffine {
                    p0: kernel_from(p0, horizon, m, k, "transition.p0")?,
                    p1: kernel_from(p1, horizon, m, k, "transition.p1")?,
                    weight: weight.clone(),
                }
            }
        };

        let cost = match &cfg.cost {
            CostConfig::Zero => CostFamily::Zero,
            CostConfig::Affine { base, mean_field } => {
                let ok = base.len() == horizon - 1 && base.iter().all(|r| r.len() == m && r.iter().all(|a| a.len() == k));
                if !ok {
                    return Err(Error::Validation(format!("cost.base must be {}x{m}x{k}", horizon - 1)));
                }
                finite_all(base.iter().flatten().flatten(), "cost.base")?;
                if let Some(mf) = mean_field {
                    let ok = mf.len() == horizon - 1
                        && mf.iter().all(|r| r.len() == m && r.iter().all(|a| a.len() == k && a.iter().all(|y| y.len() == m)));
                    if !ok {
                        return Err(Error::Validation(format!("cost.mean_field must be {}x{m}x{k}x{m}", horizon - 1)));
                    }
                    finite_all(mf.iter().flatten().flatten().flatten(), "cost.mean_field")?;
                }
                CostFamily::Affine { base: base.clone(), mean_field: mean_field.clone() }
            }
        };

        let terminal = match &cfg.terminal {
            TerminalConfig::Zero => TerminalFamily::Zero,
            TerminalConfig::Affine { base, mean_field } => {
                if base.len() != m {
                    return Err(Error::Validation(format!("terminal.base needs {m} entries")));
                }
                finite_all(base, "terminal.base")?;
                if let Some(mf) = mean_field {
                    if mf.len() != m || mf.iter().any(|r| r.len() != m) {
                        return Err(Error::Validation(format!("terminal.mean_field must be {m}x{m}")));
                    }
                    finite_all(mf.iter().flatten(), "terminal.mean_field")?;
                }
                TerminalFamily::Affine { base: base.clone(), mean_field: mean_field.clone() }
            }
        };

        let policy = match &cfg.policy {
            Some(p) => Some(PolicySpec::from_config(p, &states, horizon, k)?),
            None => None,
        };

        Self::assemble(
            cfg.name.clone().unwrap_or_else(|| "game".into()),
            horizon,
            states,
            actions,
            initial,
            transition,
            cost,
            terminal,
            cfg.evaluator,
            cfg.moduli.clone(),
            policy,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        name: String,
        horizon: usize,
        states: FiniteMetricSpace,
        actions: FiniteMetricSpace,
        initial: Dist,
        transition: TransitionFamily,
        cost: CostFamily,
        terminal: TerminalFamily,
        evaluator: EvaluatorKind,
        declared: ModuliConfig,
        policy: Option<PolicySpec>,
    ) -> Result<Self> {
        if let EvaluatorKind::Avar { kappa } = evaluator {
            if !(kappa > 0.0 && kappa <= 1.0) {
                return Err(Error::Validation(format!("avar kappa must lie in (0, 1], got {kappa}")));
            }
        }
        for m in [&declared.eta, &declared.theta, &declared.iota, &declared.zeta].into_iter().flatten() {
            m.check().map_err(|e| Error::Validation(format!("moduli: {e}")))?;
        }
        if let Some(p) = &policy {
            if p.horizon != horizon || p.n_states != states.len() || p.n_actions != actions.len() {
                return Err(Error::Validation("policy dimensions do not match the game".into()));
            }
        }
        let mut g = Self {
            name,
            horizon,
            states,
            actions,
            initial,
            transition,
            cost,
            terminal,
            evaluator,
            moduli: ModuliSpec {
                eta: Modulus::Zero,
                theta: Modulus::Zero,
                iota: Modulus::Zero,
                zeta: Modulus::Zero,
                c0: 0.0,
                c1: 1.0,
                c_bar: 1.0,
            },
            declared,
            constants: GameConstants::default(),
            policy,
        };
        g.constants = g.compute_constants()?;
        g.moduli = g.resolve_moduli(evaluator)?;
        Ok(g)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn with_policy(mut self, policy: Option<PolicySpec>) -> Result<Self> {
        if let Some(p) = &policy {
            if p.horizon != self.horizon || p.n_states != self.n_states() || p.n_actions != self.n_actions() {
                return invalid("policy dimensions do not match the game");
            }
        }
        self.policy = policy;
        self.moduli = self.resolve_moduli(self.evaluator)?;
        Ok(self)
    }

    pub fn with_evaluator(mut self, kind: EvaluatorKind) -> Result<Self> {
        self.evaluator = kind;
        self.moduli = self.resolve_moduli(kind)?;
        Ok(self)
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t == 0 || t >= self.horizon {
            return invalid(format!("time {t} outside 1..{}", self.horizon - 1));
        }
        Ok(())
    }

    fn check_state_env(&self, x: usize, xi: &Dist) -> Result<()> {
        if x >= self.n_states() || xi.len() != self.n_states() {
            return invalid("state index or environment dimension out of range");
        }
        Ok(())
    }

    pub fn transition_dist(&self, t: usize, x: usize, xi: &Dist, a: usize) -> Result<Dist> {
        self.check_time(t)?;
        self.check_state_env(x, xi)?;
        if a >= self.n_actions() {
            return invalid(format!("action {a} out of range"));
        }
        if let TransitionFamily::Plugin(p) = &self.transition {
            let d = (p.f)(t, x, xi, a);
            if d.len() != self.n_states() {
                return Err(Error::Validation(format!("plugin kernel '{}' returned wrong length", p.name)));
            }
            return Ok(d);
        }
        let mut out = vec![0.0; self.n_states()];
        self.transition_into(t - 1, x, xi.weights(), a, &mut out);
        Ok(Dist::from_raw(out))
    }

    pub(crate) fn transition_into(&self, step: usize, x: usize, xi: &[f64], a: usize, out: &mut [f64]) {
        match &self.transition {
            TransitionFamily::XiIndependent { table } => out.copy_from_slice(table[step][x][a].weights()),
            TransitionFamily::TableAffine { p0, p1, weight } => {
                let w = weight.eval(xi);
                let (r0, r1) = (p0[step][x][a].weights(), p1[step][x][a].weights());
                for y in 0..out.len() {
                    out[y] = (1.0 - w) * r0[y] + w * r1[y];
                }
            }
            TransitionFamily::Plugin(p) => {
                let d = (p.f)(step + 1, x, &Dist::from_raw(xi.to_vec()), a);
                out.copy_from_slice(d.weights());
            }
        }
    }

    pub fn is_xi_independent(&self) -> bool {
        let trans = matches!(self.transition, TransitionFamily::XiIndependent { .. });
        let cost = match &self.cost {
            CostFamily::Zero => true,
            CostFamily::Affine { mean_field, .. } => mean_field.is_none(),
        };
        trans && cost
    }

    pub fn cost(&self, t: usize, x: usize, xi: &Dist, a: usize) -> Result<f64> {
        self.check_time(t)?;
        self.check_state_env(x, xi)?;
        if a >= self.n_actions() {
            return invalid(format!("action {a} out of range"));
        }
        Ok(self.cost_at(t - 1, x, xi.weights(), a))
    }

    pub(crate) fn cost_at(&self, step: usize, x: usize, xi: &[f64], a: usize) -> f64 {
        match &self.cost {
            CostFamily::Zero => 0.0,
            CostFamily::Affine { base, mean_field } => {
                let mut c = base[step][x][a];
                if let Some(mf) = mean_field {
                    c += mf[step][x][a].iter().zip(xi).map(|(m, p)| m * p).sum::<f64>();
                }
                c
            }
        }
    }

    pub(crate) fn terminal_at(&self, x: usize, xi: &[f64]) -> f64 {
        match &self.terminal {
            TerminalFamily::Zero => 0.0,
            TerminalFamily::Affine { base, mean_field } => {
                let mut v = base[x];
                if let Some(mf) = mean_field {
                    v += mf[x].iter().zip(xi).map(|(m, p)| m * p).sum::<f64>();
                }
                v
            }
        }
    }

    /// `V(., xi_T)`.
    pub fn terminal_vector(&self, xi_t: &Dist) -> Result<Vec<f64>> {
        if xi_t.len() != self.n_states() {
            return invalid("terminal environment has the wrong dimension");
        }
        Ok((0..self.n_states()).map(|x| self.terminal_at(x, xi_t.weights())).collect())
    }

    /// `||V||_inf` over states and the whole simplex.
    pub fn terminal_sup(&self) -> f64 {
        self.constants.terminal_sup
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        let m = self.n_states();
        (0..m).map(|y| Dist::<f64>::dirac(m, y).into_weights()).collect()
    }

    fn compute_constants(&self) -> Result<GameConstants> {
        let (m, k, h) = (self.n_states(), self.n_actions(), self.horizon);
        let verts = self.vertices();
        let mut c = GameConstants::default();

        for step in 0..h - 1 {
            for x in 0..m {
                for v in &verts {
                    for a in 0..k {
                        let ca = self.cost_at(step, x, v, a);
                        c.cost_sup = c.cost_sup.max(ca.abs());
                        for b in 0..a {
                            let cb = self.cost_at(step, x, v, b);
                            c.cost_action_lip = c.cost_action_lip.max((ca - cb).abs() / self.actions.d(a, b));
                        }
                    }
                }
                if let CostFamily::Affine { mean_field: Some(mf), .. } = &self.cost {
                    for a in 0..k {
                        c.cost_xi_k = c.cost_xi_k.max(bl_dual_constant(&self.states, &mf[step][x][a]));
                    }
                }
            }
        }

        match &self.transition {
            TransitionFamily::XiIndependent { table } => {
                c.eta_action_k = action_tv_constant(&[table], &self.actions)?;
            }
            TransitionFamily::TableAffine { p0, p1, weight } => {
                // vertices, then convexity of TV in the mixing weight
                for v in &verts {
                    let w = weight.eval(v);
                    if !(0.0..=1.0).contains(&w) {
                        return Err(Error::Validation("transition weight left [0, 1]".into()));
                    }
                }
                let mut tv_max: f64 = 0.0;
                for step in 0..h - 1 {
                    for x in 0..m {
                        for a in 0..k {
                            tv_max = tv_max.max(tv_distance(&p0[step][x][a], &p1[step][x][a])?);
                        }
                    }
                }
                c.eta_xi_k = 2.0 * bl_dual_constant(&self.states, &weight.coef) * tv_max;
                c.eta_action_k = action_tv_constant(&[p0, p1], &self.actions)?;
            }
            TransitionFamily::Plugin(p) => {
                // the declared modulus covers both arguments
                let k1 = p.eta.eval(1.0);
                c.eta_xi_k = if p.eta.is_zero() { 0.0 } else { k1 };
                c.eta_action_k = c.eta_xi_k;
            }
        }

        for x in 0..m {
            for v in &verts {
                c.terminal_sup = c.terminal_sup.max(self.terminal_at(x, v).abs());
            }
            if let TerminalFamily::Affine { mean_field: Some(mf), .. } = &self.terminal {
                c.iota_k = c.iota_k.max(2.0 * bl_dual_constant(&self.states, &mf[x]));
            }
        }
        Ok(c)
    }

    /// Derived moduli for an evaluator of the given kind; declared entries win.
    pub fn resolve_moduli(&self, kind: EvaluatorKind) -> Result<ModuliSpec> {
        let c = &self.constants;
        let d = &self.declared;
        let inv = match kind {
            EvaluatorKind::ExpectedSum => 1.0,
            EvaluatorKind::Avar { kappa } => 1.0 / kappa,
        };
        let c0 = d.c0.unwrap_or(c.cost_sup);
        if c.cost_sup > c0 * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Validation(format!(
                "cost bound violated: sup |c| = {} exceeds declared C0 = {}",
                c.cost_sup, c0
            )));
        }
        let c1 = d.c1.unwrap_or(1.0);
        if c1 < 1.0 {
            return Err(Error::Validation(format!("C1 = {c1} is below the evaluator's growth constant 1")));
        }
        let c_bar = d.c_bar.unwrap_or(inv);
        if c_bar < inv * (1.0 - 1e-12) {
            return Err(Error::Validation(format!("C_bar = {c_bar} is below the evaluator's contraction constant {inv}")));
        }
        let eta = match (&d.eta, &self.transition) {
            (Some(m), _) => m.clone(),
            (None, TransitionFamily::Plugin(p)) => p.eta.clone(),
            (None, _) => Modulus::linear(c.eta_xi_k.max(c.eta_action_k)),
        };
        let iota = d.iota.clone().unwrap_or_else(|| Modulus::linear(c.iota_k));
        let theta = match (&d.theta, &self.policy) {
            (Some(m), _) => m.clone(),
            (None, Some(p)) => p.modulus.clone(),
            (None, None) => Modulus::Zero,
        };
        let zeta = match &d.zeta {
            Some(m) => m.clone(),
            None => {
                let over_c0 = |v: f64| if c0 > 0.0 { v / c0 } else { 0.0 };
                let xi_part = (2.0 * over_c0(c.cost_xi_k)).max(2.0 * inv * c.eta_xi_k);
                let lam_part = 2.0 * 1f64.max(over_c0(c.cost_action_lip)).max(2.0 * inv * c.eta_action_k);
                Modulus::linear(xi_part.max(lam_part))
            }
        };
        Ok(ModuliSpec { eta, theta, iota, zeta, c0, c1, c_bar })
    }

    pub fn to_config(&self) -> Result<GameConfig> {
        let space = |s: &FiniteMetricSpace| SpaceConfig {
            labels: s.labels().to_vec(),
            metric: Some(s.metric().to_vec()),
        };
        let transition = match &self.transition {
            TransitionFamily::XiIndependent { table } => TransitionConfig::XiIndependent { table: kernel_raw(table) },
            TransitionFamily::TableAffine { p0, p1, weight } => TransitionConfig::TableAffine {
                p0: kernel_raw(p0),
                p1: kernel_raw(p1),
                weight: weight.clone(),
            },
            TransitionFamily::Plugin(p) => {
                return invalid(format!("plugin kernel '{}' has no configuration form", p.name))
            }
        };
        let cost = match &self.cost {
            CostFamily::Zero => CostConfig::Zero,
            CostFamily::Affine { base, mean_field } => CostConfig::Affine {
                base: base.clone(),
                mean_field: mean_field.clone(),
            },
        };
        let terminal = match &self.terminal {
            TerminalFamily::Zero => TerminalConfig::Zero,
            TerminalFamily::Affine { base, mean_field } => TerminalConfig::Affine {
                base: base.clone(),
                mean_field: mean_field.clone(),
            },
        };
        Ok(GameConfig {
            name: Some(self.name.clone()),
            horizon: self.horizon,
            states: space(&self.states),
            actions: space(&self.actions),
            initial: self.initial.weights().to_vec(),
            transition,
            cost,
            terminal,
            evaluator: self.evaluator,
            moduli: self.declared.clone(),
            policy: self.policy.as_ref().map(|p| p.to_config()).transpose()?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_config()?).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Relabel states and actions; new index `i` is old index `perm[i]`.
    pub fn permuted(&self, state_perm: &[usize], action_perm: &[usize]) -> Result<Self> {
        crate::spaces::check_perm(state_perm, self.n_states())?;
        crate::spaces::check_perm(action_perm, self.n_actions())?;
        let sp = state_perm;
        let ap = action_perm;
        let kern = |t: &Vec<Vec<Vec<Dist>>>| -> Vec<Vec<Vec<Dist>>> {
            t.iter()
                .map(|r| sp.iter().map(|&x| ap.iter().map(|&a| r[x][a].permuted(sp)).collect()).collect())
                .collect()
        };
        let transition = match &self.transition {
            TransitionFamily::XiIndependent { table } => TransitionFamily::XiIndependent { table: kern(table) },
            TransitionFamily::TableAffine { p0, p1, weight } => TransitionFamily::TableAffine {
                p0: kern(p0),
                p1: kern(p1),
                weight: AffineWeight { c0: weight.c0, coef: sp.iter().map(|&y| weight.coef[y]).collect() },
            },
            TransitionFamily::Plugin(p) => return invalid(format!("cannot relabel plugin kernel '{}'", p.name)),
        };
        let cost = match &self.cost {
            CostFamily::Zero => CostFamily::Zero,
            CostFamily::Affine { base, mean_field } => CostFamily::Affine {
                base: base.iter().map(|r| sp.iter().map(|&x| ap.iter().map(|&a| r[x][a]).collect()).collect()).collect(),
                mean_field: mean_field.as_ref().map(|mf| {
                    mf.iter()
                        .map(|r| {
                            sp.iter()
                                .map(|&x| ap.iter().map(|&a| sp.iter().map(|&y| r[x][a][y]).collect()).collect())
                                .collect()
                        })
                        .collect()
                }),
            },
        };
        let terminal = match &self.terminal {
            TerminalFamily::Zero => TerminalFamily::Zero,
            TerminalFamily::Affine { base, mean_field } => TerminalFamily::Affine {
                base: sp.iter().map(|&x| base[x]).collect(),
                mean_field: mean_field
                    .as_ref()
                    .map(|mf| sp.iter().map(|&x| sp.iter().map(|&y| mf[x][y]).collect()).collect()),
            },
        };
        let states = self.states.permuted(sp)?;
        let policy = self.policy.as_ref().map(|p| p.permuted(sp, ap, &states)).transpose()?;
        Self::assemble(
            self.name.clone(),
            self.horizon,
            states,
            self.actions.permuted(ap)?,
            self.initial.permuted(sp),
            transition,
            cost,
            terminal,
            self.evaluator,
            self.declared.clone(),
            policy,
        )
    }
}

fn action_tv_constant(tables: &[&Vec<Vec<Vec<Dist>>>], actions: &FiniteMetricSpace) -> Result<f64> {
    let mut k: f64 = 0.0;
    for t in tables {
        for step in t.iter() {
            for row in step {
                for a in 0..row.len() {
                    for b in 0..a {
                        k = k.max(tv_distance(&row[a], &row[b])? / actions.d(a, b));
                    }
                }
            }
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "horizon": 2,
        "states": {"labels": ["only"]},
        "actions": {"labels": ["a", "b"]},
        "initial": [1.0],
        "transition": {"kind": "xi_independent", "table": [[[[1.0], [1.0]]]]},
        "cost": {"kind": "affine", "base": [[[1.0, 0.0]]]},
        "terminal": {"kind": "zero"}
    }"#;

    #[test]
    fn minimal_config_loads() {
        let g = load_game(MINIMAL).unwrap();
        assert_eq!(g.n_states(), 1);
        assert_eq!(g.moduli.c0, 1.0);
        assert_eq!(g.moduli.c_bar, 1.0);
    }

    #[test]
    fn bad_row_is_validation_error() {
        let text = MINIMAL.replace("[[[[1.0], [1.0]]]]", "[[[[0.9], [1.0]]]]");
        assert!(matches!(load_game(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn parse_error_mentions_location() {
        let e = load_game("{\"horizon\": 2,\n \"states\": 3}").unwrap_err();
        match e {
            Error::Parse(msg) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn time_range_checked() {
        let g = load_game(MINIMAL).unwrap();
        let xi = Dist::dirac(1, 0);
        assert!(g.transition_dist(0, 0, &xi, 0).is_err());
        assert!(g.transition_dist(2, 0, &xi, 0).is_err());
        assert!(g.transition_dist(1, 0, &xi, 1).is_ok());
    }

    #[test]
    fn declared_c0_too_small_rejected() {
        let text = MINIMAL.replace("\"terminal\": {\"kind\": \"zero\"}", "\"terminal\": {\"kind\": \"zero\"}, \"moduli\": {\"c0\": 0.5}");
        assert!(matches!(load_game(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn table_affine_vertex() {
        let text = r#"{
            "horizon": 2,
            "states": {"labels": ["0", "1"]},
            "actions": {"labels": ["s"]},
            "initial": [0.5, 0.5],
            "transition": {"kind": "table_affine",
                "p0": [[[[1.0, 0.0]], [[0.0, 1.0]]]],
                "p1": [[[[0.0, 1.0]], [[1.0, 0.0]]]],
                "weight": {"c0": 0.2, "coef": [0.3, 0.6]}},
            "cost": {"kind": "zero"},
            "terminal": {"kind": "affine", "base": [1.0, 2.0], "mean_field": [[0.0, 3.0], [1.0, 0.0]]}
        }"#;
        let g = load_game(text).unwrap();
        let d = g.transition_dist(1, 0, &Dist::dirac(2, 1), 0).unwrap();
        assert!((d.get(0) - 0.2).abs() < 1e-12 && (d.get(1) - 0.8).abs() < 1e-12);
        let v = g.terminal_vector(&Dist::dirac(2, 1)).unwrap();
        assert_eq!(v, vec![4.0, 2.0]);
        assert!((g.constants.eta_xi_k - 2.0 * 0.3 * 1.0).abs() < 1e-12);
    }
}

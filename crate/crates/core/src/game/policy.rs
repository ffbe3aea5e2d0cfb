//! Symmetric Markovian policy families `pi_t(x, xi)`.

use std::fmt;
use std::sync::Arc;

use super::config::PolicyConfig;
use crate::error::{invalid, Error, Result};
use crate::modulus::Modulus;
use crate::spaces::{bl_dual_constant, Dist, FiniteMetricSpace};

pub type PolicyFn = dyn Fn(usize, usize, &Dist) -> Dist + Send + Sync;

/// Host-code policy; arguments are `(t, x, xi)` with `t` starting at 1.
#[derive(Clone)]
pub struct PolicyPlugin {
    pub name: String,
    pub f: Arc<PolicyFn>,
}

impl fmt::Debug for PolicyPlugin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolicyPlugin({})", self.name)
    }
}

impl PartialEq for PolicyPlugin {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    ObliviousTable {
        table: Vec<Vec<Dist>>,
    },
    LogitMeanfield {
        theta: f64,
        features: Vec<Vec<f64>>,
        rho: f64,
        interaction: Vec<Vec<f64>>,
    },
    Threshold {
        state: usize,
        cutoff: f64,
        below: Vec<Vec<Dist>>,
        above: Vec<Vec<Dist>>,
    },
    Plugin(PolicyPlugin),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Symmetric-continuity modulus in use (declared or derived).
    pub modulus: Modulus,
    pub declared: Option<Modulus>,
    pub horizon: usize,
    pub n_states: usize,
    pub n_actions: usize,
}

fn dist_table(rows: &[Vec<Vec<f64>>], what: &str) -> Result<Vec<Vec<Dist>>> {
    rows.iter()
        .enumerate()
        .map(|(t, r)| {
            r.iter()
                .enumerate()
                .map(|(x, w)| {
                    Dist::new(w.clone()).map_err(|e| {
                        Error::Validation(format!("{what}[t={}][x={x}]: {e}", t + 1))
                    })
                })
                .collect()
        })
        .collect()
}

fn check_table(t: &[Vec<Dist>], horizon: usize, m: usize, k: usize, what: &str) -> Result<()> {
    if t.len() != horizon - 1 {
        return Err(Error::Validation(format!("{what} needs {} time rows, got {}", horizon - 1, t.len())));
    }
    for (i, r) in t.iter().enumerate() {
        if r.len() != m || r.iter().any(|d| d.len() != k) {
            return Err(Error::Validation(format!("{what}[t={}] must be {m} distributions over {k} actions", i + 1)));
        }
    }
    Ok(())
}

impl PolicySpec {
    pub fn oblivious(table: Vec<Vec<Dist>>, horizon: usize, n_states: usize, n_actions: usize) -> Result<Self> {
        check_table(&table, horizon, n_states, n_actions, "policy table")?;
        Ok(Self {
            kind: PolicyKind::ObliviousTable { table },
            modulus: Modulus::Zero,
            declared: None,
            horizon,
            n_states,
            n_actions,
        })
    }

    /// Same action law at every state and step.
    pub fn constant(lambda: Dist, horizon: usize, n_states: usize) -> Result<Self> {
        let k = lambda.len();
        Self::oblivious(vec![vec![lambda; n_states]; horizon - 1], horizon, n_states, k)
    }

    pub fn logit(
        theta: f64,
        features: Vec<Vec<f64>>,
        rho: f64,
        interaction: Vec<Vec<f64>>,
        states: &FiniteMetricSpace,
        horizon: usize,
        n_actions: usize,
    ) -> Result<Self> {
        let m = states.len();
        if features.len() != m || features.iter().any(|r| r.len() != n_actions) {
            return Err(Error::Validation(format!("logit features must be {m}x{n_actions}")));
        }
        if interaction.len() != n_actions || interaction.iter().any(|r| r.len() != m) {
            return Err(Error::Validation(format!("logit interaction must be {n_actions}x{m}")));
        }
        if !theta.is_finite() || !rho.is_finite() || features.iter().flatten().chain(interaction.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("logit parameters must be finite".into()));
        }
        let modulus = logit_modulus(rho, &interaction, states);
        Ok(Self {
            kind: PolicyKind::LogitMeanfield { theta, features, rho, interaction },
            modulus,
            declared: None,
            horizon,
            n_states: m,
            n_actions,
        })
    }

    pub fn threshold(
        state: usize,
        cutoff: f64,
        below: Vec<Vec<Dist>>,
        above: Vec<Vec<Dist>>,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self> {
        if state >= n_states {
            return Err(Error::Validation(format!("threshold state {state} out of range")));
        }
        check_table(&below, horizon, n_states, n_actions, "threshold below")?;
        check_table(&above, horizon, n_states, n_actions, "threshold above")?;
        Ok(Self {
            kind: PolicyKind::Threshold { state, cutoff, below, above },
            modulus: Modulus::Infinite,
            declared: None,
            horizon,
            n_states,
            n_actions,
        })
    }

    pub fn plugin(
        name: &str,
        f: Arc<PolicyFn>,
        modulus: Modulus,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
    ) -> Self {
        Self {
            kind: PolicyKind::Plugin(PolicyPlugin { name: name.to_string(), f }),
            modulus: modulus.clone(),
            declared: Some(modulus),
            horizon,
            n_states,
            n_actions,
        }
    }

    pub fn with_declared_modulus(mut self, m: Modulus) -> Result<Self> {
        m.check()?;
        self.modulus = m.clone();
        self.declared = Some(m);
        Ok(self)
    }

    pub fn from_config(cfg: &PolicyConfig, states: &FiniteMetricSpace, horizon: usize, n_actions: usize) -> Result<Self> {
        let m = states.len();
        let (p, declared) = match cfg {
            PolicyConfig::ObliviousTable { table, modulus } => (
                Self::oblivious(dist_table(table, "policy.table")?, horizon, m, n_actions)?,
                modulus,
            ),
            PolicyConfig::LogitMeanfield { theta, features, rho, interaction, modulus } => (
                Self::logit(*theta, features.clone(), *rho, interaction.clone(), states, horizon, n_actions)?,
                modulus,
            ),
            PolicyConfig::Threshold { state, cutoff, below, above, modulus } => (
                Self::threshold(
                    *state,
                    *cutoff,
                    dist_table(below, "policy.below")?,
                    dist_table(above, "policy.above")?,
                    horizon,
                    m,
                    n_actions,
                )?,
                modulus,
            ),
        };
        match declared {
            Some(d) => p.with_declared_modulus(d.clone()),
            None => Ok(p),
        }
    }

    pub fn to_config(&self) -> Result<PolicyConfig> {
        let raw = |t: &Vec<Vec<Dist>>| -> Vec<Vec<Vec<f64>>> {
            t.iter().map(|r| r.iter().map(|d| d.weights().to_vec()).collect()).collect()
        };
        let modulus = self.declared.clone();
        Ok(match &self.kind {
            PolicyKind::ObliviousTable { table } => PolicyConfig::ObliviousTable { table: raw(table), modulus },
            PolicyKind::LogitMeanfield { theta, features, rho, interaction } => PolicyConfig::LogitMeanfield {
                theta: *theta,
                features: features.clone(),
                rho: *rho,
                interaction: interaction.clone(),
                modulus,
            },
            PolicyKind::Threshold { state, cutoff, below, above } => PolicyConfig::Threshold {
                state: *state,
                cutoff: *cutoff,
                below: raw(below),
                above: raw(above),
                modulus,
            },
            PolicyKind::Plugin(p) => {
                return invalid(format!("plugin policy '{}' has no configuration form", p.name))
            }
        })
    }

    pub fn is_oblivious(&self) -> bool {
        matches!(self.kind, PolicyKind::ObliviousTable { .. })
    }

    /// `pi_t(x, xi)` with `t` starting at 1.
    pub fn policy_dist(&self, t: usize, x: usize, xi: &Dist) -> Result<Dist> {
        if t == 0 || t >= self.horizon {
            return invalid(format!("time {t} outside 1..{}", self.horizon - 1));
        }
        if x >= self.n_states || xi.len() != self.n_states {
            return invalid("state index or environment dimension out of range");
        }
        if let PolicyKind::Plugin(p) = &self.kind {
            let d = (p.f)(t, x, xi);
            if d.len() != self.n_actions {
                return Err(Error::Validation(format!("plugin policy '{}' returned wrong length", p.name)));
            }
            return Ok(d);
        }
        let mut out = vec![0.0; self.n_actions];
        self.policy_into(t - 1, x, xi.weights(), &mut out);
        Ok(Dist::from_raw(out))
    }

    /// Zero-based step, raw slices; the hot-path form.
    pub(crate) fn policy_into(&self, step: usize, x: usize, xi: &[f64], out: &mut [f64]) {
        match &self.kind {
            PolicyKind::ObliviousTable { table } => out.copy_from_slice(table[step][x].weights()),
            PolicyKind::Threshold { state, cutoff, below, above } => {
                let src = if xi[*state] <= *cutoff { below } else { above };
                out.copy_from_slice(src[step][x].weights());
            }
            PolicyKind::LogitMeanfield { theta, features, rho, interaction } => {
                for a in 0..out.len() {
                    let inter: f64 = interaction[a].iter().zip(xi).map(|(m, p)| m * p).sum();
                    out[a] = theta * features[x][a] + rho * inter;
                }
                let mx = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut s = 0.0;
                for v in out.iter_mut() {
                    *v = (*v - mx).exp();
                    s += *v;
                }
                for v in out.iter_mut() {
                    *v /= s;
                }
            }
            PolicyKind::Plugin(p) => {
                let d = (p.f)(step + 1, x, &Dist::from_raw(xi.to_vec()));
                out.copy_from_slice(d.weights());
            }
        }
    }

    /// Relabel states and actions: new index `i` is old index `perm[i]`.
    pub fn permuted(&self, state_perm: &[usize], action_perm: &[usize], states: &FiniteMetricSpace) -> Result<Self> {
        let inv_s = inverse(state_perm);
        let mut out = match &self.kind {
            PolicyKind::ObliviousTable { table } => {
                let t = table
                    .iter()
                    .map(|r| state_perm.iter().map(|&x| r[x].permuted(action_perm)).collect())
                    .collect();
                Self::oblivious(t, self.horizon, self.n_states, self.n_actions)?
            }
            PolicyKind::LogitMeanfield { theta, features, rho, interaction } => {
                let f = state_perm.iter().map(|&x| action_perm.iter().map(|&a| features[x][a]).collect()).collect();
                let m = action_perm.iter().map(|&a| state_perm.iter().map(|&y| interaction[a][y]).collect()).collect();
                Self::logit(*theta, f, *rho, m, states, self.horizon, self.n_actions)?
            }
            PolicyKind::Threshold { state, cutoff, below, above } => {
                let p = |t: &Vec<Vec<Dist>>| -> Vec<Vec<Dist>> {
                    t.iter().map(|r| state_perm.iter().map(|&x| r[x].permuted(action_perm)).collect()).collect()
                };
                Self::threshold(inv_s[*state], *cutoff, p(below), p(above), self.horizon, self.n_states, self.n_actions)?
            }
            PolicyKind::Plugin(p) => return invalid(format!("cannot relabel plugin policy '{}'", p.name)),
        };
        if let Some(d) = &self.declared {
            out = out.with_declared_modulus(d.clone())?;
        }
        Ok(out)
    }
}

pub(crate) fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Softmax moves at most half the oscillation of the logit change in TV,
/// and BL is dominated by TV.
fn logit_modulus(rho: f64, interaction: &[Vec<f64>], states: &FiniteMetricSpace) -> Modulus {
    let mut k: f64 = 0.0;
    for a in 0..interaction.len() {
        for b in 0..a {
            let diff: Vec<f64> = interaction[a].iter().zip(&interaction[b]).map(|(u, v)| u - v).collect();
            k = k.max(bl_dual_constant(states, &diff));
        }
    }
    Modulus::linear(rho.abs() * k)
}

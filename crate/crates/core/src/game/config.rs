//! Serde schema of the JSON game configuration.

use serde::{Deserialize, Serialize};

use crate::modulus::Modulus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub horizon: usize,
    pub states: SpaceConfig,
    pub actions: SpaceConfig,
    pub initial: Vec<f64>,
    pub transition: TransitionConfig,
    pub cost: CostConfig,
    pub terminal: TerminalConfig,
    #[serde(default)]
    pub evaluator: EvaluatorKind,
    #[serde(default)]
    pub moduli: ModuliConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub labels: Vec<String>,
    /// Defaults to the discrete metric with unit distances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

/// Indexed `[t][x][a]` with `t = 1..T-1`.
pub type KernelTable = Vec<Vec<Vec<Vec<f64>>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransitionConfig {
    XiIndependent { table: KernelTable },
    TableAffine { p0: KernelTable, p1: KernelTable, weight: AffineWeight },
}

/// `w(xi) = clamp(c0 + sum_y coef[y] xi(y), 0, 1)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineWeight {
    pub c0: f64,
    pub coef: Vec<f64>,
}

impl AffineWeight {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        let w = self.c0 + self.coef.iter().zip(xi).map(|(c, p)| c * p).sum::<f64>();
        w.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    Zero,
    /// `c(t,x,xi,a) = base[t][x][a] + sum_y mean_field[t][x][a][y] xi(y)`
    #[serde(alias = "table")]
    Affine {
        base: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_field: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalConfig {
    Zero,
    /// `V(x, xi) = base[x] + sum_y mean_field[x][y] xi(y)`
    Affine {
        base: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_field: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorKind {
    #[default]
    ExpectedSum,
    Avar { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModuliConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Modulus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Modulus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iota: Option<Modulus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Modulus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// `table[t][x]` is a distribution over actions.
    ObliviousTable {
        table: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<Modulus>,
    },
    /// `pi(x, xi)(a) ~ exp(theta phi[x][a] + rho sum_y interaction[a][y] xi(y))`
    LogitMeanfield {
        theta: f64,
        features: Vec<Vec<f64>>,
        rho: f64,
        interaction: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<Modulus>,
    },
    /// `below[t][x]` when `xi(state) <= cutoff`, else `above[t][x]`.
    Threshold {
        state: usize,
        cutoff: f64,
        below: Vec<Vec<Vec<f64>>>,
        above: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<Modulus>,
    },
}

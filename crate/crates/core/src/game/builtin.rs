//! Built-in games addressable by name.

use super::config::*;
use super::GameSpec;
use crate::error::{invalid, Result};

pub const BUILTIN_NAMES: &[&str] = &["no_one_get_it", "crowd", "commute", "idle"];

pub fn builtin(name: &str) -> Result<GameSpec> {
    GameSpec::from_config(&builtin_config(name)?)
}

pub fn builtin_config(name: &str) -> Result<GameConfig> {
    match name {
        "no_one_get_it" => Ok(no_one_get_it()),
        "crowd" => Ok(crowd()),
        "commute" => Ok(commute()),
        "idle" => Ok(idle()),
        other => invalid(format!("unknown built-in game '{other}' (known: {})", BUILTIN_NAMES.join(", "))),
    }
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn discrete(xs: &[&str]) -> SpaceConfig {
    SpaceConfig { labels: labels(xs), metric: None }
}

/// Two levels, start on the ground; going up is irreversible. Being up at
/// t = 2 earns 1, and at the end each player pays 10 times the share of the
/// population on its own level. The attached policy is the discontinuous
/// threshold profile under which no player regrets anything.
fn no_one_get_it() -> GameConfig {
    let ground = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let upper = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
    let step = vec![ground, upper];
    let stay = vec![1.0, 0.0];
    let up = vec![0.0, 1.0];
    let half = vec![0.5, 0.5];
    GameConfig {
        name: Some("no_one_get_it".into()),
        horizon: 3,
        states: discrete(&["0", "1"]),
        actions: discrete(&["0", "1"]),
        initial: vec![1.0, 0.0],
        transition: TransitionConfig::XiIndependent { table: vec![step.clone(), step] },
        cost: CostConfig::Affine {
            base: vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![-1.0, -1.0]]],
            mean_field: None,
        },
        terminal: TerminalConfig::Affine {
            base: vec![0.0, 0.0],
            mean_field: Some(vec![vec![10.0, 0.0], vec![0.0, 10.0]]),
        },
        evaluator: EvaluatorKind::ExpectedSum,
        moduli: ModuliConfig::default(),
        policy: Some(PolicyConfig::Threshold {
            state: 1,
            cutoff: 0.0,
            below: vec![vec![stay.clone(), stay.clone()], vec![half, stay.clone()]],
            above: vec![vec![stay.clone(), stay.clone()], vec![up, stay]],
            modulus: None,
        }),
    }
}

/// Two sites with congestion costs that grow with the share of the
/// population present; moving is cheap but noisy and gets harder when the
/// right site is crowded.
fn crowd() -> GameConfig {
    let t = 4;
    let pref = [0.0, 0.8];
    let gamma = 0.6;
    let move_cost = 0.05;
    let p0 = vec![
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        vec![vec![0.1, 0.9], vec![0.9, 0.1]],
    ];
    let p1 = vec![
        vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        vec![vec![0.1, 0.9], vec![0.9, 0.1]],
    ];
    let base: Vec<Vec<Vec<f64>>> = (0..t - 1)
        .map(|_| (0..2).map(|x| vec![pref[x], pref[x] + move_cost]).collect())
        .collect();
    let mean_field: Vec<Vec<Vec<Vec<f64>>>> = (0..t - 1)
        .map(|_| {
            (0..2)
                .map(|x| (0..2).map(|_| (0..2).map(|y| if y == x { gamma } else { 0.0 }).collect()).collect())
                .collect()
        })
        .collect();
    GameConfig {
        name: Some("crowd".into()),
        horizon: t,
        states: discrete(&["left", "right"]),
        actions: discrete(&["stay", "move"]),
        initial: vec![0.5, 0.5],
        transition: TransitionConfig::TableAffine {
            p0: vec![p0.clone(); t - 1],
            p1: vec![p1; t - 1],
            weight: AffineWeight { c0: 0.0, coef: vec![0.0, 0.5] },
        },
        cost: CostConfig::Affine { base, mean_field: Some(mean_field) },
        terminal: TerminalConfig::Affine {
            base: vec![0.0, 0.4],
            mean_field: Some(vec![vec![gamma, 0.0], vec![0.0, gamma]]),
        },
        evaluator: EvaluatorKind::ExpectedSum,
        moduli: ModuliConfig::default(),
        policy: Some(PolicyConfig::LogitMeanfield {
            theta: 1.0,
            features: vec![vec![0.5, -0.5], vec![-0.2, 0.2]],
            rho: 1.5,
            interaction: vec![vec![0.0, 0.0], vec![1.0, -1.0]],
            modulus: None,
        }),
    }
}

/// Three stops on a line; the environment does not enter costs or moves.
fn commute() -> GameConfig {
    let t = 4;
    // actions: left, stay, right; moves succeed with prob 0.8
    let row = |x: usize, a: usize| -> Vec<f64> {
        let target = match a {
            0 => x.saturating_sub(1),
            1 => x,
            _ => (x + 1).min(2),
        };
        let mut w = vec![0.0; 3];
        w[target] += 0.8;
        w[x] += 0.2;
        w
    };
    let step: Vec<Vec<Vec<f64>>> = (0..3).map(|x| (0..3).map(|a| row(x, a)).collect()).collect();
    let site = [0.9, 0.35, 0.6];
    let act = [0.07, 0.0, 0.11];
    let base: Vec<Vec<Vec<f64>>> = (0..t - 1)
        .map(|s| {
            (0..3)
                .map(|x| (0..3).map(|a| site[x] * (1.0 + 0.1 * s as f64) + act[a]).collect())
                .collect()
        })
        .collect();
    GameConfig {
        name: Some("commute".into()),
        horizon: t,
        states: SpaceConfig {
            labels: labels(&["home", "center", "park"]),
            metric: Some(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]),
        },
        actions: SpaceConfig {
            labels: labels(&["left", "stay", "right"]),
            metric: Some(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]),
        },
        initial: vec![0.6, 0.1, 0.3],
        transition: TransitionConfig::XiIndependent { table: vec![step; t - 1] },
        cost: CostConfig::Affine { base, mean_field: None },
        terminal: TerminalConfig::Affine { base: vec![1.3, 0.2, 0.7], mean_field: None },
        evaluator: EvaluatorKind::ExpectedSum,
        moduli: ModuliConfig::default(),
        policy: None,
    }
}

/// Nothing costs anything.
fn idle() -> GameConfig {
    let step = vec![vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![0.5, 0.5]]];
    GameConfig {
        name: Some("idle".into()),
        horizon: 3,
        states: discrete(&["a", "b"]),
        actions: discrete(&["x", "y"]),
        initial: vec![0.3, 0.7],
        transition: TransitionConfig::XiIndependent { table: vec![step.clone(), step] },
        cost: CostConfig::Zero,
        terminal: TerminalConfig::Zero,
        evaluator: EvaluatorKind::ExpectedSum,
        moduli: ModuliConfig::default(),
        policy: None,
    }
}

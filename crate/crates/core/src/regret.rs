//! Mean-field regrets of flows, and a closed-form AVaR cross-check.

use crate::error::{invalid, Result};
use crate::game::GameSpec;
use crate::meanfield::{
    ascending, flow_terminal_values, induced_policy, mf_bellman, mf_policy_values, policy_row, require_mff,
    Evaluator, MeanFieldFlow,
};
use crate::nplayer::{clamp_regret, RegretMode, RegretSet};
use crate::spaces::Dist;

/// `sum_{x,a} psi(x,a) [c + rho(v; P(x, xi_psi, a))]`, no kernel induction.
fn joint_score(game: &GameSpec, eval: &Evaluator, step: usize, flow: &MeanFieldFlow, xi: &[f64], v: &[f64]) -> f64 {
    let psi = &flow.joints[step];
    let order = ascending(v);
    let mut buf = vec![0.0; game.n_states()];
    let mut s = 0.0;
    for x in 0..game.n_states() {
        for (a, &w) in psi.row(x).iter().enumerate() {
            if w > 0.0 {
                s += w * eval.action_value(game, step, x, xi, a, v, &order, &mut buf);
            }
        }
    }
    s
}

/// All three mean-field regrets of a flow.
pub fn mf_regret_set(game: &GameSpec, eval: &Evaluator, flow: &MeanFieldFlow) -> Result<RegretSet> {
    flow.check_shape(game)?;
    require_mff(game, flow)?;
    let marg = flow.marginals();
    let vm = flow_terminal_values(game, flow)?;
    let (star, _) = mf_bellman(game, eval, &marg, &vm)?;
    let pol = induced_policy(game, flow)?;
    let vals = mf_policy_values(game, eval, &pol, &marg, &vm)?;
    let mut stepwise = 0.0;
    let mut actual = 0.0;
    let mut weight = 1.0;
    for step in 0..game.horizon - 1 {
        weight *= eval.c_bar;
        let xi = marg[step].weights();
        let lhs = joint_score(game, eval, step, flow, xi, &star[step + 1]);
        stepwise += weight * (lhs - marg[step].expect(&star[step]));
        let gap: Vec<f64> = vals[step].iter().zip(&star[step]).map(|(a, b)| a - b).collect();
        actual += weight * marg[step].expect(&gap);
    }
    let end = eval.initial(game, &vals[0]) - eval.initial(game, &star[0]);
    Ok(RegretSet {
        stepwise: clamp_regret(stepwise, "stepwise mean field regret")?,
        end: clamp_regret(end, "end mean field regret")?,
        actual: clamp_regret(actual, "actual mean field regret")?,
    })
}

pub fn mf_regret(game: &GameSpec, eval: &Evaluator, flow: &MeanFieldFlow, mode: RegretMode) -> Result<f64> {
    Ok(mf_regret_set(game, eval, flow)?.get(mode))
}

/// Stepwise regret of a flow under an explicit policy table instead of the
/// induced kernel (used to check independence of the version choice).
pub fn mf_regret_with_version(
    game: &GameSpec,
    eval: &Evaluator,
    flow: &MeanFieldFlow,
    kernels: &[Vec<Dist>],
) -> Result<f64> {
    require_mff(game, flow)?;
    let marg = flow.marginals();
    let vm = flow_terminal_values(game, flow)?;
    let (star, _) = mf_bellman(game, eval, &marg, &vm)?;
    let pol = crate::game::PolicySpec::oblivious(kernels.to_vec(), game.horizon, game.n_states(), game.n_actions())?;
    let k = game.n_actions();
    let mut total = 0.0;
    let mut weight = 1.0;
    for step in 0..game.horizon - 1 {
        weight *= eval.c_bar;
        let xi = marg[step].weights();
        let v = &star[step + 1];
        let order = ascending(v);
        let mut buf = vec![0.0; game.n_states()];
        let mut lhs = 0.0;
        for x in 0..game.n_states() {
            if xi[x] == 0.0 {
                continue;
            }
            let lam = policy_row(&pol, step, x, xi, k);
            let mut g = 0.0;
            for a in 0..k {
                if lam[a] > 0.0 {
                    g += lam[a] * eval.action_value(game, step, x, xi, a, v, &order, &mut buf);
                }
            }
            lhs += xi[x] * g;
        }
        total += weight * (lhs - marg[step].expect(&star[step]));
    }
    clamp_regret(total, "stepwise mean field regret")
}

/// `min_q { q + (1/kappa) sum p (v - q)_+ }` over the atoms of `v`.
fn avar_breakpoints(v: &[f64], p: &[f64], kappa: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &q) in v.iter().enumerate() {
        if p[i] <= 0.0 {
            continue;
        }
        let tail: f64 = v.iter().zip(p).map(|(y, w)| w * (y - q).max(0.0)).sum();
        best = best.min(q + tail / kappa);
    }
    best
}

/// Stepwise regret for the AVaR evaluator, evaluated directly against the
/// joints with its own backward pass and an atom-by-atom inner minimum.
pub fn mf_regret_avar_direct(game: &GameSpec, flow: &MeanFieldFlow, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return invalid(format!("kappa must lie in (0, 1], got {kappa}"));
    }
    flow.check_shape(game)?;
    require_mff(game, flow)?;
    let (m, k, h) = (game.n_states(), game.n_actions(), game.horizon);
    let marg = flow.marginals();
    let vm = flow_terminal_values(game, flow)?;
    let mut star = vec![Vec::new(); h];
    star[h - 1] = vm;
    let mut buf = vec![0.0; m];
    // score[step][x][a] = c + AVaR(v*_{t+1}; P)
    let mut score = vec![Vec::new(); h - 1];
    for step in (0..h - 1).rev() {
        let xi = marg[step].weights();
        let mut rows = Vec::with_capacity(m);
        for x in 0..m {
            let row: Vec<f64> = (0..k)
                .map(|a| {
                    game.transition_into(step, x, xi, a, &mut buf);
                    game.cost_at(step, x, xi, a) + avar_breakpoints(&star[step + 1], &buf, kappa)
                })
                .collect();
            rows.push(row);
        }
        star[step] = rows.iter().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
        score[step] = rows;
    }
    let mut total = 0.0;
    let mut weight = 1.0;
    for step in 0..h - 1 {
        weight /= kappa;
        let psi = &flow.joints[step];
        let mut s = 0.0;
        for x in 0..m {
            for a in 0..k {
                s += psi.get(x, a) * (score[step][x][a] - star[step][x]);
            }
        }
        total += weight * s;
    }
    clamp_regret(total, "stepwise mean field regret")
}

/// Convenience for the game's configured evaluator kind.
pub fn mf_regret_default(game: &GameSpec, flow: &MeanFieldFlow) -> Result<f64> {
    let eval = Evaluator::for_game(game);
    mf_regret(game, &eval, flow, RegretMode::Stepwise)
}

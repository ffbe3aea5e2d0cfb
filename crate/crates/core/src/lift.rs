//! Lifting an N-player profile to a mean field flow, and the error budgets
//! that bound the N-player / mean-field gap.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::{GameSpec, PolicySpec};
use crate::meanfield::{policy_row, push_forward, Evaluator, MeanFieldFlow};
use crate::modulus::{inf_over_l, Modulus, L_MAX};
use crate::nplayer::PolicyProfile;
use crate::spaces::{concentration_bound, JointDist, DEFAULT_J_MAX};

/// Distinct policies of a profile with their multiplicities.
fn groups(profile: &PolicyProfile) -> Vec<(Arc<PolicySpec>, usize)> {
    let mut out: Vec<(Arc<PolicySpec>, usize)> = Vec::new();
    for p in &profile.policies {
        match out.iter_mut().find(|(q, _)| Arc::ptr_eq(q, p) || **q == **p) {
            Some(slot) => slot.1 += 1,
            None => out.push((p.clone(), 1)),
        }
    }
    out
}

/// Per-player state laws driven by the averaged environment, averaged into
/// state-action joints.
pub fn lift_flow(game: &GameSpec, profile: &PolicyProfile) -> Result<MeanFieldFlow> {
    let (m, k) = (game.n_states(), game.n_actions());
    let p0 = &profile.policies[0];
    if p0.horizon != game.horizon || p0.n_states != m || p0.n_actions != k {
        return invalid("profile does not match the game");
    }
    let groups = groups(profile);
    let n = profile.len() as f64;
    let mut mus: Vec<Vec<f64>> = vec![game.initial.weights().to_vec(); groups.len()];
    let mut xi = game.initial.weights().to_vec();
    let mut joints = Vec::with_capacity(game.horizon - 1);
    for step in 0..game.horizon - 1 {
        let mut w = vec![0.0; m * k];
        let mut next_xi = vec![0.0; m];
        for ((p, count), mu) in groups.iter().zip(mus.iter_mut()) {
            let share = *count as f64 / n;
            let kernel: Vec<Vec<f64>> = (0..m).map(|x| policy_row(p, step, x, &xi, k)).collect();
            for x in 0..m {
                for a in 0..k {
                    w[x * k + a] += share * mu[x] * kernel[x][a];
                }
            }
            *mu = push_forward(game, step, mu, &xi, &kernel);
            for (s, v) in next_xi.iter_mut().zip(mu.iter()) {
                *s += share * v;
            }
        }
        joints.push(JointDist::from_raw(m, k, w));
        xi = next_xi;
    }
    MeanFieldFlow::new(joints)
}

/// Largest symmetric-continuity modulus across a profile.
pub fn profile_theta(profile: &PolicyProfile) -> Modulus {
    groups(profile).iter().fold(Modulus::Zero, |acc, (p, _)| Modulus::max_linear(&acc, &p.modulus))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub n: usize,
    /// concentration term over the states
    pub r: f64,
    pub r_j: usize,
    pub r_n_j: u64,
    /// same term over states x actions with the sum metric
    pub r_product: f64,
    /// `e_1 .. e_T`
    pub e: Vec<f64>,
    /// minimising `L` for `e_2 .. e_T` (infinite when the infimum is a limit)
    pub l_choice: Vec<f64>,
    pub big_e: f64,
    /// `e_1 .. e_T` without policy feedback
    pub e_bold: Vec<f64>,
    pub e_script: f64,
    /// the first budget with theta = 0 and `e` replaced by `e_bold`
    pub big_e_constr: f64,
    /// empirical state-action gap bound for `t = 1 .. T-1`
    pub gap_bound: Vec<f64>,
    pub theta: Modulus,
    pub j_max: usize,
    pub l_max: f64,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Budgets for `n` players; `theta` overrides the game's policy modulus.
pub fn error_budget(game: &GameSpec, eval: &Evaluator, n: usize, theta: Option<&Modulus>) -> Result<ErrorBudget> {
    let h = game.horizon;
    let mods = &game.moduli;
    let theta = theta.cloned().unwrap_or_else(|| mods.theta.clone());
    let eta = &mods.eta;
    let iota = &mods.iota;
    let zeta = &eval.zeta;
    let cb = eval.c_bar;
    let v_sup = game.terminal_sup();
    let c = |r: usize| eval.growth(r, v_sup);

    let conc = concentration_bound(&game.states, n, DEFAULT_J_MAX)?;
    let r = conc.value;
    let product = game.states.product(&game.actions);
    let r_product = concentration_bound(&product, n, DEFAULT_J_MAX)?.value;
    let nf = n as f64;

    let mut e = vec![r];
    let mut l_choice = Vec::new();
    for t in 2..=h {
        let a: f64 = e.iter().map(|v| theta.eval(*v)).sum();
        let b: f64 = e.iter().map(|v| eta.eval(*v)).sum();
        let ch = inf_over_l(a, b, eta);
        l_choice.push(ch.l);
        e.push(finite_or_inf(2.0 * ch.value + t as f64 / nf + r));
    }
    let mut e_bold = vec![r];
    for t in 2..=h {
        let b: f64 = e_bold.iter().map(|v| eta.eval(*v)).sum();
        e_bold.push(finite_or_inf(2.0 * b + t as f64 / nf + r));
    }

    let big = |e: &[f64], theta: &Modulus| -> f64 {
        let e_t_final = e[h - 1];
        let mut first = 0.0;
        for t in 1..h {
            let mut inner = 0.0;
            for rr in t..h {
                inner += cb.powi((rr - t) as i32) * c(h - rr) * zeta.eval(e[t - 1]);
            }
            inner += cb.powi((h - t) as i32) * iota.eval(e_t_final);
            first += (h + 1 - t) as f64 * inner;
        }
        let mut total = (1.0 + cb) * first + cb * iota.eval(e_t_final);
        for t in 1..h {
            let et = e[t - 1];
            total += c(h - t) * (zeta.eval(theta.eval(et)) + zeta.eval(et) + et);
        }
        finite_or_inf(total)
    };
    let big_e = big(&e, &theta);
    let big_e_constr = big(&e_bold, &Modulus::Zero);

    let mut s = 0.0;
    for rr in 1..h {
        s += cb.powi(rr as i32) * c(h - rr) * zeta.eval(e_bold[rr - 1]);
    }
    s += cb.powi((h - 1) as i32) * iota.eval(e_bold[h - 1]);
    let e_script = finite_or_inf((h + 1) as f64 * s);

    let gap_bound = (0..h - 1)
        .map(|i| finite_or_inf(2.0 * theta.eval(e[i]) + 1.5 * e[i] + r_product - r))
        .collect();

    Ok(ErrorBudget {
        n,
        r,
        r_j: conc.j,
        r_n_j: conc.n_j,
        r_product,
        e,
        l_choice,
        big_e,
        e_bold,
        e_script,
        big_e_constr,
        gap_bound,
        theta,
        j_max: DEFAULT_J_MAX,
        l_max: L_MAX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin::builtin;
    use crate::meanfield::{check_mff, marginal_flow_of};
    use crate::spaces::Dist;

    #[test]
    fn homogeneous_oblivious_lift_matches_policy_flow() {
        let g = builtin("commute").unwrap();
        let p = PolicySpec::constant(Dist::uniform(3), g.horizon, 3).unwrap();
        let f1 = marginal_flow_of(&g, &p);
        for n in [1, 3, 7] {
            let f = lift_flow(&g, &PolicyProfile::homogeneous(p.clone(), n).unwrap()).unwrap();
            assert_eq!(f, f1);
        }
    }

    #[test]
    fn no_one_get_it_lift() {
        let g = builtin("no_one_get_it").unwrap();
        let prof = PolicyProfile::homogeneous(g.policy.clone().unwrap(), 4).unwrap();
        let f = lift_flow(&g, &prof).unwrap();
        assert_eq!(f.joints[0].weights(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.joints[1].weights(), &[0.5, 0.5, 0.0, 0.0]);
        assert!(check_mff(&g, &f).unwrap().max() <= 1e-12);
    }

    #[test]
    fn zero_moduli_collapse() {
        let mut g = builtin("idle").unwrap();
        g.moduli.eta = Modulus::Zero;
        let e = Evaluator::for_game(&g);
        let b = error_budget(&g, &e, 50, Some(&Modulus::Zero)).unwrap();
        for t in 1..=g.horizon {
            assert!((b.e[t - 1] - (if t == 1 { 0.0 } else { t as f64 / 50.0 } + b.r)).abs() < 1e-12);
        }
        assert_eq!(b.e, b.e_bold);
    }

    #[test]
    fn threshold_policy_gives_infinite_budget() {
        let g = builtin("no_one_get_it").unwrap();
        let e = Evaluator::for_game(&g);
        let b = error_budget(&g, &e, 8, None).unwrap();
        assert!(b.big_e.is_infinite());
        assert!(b.e[1].is_infinite());
        assert!(b.big_e_constr.is_finite());
    }
}

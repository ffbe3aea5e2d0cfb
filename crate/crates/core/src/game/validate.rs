//! Sampled audits of the declared or derived moduli and evaluator constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::random::random_dist;
use super::GameSpec;
use crate::error::Result;
use crate::meanfield::{q_push, Evaluator};
use crate::spaces::{bl_distance, tv_distance};

const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    /// worst `lhs - rhs` seen; nonpositive means the inequality held
    pub worst_excess: f64,
    pub samples: usize,
    pub passed: bool,
    /// set when the bound is the infinity marker and nothing was checked
    pub skipped: bool,
}

impl Diagnostic {
    fn new(name: &str) -> Self {
        Self { name: name.into(), worst_excess: f64::NEG_INFINITY, samples: 0, passed: true, skipped: false }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        let ex = lhs - rhs;
        if ex > self.worst_excess {
            self.worst_excess = ex;
        }
        if ex > SLACK {
            self.passed = false;
        }
    }

    fn skip(name: &str) -> Self {
        Self { skipped: true, ..Self::new(name) }
    }
}

fn random_values<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..=scale)).collect()
}

/// Check every continuity and evaluator inequality on `samples` random draws.
pub fn validate_game(game: &GameSpec, samples: usize, seed: u64) -> Result<Vec<Diagnostic>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k, h) = (game.n_states(), game.n_actions(), game.horizon);
    let mods = &game.moduli;
    let eval = Evaluator::for_game(game);
    let mut out = Vec::new();

    let mut eta_xi = Diagnostic::new("eta_environment");
    let mut eta_a = Diagnostic::new("eta_action");
    let mut cost = Diagnostic::new("cost_bound");
    let mut iota = Diagnostic::new("iota_terminal");
    let mut zeta = Diagnostic::new("zeta_score");
    let mut mono = Diagnostic::new("score_monotone");
    let mut contr = Diagnostic::new("score_contraction");
    let mut theta = Diagnostic::new("theta_policy");
    let check_theta = match &game.policy {
        Some(p) => !p.modulus.is_infinite(),
        None => false,
    };

    for _ in 0..samples {
        let t = rng.gen_range(1..h);
        let x = rng.gen_range(0..m);
        let a = rng.gen_range(0..k);
        let b = rng.gen_range(0..k);
        let sparse = rng.gen_bool(0.3);
        let xi = random_dist(&mut rng, m, sparse);
        let xi2 = random_dist(&mut rng, m, sparse);
        let bl_xi = bl_distance(&game.states, &xi, &xi2)?;

        if !mods.eta.is_infinite() {
            let p1 = game.transition_dist(t, x, &xi, a)?;
            let p2 = game.transition_dist(t, x, &xi2, a)?;
            eta_xi.record(tv_distance(&p1, &p2)?, mods.eta.eval(bl_xi));
            if a != b {
                let pb = game.transition_dist(t, x, &xi, b)?;
                eta_a.record(tv_distance(&p1, &pb)?, mods.eta.eval(game.actions.d(a, b)));
            }
        }

        cost.record(game.cost(t, x, &xi, a)?.abs(), mods.c0);

        let v1 = game.terminal_vector(&xi)?;
        let v2 = game.terminal_vector(&xi2)?;
        iota.record((v1[x] - v2[x]).abs(), mods.iota.eval(bl_xi));

        let scale = rng.gen_range(0.1..5.0);
        let v = random_values(&mut rng, m, scale);
        let lam = random_dist(&mut rng, k, sparse);
        let lam2 = random_dist(&mut rng, k, sparse);
        let bl_lam = bl_distance(&game.actions, &lam, &lam2)?;
        let g1 = eval.apply(game, t, x, &xi, &lam, &v)?;
        let g2 = eval.apply(game, t, x, &xi2, &lam2, &v)?;
        let vn = v.iter().fold(0.0f64, |s, y| s.max(y.abs()));
        if !mods.zeta.is_infinite() {
            zeta.record((g1 - g2).abs(), (mods.c0 + mods.c1 * vn) * (mods.zeta.eval(bl_xi) + mods.zeta.eval(bl_lam)));
        }

        let bump: Vec<f64> = v.iter().map(|y| y + rng.gen_range(0.0..1.0)).collect();
        let g_up = eval.apply(game, t, x, &xi, &lam, &bump)?;
        mono.record(g1, g_up);

        let w = random_values(&mut rng, m, scale);
        let gw = eval.apply(game, t, x, &xi, &lam, &w)?;
        let q = q_push(game, t, x, &xi, &lam)?;
        let integral: f64 = (0..m).map(|y| q.get(y) * (v[y] - w[y]).abs()).sum();
        contr.record((g1 - gw).abs(), mods.c_bar * integral);

        if check_theta {
            let p = game.policy.as_ref().expect("checked");
            let l1 = p.policy_dist(t, x, &xi)?;
            let l2 = p.policy_dist(t, x, &xi2)?;
            theta.record(bl_distance(&game.actions, &l1, &l2)?, p.modulus.eval(bl_xi));
        }
    }

    out.push(if mods.eta.is_infinite() { Diagnostic::skip("eta_environment") } else { eta_xi });
    out.push(if mods.eta.is_infinite() || k < 2 { Diagnostic::skip("eta_action") } else { eta_a });
    out.push(cost);
    out.push(iota);
    out.push(if mods.zeta.is_infinite() { Diagnostic::skip("zeta_score") } else { zeta });
    out.push(mono);
    out.push(contr);
    if game.policy.is_some() {
        out.push(if check_theta { theta } else { Diagnostic::skip("theta_policy") });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin::{builtin, BUILTIN_NAMES};

    #[test]
    fn builtins_pass_their_own_audit() {
        for name in BUILTIN_NAMES {
            let g = builtin(name).unwrap();
            for d in validate_game(&g, 300, 11).unwrap() {
                assert!(d.passed, "{name}: {d:?}");
            }
        }
    }

    #[test]
    fn threshold_policy_is_skipped() {
        let g = builtin("no_one_get_it").unwrap();
        let d = validate_game(&g, 10, 1).unwrap();
        let th = d.iter().find(|d| d.name == "theta_policy").unwrap();
        assert!(th.skipped);
    }
}

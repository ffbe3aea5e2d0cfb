//! Independent brute-force references shared by the integration tests.
#![allow(dead_code)]

use mfg_core::game::random::{random_game, random_logit, random_oblivious, RandomGameOpts};
use mfg_core::{Dist, FiniteMetricSpace, GameSpec, MeanFieldFlow, PolicySpec};
use rand::Rng;

/// BL distance by enumerating vertices of `{h : |h_i| <= 1, h_i - h_j <= d_ij}`.
pub fn bl_by_vertices(space: &FiniteMetricSpace, p: &Dist, q: &Dist) -> f64 {
    let m = space.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..m {
        let mut r = vec![0.0; m];
        r[i] = 1.0;
        rows.push((r.clone(), 1.0));
        r[i] = -1.0;
        rows.push((r, 1.0));
        for j in 0..m {
            if i != j {
                let mut r = vec![0.0; m];
                r[i] = 1.0;
                r[j] = -1.0;
                rows.push((r, space.d(i, j)));
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut pick = vec![0usize; m];
    choose(&rows, m, 0, 0, &mut pick, &mut |sel| {
        let a: Vec<Vec<f64>> = sel.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = sel.iter().map(|&i| rows[i].1).collect();
        if let Some(h) = solve(a, b) {
            if rows.iter().all(|(r, c)| dot(r, &h) <= c + 1e-9) {
                let v = 0.5 * (0..m).map(|i| h[i] * (p.get(i) - q.get(i))).sum::<f64>();
                best = best.max(v);
            }
        }
    });
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn choose(rows: &[(Vec<f64>, f64)], m: usize, from: usize, depth: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if depth == m {
        f(pick);
        return;
    }
    for i in from..rows.len() {
        pick[depth] = i;
        choose(rows, m, i + 1, depth + 1, pick, f);
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn empirical(states: &[usize], m: usize) -> Dist {
    let mut w = vec![0.0; m];
    for &x in states {
        w[x] += 1.0 / states.len() as f64;
    }
    Dist::renormalized(w).unwrap()
}

/// Expected total cost of player 0 in a two-player, one-step game when it
/// plays `choice[x0 * m + x1]` and player 1 follows `other`.
fn two_player_cost(game: &GameSpec, other: &PolicySpec, choice: &dyn Fn(usize, usize) -> Vec<f64>) -> f64 {
    let m = game.n_states();
    let k = game.n_actions();
    let init = &game.initial;
    let mut total = 0.0;
    for x0 in 0..m {
        for x1 in 0..m {
            let w = init.get(x0) * init.get(x1);
            if w == 0.0 {
                continue;
            }
            let emp = empirical(&[x0, x1], m);
            let lam0 = choice(x0, x1);
            let lam1 = other.policy_dist(1, x1, &emp).unwrap();
            for a0 in 0..k {
                for a1 in 0..k {
                    let pa = lam0[a0] * lam1.get(a1);
                    if pa == 0.0 {
                        continue;
                    }
                    let mut s = game.cost(1, x0, &emp, a0).unwrap();
                    let p0 = game.transition_dist(1, x0, &emp, a0).unwrap();
                    let p1 = game.transition_dist(1, x1, &emp, a1).unwrap();
                    for y0 in 0..m {
                        for y1 in 0..m {
                            let py = p0.get(y0) * p1.get(y1);
                            if py > 0.0 {
                                let v = game.terminal_vector(&empirical(&[y0, y1], m)).unwrap();
                                s += py * v[y0];
                            }
                        }
                    }
                    total += w * pa * s;
                }
            }
        }
    }
    total
}

/// Player-0 regret for `T = 2`, `N = 2`: own cost minus the best over all
/// deterministic maps from the joint state to an action.
pub fn regret_by_deviations(game: &GameSpec, own: &PolicySpec, other: &PolicySpec) -> f64 {
    assert_eq!(game.horizon, 2);
    let m = game.n_states();
    let k = game.n_actions();
    let own_cost = two_player_cost(game, other, &|x0, x1| {
        own.policy_dist(1, x0, &empirical(&[x0, x1], m)).unwrap().weights().to_vec()
    });
    let cells = m * m;
    let total = k.pow(cells as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let map: Vec<usize> = (0..cells).map(|c| (code / k.pow(c as u32)) % k).collect();
        let c = two_player_cost(game, other, &|x0, x1| {
            let mut v = vec![0.0; k];
            v[map[x0 * m + x1]] = 1.0;
            v
        });
        best = best.min(c);
    }
    own_cost - best
}

/// Optimal flow of the single-agent problem for a game whose kernels,
/// costs and terminal values ignore the environment.
pub fn single_agent_flow(game: &GameSpec) -> Vec<Vec<f64>> {
    let (m, k, h) = (game.n_states(), game.n_actions(), game.horizon);
    let anyxi = Dist::uniform(m);
    let mut v = game.terminal_vector(&anyxi).unwrap();
    let mut act = vec![vec![0usize; m]; h - 1];
    for t in (1..h).rev() {
        let mut nv = vec![0.0; m];
        for x in 0..m {
            let mut best = (f64::INFINITY, 0);
            for a in 0..k {
                let p = game.transition_dist(t, x, &anyxi, a).unwrap();
                let q = game.cost(t, x, &anyxi, a).unwrap() + (0..m).map(|y| p.get(y) * v[y]).sum::<f64>();
                if q < best.0 {
                    best = (q, a);
                }
            }
            nv[x] = best.0;
            act[t - 1][x] = best.1;
        }
        v = nv;
    }
    let mut mu = game.initial.weights().to_vec();
    let mut out = Vec::new();
    for t in 1..h {
        let mut joint = vec![0.0; m * k];
        let mut next = vec![0.0; m];
        for x in 0..m {
            let a = act[t - 1][x];
            joint[x * k + a] = mu[x];
            let p = game.transition_dist(t, x, &anyxi, a).unwrap();
            for y in 0..m {
                next[y] += mu[x] * p.get(y);
            }
        }
        out.push(joint);
        mu = next;
    }
    out
}

/// Random game with exactly `m` states and `k` actions.
pub fn sized_game<R: Rng>(rng: &mut R, m: usize, k: usize, h: usize, xi_dependent: bool) -> GameSpec {
    let opts = RandomGameOpts { max_states: m, max_actions: k, max_horizon: h, xi_dependent, ..Default::default() };
    loop {
        let g = random_game(rng, opts);
        if g.n_states() == m && g.n_actions() == k && g.horizon == h {
            return g;
        }
    }
}

pub fn some_policy<R: Rng>(rng: &mut R, game: &GameSpec) -> PolicySpec {
    if rng.gen_bool(0.5) {
        random_logit(rng, game)
    } else {
        random_oblivious(rng, game, true)
    }
}

pub fn flow_max_diff(a: &MeanFieldFlow, b: &MeanFieldFlow) -> f64 {
    a.joints
        .iter()
        .zip(&b.joints)
        .flat_map(|(x, y)| x.weights().iter().zip(y.weights()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

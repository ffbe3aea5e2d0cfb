//! Exact N-player operators on the product state space `X^N`.
//!
//! Product states are indexed row-major with player 0 most significant.
//! Operators act for player 0; other players are handled by permuting the
//! profile so that the player of interest comes first.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{EvaluatorKind, GameSpec, PolicySpec};
use crate::meanfield::{ascending, Evaluator};
use crate::risk;

/// Largest `|X|^N` accepted by the dense routines.
pub const PRODUCT_CAPACITY: usize = 2_000_000;
/// Largest `|X|^N * |A|^N * |X|^N` accepted by the AVaR backward step.
pub const AVAR_WORK_CAPACITY: f64 = 4e9;
/// Round-off allowance below zero before a regret is reported as an error.
pub const NEGATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductValue {
    pub n_players: usize,
    pub n_states: usize,
    pub values: Vec<f64>,
}

impl ProductValue {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &x| acc * self.n_states + x)
    }

    pub fn get(&self, coords: &[usize]) -> f64 {
        self.values[self.index_of(coords)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One policy per player; shared policies are held once.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProfile {
    pub policies: Vec<Arc<PolicySpec>>,
}

impl PolicyProfile {
    pub fn new(policies: Vec<PolicySpec>) -> Result<Self> {
        Self::from_arcs(policies.into_iter().map(Arc::new).collect())
    }

    pub fn from_arcs(policies: Vec<Arc<PolicySpec>>) -> Result<Self> {
        if policies.is_empty() {
            return invalid("a profile needs at least one player");
        }
        let p0 = &policies[0];
        if policies
            .iter()
            .any(|p| p.horizon != p0.horizon || p.n_states != p0.n_states || p.n_actions != p0.n_actions)
        {
            return invalid("profile policies have unequal shapes");
        }
        Ok(Self { policies })
    }

    pub fn homogeneous(policy: PolicySpec, n: usize) -> Result<Self> {
        let p = Arc::new(policy);
        Self::from_arcs(vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn is_homogeneous(&self) -> bool {
        let p0 = &self.policies[0];
        self.policies.iter().all(|p| Arc::ptr_eq(p, p0) || **p == **p0)
    }

    /// `(p^n, p^0, .., p^{n-1}, p^{n+1}, ..)`.
    pub fn permuted_for(&self, player: usize) -> Result<Self> {
        if player >= self.len() {
            return invalid(format!("player {player} out of range"));
        }
        let mut out = Vec::with_capacity(self.len());
        out.push(self.policies[player].clone());
        for (i, p) in self.policies.iter().enumerate() {
            if i != player {
                out.push(p.clone());
            }
        }
        Ok(Self { policies: out })
    }

    /// Replace player 0's policy.
    pub fn with_first(&self, policy: PolicySpec) -> Self {
        let mut policies = self.policies.clone();
        policies[0] = Arc::new(policy);
        Self { policies }
    }

    fn check(&self, game: &GameSpec) -> Result<()> {
        let p = &self.policies[0];
        if p.horizon != game.horizon || p.n_states != game.n_states() || p.n_actions != game.n_actions() {
            return invalid("profile does not match the game");
        }
        Ok(())
    }
}

pub fn product_size(m: usize, n: usize) -> Result<usize> {
    let mut s: usize = 1;
    for _ in 0..n {
        s = s.checked_mul(m).filter(|v| *v <= PRODUCT_CAPACITY).ok_or_else(|| {
            Error::Capacity(format!("|X|^N = {m}^{n} exceeds the dense limit {PRODUCT_CAPACITY}"))
        })?;
    }
    Ok(s)
}

struct Ctx {
    m: usize,
    k: usize,
    n: usize,
    len: usize,
}

impl Ctx {
    fn new(game: &GameSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("N must be at least 1");
        }
        let m = game.n_states();
        Ok(Self { m, k: game.n_actions(), n, len: product_size(m, n)? })
    }

    fn coords(&self, mut idx: usize, out: &mut [usize]) {
        for c in out.iter_mut().rev() {
            *c = idx % self.m;
            idx /= self.m;
        }
    }

    fn empirical(&self, coords: &[usize]) -> Vec<f64> {
        let mut e = vec![0.0; self.m];
        let w = 1.0 / self.n as f64;
        for &x in coords {
            e[x] += w;
        }
        e
    }
}

/// `U^N(x) = V(x^1, empirical(x))`.
pub fn un_from_v(game: &GameSpec, n: usize) -> Result<ProductValue> {
    let ctx = Ctx::new(game, n)?;
    let values = (0..ctx.len)
        .into_par_iter()
        .map(|idx| {
            let mut c = vec![0; n];
            ctx.coords(idx, &mut c);
            game.terminal_at(c[0], &ctx.empirical(&c))
        })
        .collect();
    Ok(ProductValue { n_players: n, n_states: ctx.m, values })
}

/// Data a state needs for one step: environment, action laws, kernel rows.
struct Local {
    coords: Vec<usize>,
    emp: Vec<f64>,
    lambdas: Vec<Vec<f64>>,
    /// `rows[x][a]` is `P_t(x, emp, a)`
    rows: Vec<Vec<Vec<f64>>>,
}

fn local(ctx: &Ctx, game: &GameSpec, profile: &PolicyProfile, step: usize, idx: usize) -> Local {
    let mut coords = vec![0; ctx.n];
    ctx.coords(idx, &mut coords);
    let emp = ctx.empirical(&coords);
    let lambdas = coords
        .iter()
        .zip(&profile.policies)
        .map(|(&x, p)| {
            let mut out = vec![0.0; ctx.k];
            p.policy_into(step, x, &emp, &mut out);
            out
        })
        .collect();
    let mut rows = vec![Vec::new(); ctx.m];
    for &x in &coords {
        if rows[x].is_empty() {
            rows[x] = (0..ctx.k)
                .map(|a| {
                    let mut r = vec![0.0; ctx.m];
                    game.transition_into(step, x, &emp, a, &mut r);
                    r
                })
                .collect();
        }
    }
    Local { coords, emp, lambdas, rows }
}

fn mixed_row(l: &Local, player: usize, m: usize) -> Vec<f64> {
    let x = l.coords[player];
    let mut q = vec![0.0; m];
    for (a, &w) in l.lambdas[player].iter().enumerate() {
        if w > 0.0 {
            for (y, p) in l.rows[x][a].iter().enumerate() {
                q[y] += w * p;
            }
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NpMode {
    Policy,
    Bellman,
}

/// Player-0 action values `H(a)` at one product state.
fn action_values(ctx: &Ctx, game: &GameSpec, eval: &Evaluator, step: usize, l: &Local, next: &[f64], order: &[usize]) -> Vec<f64> {
    let (m, k, n) = (ctx.m, ctx.k, ctx.n);
    let x0 = l.coords[0];
    let mut h: Vec<f64> = (0..k).map(|a| game.cost_at(step, x0, &l.emp, a)).collect();
    match eval.kind {
        EvaluatorKind::ExpectedSum => {
            // contract players n-1 .. 1 against their mixed rows
            let mut cur = next.to_vec();
            for p in (1..n).rev() {
                let q = mixed_row(l, p, m);
                cur = cur.chunks(m).map(|c| c.iter().zip(&q).map(|(u, w)| u * w).sum()).collect();
            }
            for (a, ha) in h.iter_mut().enumerate() {
                *ha += l.rows[x0][a].iter().zip(&cur).map(|(p, w)| p * w).sum::<f64>();
            }
        }
        EvaluatorKind::Avar { kappa } => {
            let inner = ctx.len / m;
            let mut acc = vec![0.0; k];
            let mut probs = vec![0.0; ctx.len];
            let mut emit = |w: f64, others: &[f64]| {
                for (a, slot) in acc.iter_mut().enumerate() {
                    let p0 = &l.rows[x0][a];
                    for y0 in 0..m {
                        let base = y0 * inner;
                        for (j, o) in others.iter().enumerate() {
                            probs[base + j] = p0[y0] * o;
                        }
                    }
                    *slot += w * risk::avar_ordered(order, next, &probs, kappa);
                }
            };
            profile_dfs(l, 1, 1.0, &[1.0], m, &mut emit);
            for a in 0..k {
                h[a] += acc[a];
            }
        }
    }
    h
}

/// Enumerate action profiles of players `p..N`, passing each weight with
/// the product law of those players' next states.
fn profile_dfs(l: &Local, p: usize, w: f64, prefix: &[f64], m: usize, emit: &mut dyn FnMut(f64, &[f64])) {
    if p == l.coords.len() {
        emit(w, prefix);
        return;
    }
    let x = l.coords[p];
    for (a, &wa) in l.lambdas[p].iter().enumerate() {
        if wa <= 0.0 {
            continue;
        }
        let row = &l.rows[x][a];
        let mut next = Vec::with_capacity(prefix.len() * m);
        for &u in prefix {
            for &r in row {
                next.push(u * r);
            }
        }
        profile_dfs(l, p + 1, w * wa, &next, m, emit);
    }
}

fn check_avar_work(ctx: &Ctx, eval: &Evaluator) -> Result<()> {
    if let EvaluatorKind::Avar { .. } = eval.kind {
        let work = (ctx.len as f64).powi(2) * (ctx.k as f64).powi(ctx.n as i32);
        if work > AVAR_WORK_CAPACITY {
            return Err(Error::Capacity(format!(
                "AVaR step needs about {work:.1e} operations (limit {AVAR_WORK_CAPACITY:.0e})"
            )));
        }
    }
    Ok(())
}

fn backward_step(
    ctx: &Ctx,
    game: &GameSpec,
    eval: &Evaluator,
    profile: &PolicyProfile,
    step: usize,
    next: &[f64],
    mode: NpMode,
) -> Vec<f64> {
    let order = match eval.kind {
        EvaluatorKind::Avar { .. } => ascending(next),
        EvaluatorKind::ExpectedSum => Vec::new(),
    };
    (0..ctx.len)
        .into_par_iter()
        .map(|idx| {
            let l = local(ctx, game, profile, step, idx);
            let h = action_values(ctx, game, eval, step, &l, next, &order);
            match mode {
                NpMode::Policy => l.lambdas[0].iter().zip(&h).filter(|(w, _)| **w > 0.0).map(|(w, v)| w * v).sum(),
                NpMode::Bellman => h.iter().cloned().fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

/// Values `S_{t,T} U` for `t = 1..T` (entry `t-1`); bellman mode takes the
/// infimum over player 0's actions and never reads player 0's policy.
pub fn np_value_backward(
    game: &GameSpec,
    eval: &Evaluator,
    profile: &PolicyProfile,
    un: &ProductValue,
    mode: NpMode,
) -> Result<Vec<ProductValue>> {
    profile.check(game)?;
    let ctx = Ctx::new(game, profile.len())?;
    check_avar_work(&ctx, eval)?;
    if un.values.len() != ctx.len || un.n_players != ctx.n {
        return invalid("terminal product value has the wrong size");
    }
    let h = game.horizon;
    let un_norm = un.sup_norm();
    let mut out = vec![un.clone(); h];
    for step in (0..h - 1).rev() {
        let values = backward_step(&ctx, game, eval, profile, step, &out[step + 1].values, mode);
        let pv = ProductValue { n_players: ctx.n, n_states: ctx.m, values };
        let bound = eval.growth(h - 1 - step, un_norm);
        if pv.sup_norm() > bound + 1e-9 * (1.0 + bound) {
            return Err(Error::Consistency(format!("N-player value norm exceeds growth bound {bound} at t = {}", step + 1)));
        }
        out[step] = pv;
    }
    Ok(out)
}

/// Laws of the product state for `t = 1..T` (entry `t-1`).
pub fn np_laws(game: &GameSpec, profile: &PolicyProfile) -> Result<Vec<Vec<f64>>> {
    profile.check(game)?;
    let ctx = Ctx::new(game, profile.len())?;
    let m = ctx.m;
    let mut law = vec![1.0];
    for _ in 0..ctx.n {
        law = kron(&law, game.initial.weights());
    }
    let mut out = Vec::with_capacity(game.horizon);
    out.push(law);
    for step in 0..game.horizon - 1 {
        let cur = &out[step];
        let mut next = vec![0.0; ctx.len];
        for (idx, &w) in cur.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let l = local(&ctx, game, profile, step, idx);
            let mut prod = vec![w];
            for p in 0..ctx.n {
                prod = kron(&prod, &mixed_row(&l, p, m));
            }
            for (s, v) in next.iter_mut().zip(&prod) {
                *s += v;
            }
        }
        out.push(next);
    }
    Ok(out)
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &u in a {
        for &v in b {
            out.push(u * v);
        }
    }
    out
}

/// `E f(X_t)` under the profile's dynamics, `t = 1..T`.
pub fn np_expectation(game: &GameSpec, profile: &PolicyProfile, t: usize, f: &ProductValue) -> Result<f64> {
    if t == 0 || t > game.horizon {
        return invalid(format!("time {t} outside 1..{}", game.horizon));
    }
    let laws = np_laws(game, profile)?;
    if f.values.len() != laws[t - 1].len() {
        return invalid("function has the wrong size");
    }
    Ok(dot(&laws[t - 1], &f.values))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    Stepwise,
    End,
    Actual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretSet {
    pub stepwise: f64,
    pub end: f64,
    pub actual: f64,
}

impl RegretSet {
    pub fn get(&self, mode: RegretMode) -> f64 {
        match mode {
            RegretMode::Stepwise => self.stepwise,
            RegretMode::End => self.end,
            RegretMode::Actual => self.actual,
        }
    }
}

pub(crate) fn clamp_regret(v: f64, what: &str) -> Result<f64> {
    if v < -NEGATIVE_TOL {
        return Err(Error::Consistency(format!("{what} is negative ({v:.3e})")));
    }
    Ok(v.max(0.0))
}

/// Stepwise, end and actual regret of `player` (0-based).
pub fn np_regret_set(game: &GameSpec, eval: &Evaluator, profile: &PolicyProfile, player: usize) -> Result<RegretSet> {
    let prof = profile.permuted_for(player)?;
    prof.check(game)?;
    let ctx = Ctx::new(game, prof.len())?;
    let un = un_from_v(game, ctx.n)?;
    let star = np_value_backward(game, eval, &prof, &un, NpMode::Bellman)?;
    let pol = np_value_backward(game, eval, &prof, &un, NpMode::Policy)?;
    let laws = np_laws(game, &prof)?;
    let h = game.horizon;
    let mut stepwise = 0.0;
    let mut actual = 0.0;
    let mut weight = 1.0;
    for step in 0..h - 1 {
        weight *= eval.c_bar;
        let one = backward_step(&ctx, game, eval, &prof, step, &star[step + 1].values, NpMode::Policy);
        let diff: Vec<f64> = one.iter().zip(&star[step].values).map(|(a, b)| a - b).collect();
        stepwise += weight * dot(&laws[step], &diff);
        let gap: Vec<f64> = pol[step].values.iter().zip(&star[step].values).map(|(a, b)| a - b).collect();
        actual += weight * dot(&laws[step], &gap);
    }
    let end = eval.risk(&pol[0].values, &laws[0]) - eval.risk(&star[0].values, &laws[0]);
    Ok(RegretSet {
        stepwise: clamp_regret(stepwise, "stepwise regret")?,
        end: clamp_regret(end, "end regret")?,
        actual: clamp_regret(actual, "actual stepwise regret")?,
    })
}

pub fn np_regret(game: &GameSpec, eval: &Evaluator, profile: &PolicyProfile, player: usize, mode: RegretMode) -> Result<f64> {
    Ok(np_regret_set(game, eval, profile, player)?.get(mode))
}

/// Regrets of every player; homogeneous profiles are evaluated once.
pub fn np_regrets_all(game: &GameSpec, eval: &Evaluator, profile: &PolicyProfile) -> Result<Vec<RegretSet>> {
    if profile.is_homogeneous() {
        let r = np_regret_set(game, eval, profile, 0)?;
        return Ok(vec![r; profile.len()]);
    }
    (0..profile.len()).map(|n| np_regret_set(game, eval, profile, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin::builtin;
    use crate::game::load_game;
    use crate::spaces::Dist;

    const TWO_ACTION: &str = r#"{
        "horizon": 2,
        "states": {"labels": ["only"]},
        "actions": {"labels": ["a", "b"]},
        "initial": [1.0],
        "transition": {"kind": "xi_independent", "table": [[[[1.0], [1.0]]]]},
        "cost": {"kind": "affine", "base": [[[1.0, 0.0]]]},
        "terminal": {"kind": "zero"}
    }"#;

    #[test]
    fn hand_regret_single_state() {
        let g = load_game(TWO_ACTION).unwrap();
        let e = Evaluator::for_game(&g);
        let p = PolicySpec::constant(Dist::dirac(2, 0), 2, 1).unwrap();
        for n in 1..=3 {
            let prof = PolicyProfile::homogeneous(p.clone(), n).unwrap();
            let r = np_regret_set(&g, &e, &prof, 0).unwrap();
            assert!((r.stepwise - 1.0).abs() < 1e-15);
            assert!((r.end - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn un_examples() {
        let g = builtin("no_one_get_it").unwrap();
        let u = un_from_v(&g, 2).unwrap();
        assert_eq!(u.get(&[0, 1]), 5.0);
        assert_eq!(u.get(&[1, 1]), 10.0);
        let u1 = un_from_v(&g, 1).unwrap();
        assert_eq!(u1.values, vec![10.0, 10.0]);
    }

    #[test]
    fn capacity_guard() {
        let g = builtin("commute").unwrap();
        assert!(matches!(un_from_v(&g, 14), Err(Error::Capacity(_))));
    }

    #[test]
    fn laws_are_probabilities() {
        let g = builtin("crowd").unwrap();
        let prof = PolicyProfile::homogeneous(g.policy.clone().unwrap(), 3).unwrap();
        for law in np_laws(&g, &prof).unwrap() {
            assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let one = ProductValue { n_players: 3, n_states: 2, values: vec![1.0; 8] };
        assert!((np_expectation(&g, &prof, 3, &one).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_one_get_it_zero_regret() {
        let g = builtin("no_one_get_it").unwrap();
        let e = Evaluator::for_game(&g);
        for n in [2, 4] {
            let prof = PolicyProfile::homogeneous(g.policy.clone().unwrap(), n).unwrap();
            let r = np_regret_set(&g, &e, &prof, 0).unwrap();
            assert!(r.stepwise.abs() < 1e-12, "{n}: {r:?}");
        }
    }
}

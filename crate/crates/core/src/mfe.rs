//! Damped best-response search for mean field equilibria, certified by the
//! stepwise mean-field regret.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::random::random_oblivious;
use crate::game::{GameSpec, PolicySpec};
use crate::meanfield::{
    ascending, check_mff, flow_from_kernels, flow_terminal_values, induced_kernel, marginal_flow_of, mf_bellman,
    require_mff, Evaluator, MeanFieldFlow, MFF_TOL,
};
use crate::nplayer::RegretMode;
use crate::regret::mf_regret;
use crate::spaces::Dist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// random starts run besides the uniform one
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 500, damping: 0.2, restarts: 0, seed: 0 }
    }
}

impl SolveOpts {
    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return invalid(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub flow: MeanFieldFlow,
    pub mfr: f64,
    /// best-response applications made by the winning start
    pub iterations: usize,
    pub damping: f64,
    pub restarts_used: usize,
    pub converged: bool,
    /// 0 for the uniform start, `r` for the r-th random start
    pub start: usize,
    pub tie_break: String,
}

/// Greedy response to the flow's marginals and terminal values, rolled
/// forward to a flow of its own.
pub fn best_response_flow(game: &GameSpec, eval: &Evaluator, flow: &MeanFieldFlow) -> Result<MeanFieldFlow> {
    flow.check_shape(game)?;
    require_mff(game, flow)?;
    let (_, greedy) = best_response_policy(game, eval, flow)?;
    Ok(marginal_flow_of(game, &greedy))
}

fn best_response_policy(game: &GameSpec, eval: &Evaluator, flow: &MeanFieldFlow) -> Result<(Vec<Vec<f64>>, PolicySpec)> {
    let marg = flow.marginals();
    let vm = flow_terminal_values(game, flow)?;
    mf_bellman(game, eval, &marg, &vm)
}

/// Largest `sum_{x,a} psi_t(x,a) (H_t(x,a) - v*_t(x))` of `response` against
/// the Bellman values of `flow`; zero when the response is supported on
/// argmin sets.
pub fn argmin_excess(game: &GameSpec, eval: &Evaluator, flow: &MeanFieldFlow, response: &MeanFieldFlow) -> Result<f64> {
    response.check_shape(game)?;
    let (star, _) = best_response_policy(game, eval, flow)?;
    let marg = flow.marginals();
    let mut buf = vec![0.0; game.n_states()];
    let mut worst = 0.0f64;
    for step in 0..game.horizon - 1 {
        let next = &star[step + 1];
        let order = ascending(next);
        let xi = marg[step].weights();
        let psi = &response.joints[step];
        let mut s = 0.0;
        for x in 0..game.n_states() {
            for a in 0..game.n_actions() {
                let w = psi.get(x, a);
                if w > 0.0 {
                    s += w * (eval.action_value(game, step, x, xi, a, next, &order, &mut buf) - star[step][x]);
                }
            }
        }
        worst = worst.max(s);
    }
    Ok(worst)
}

/// Mix joints, then restore consistency by rolling the induced kernels.
fn damped(game: &GameSpec, flow: &MeanFieldFlow, br: &MeanFieldFlow, alpha: f64) -> Result<MeanFieldFlow> {
    let kernels: Vec<Vec<Dist>> = flow
        .joints
        .iter()
        .zip(&br.joints)
        .map(|(a, b)| induced_kernel(&b.mix(a, alpha)))
        .collect();
    let out = flow_from_kernels(game, &kernels)?;
    let res = check_mff(game, &out)?;
    if let Some(msg) = res.first_failure(MFF_TOL) {
        return Err(Error::Consistency(format!("damped iterate is not a flow: {msg}")));
    }
    Ok(out)
}

struct Run {
    flow: MeanFieldFlow,
    mfr: f64,
    iterations: usize,
    converged: bool,
    start: usize,
}

fn run_from(game: &GameSpec, eval: &Evaluator, opts: &SolveOpts, start: usize, init: MeanFieldFlow) -> Result<Run> {
    let score = |f: &MeanFieldFlow| mf_regret(game, eval, f, RegretMode::Stepwise);
    let mut flow = init;
    let mut mfr = score(&flow)?;
    let mut best = Run { flow: flow.clone(), mfr, iterations: 0, converged: mfr <= opts.tol, start };
    let mut iter = 0;
    while iter < opts.max_iter && !best.converged {
        iter += 1;
        let br = best_response_flow(game, eval, &flow)?;
        let br_mfr = score(&br)?;
        if br_mfr <= opts.tol {
            flow = br;
            mfr = br_mfr;
        } else {
            flow = damped(game, &flow, &br, opts.damping)?;
            mfr = score(&flow)?;
        }
        if mfr < best.mfr {
            best = Run { flow: flow.clone(), mfr, iterations: iter, converged: mfr <= opts.tol, start };
        }
    }
    if !best.converged {
        best.iterations = iter;
    }
    Ok(best)
}

fn initial_flow(game: &GameSpec, opts: &SolveOpts, start: usize) -> Result<MeanFieldFlow> {
    if start == 0 {
        let u = PolicySpec::constant(Dist::uniform(game.n_actions()), game.horizon, game.n_states())?;
        return Ok(marginal_flow_of(game, &u));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(start as u64);
    Ok(marginal_flow_of(game, &random_oblivious(&mut rng, game, false)))
}

/// Damped best-response iteration from a uniform start and `opts.restarts`
/// seeded random starts; returns the best run, re-certified.
pub fn solve_mfe(game: &GameSpec, eval: &Evaluator, opts: &SolveOpts) -> Result<SolveReport> {
    opts.check()?;
    let runs: Vec<Run> = (0..=opts.restarts)
        .into_par_iter()
        .map(|s| run_from(game, eval, opts, s, initial_flow(game, opts, s)?))
        .collect::<Result<_>>()?;
    let best = runs
        .into_iter()
        .min_by(|a, b| {
            (!a.converged, a.mfr, a.start)
                .partial_cmp(&(!b.converged, b.mfr, b.start))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one start");
    let mfr = mf_regret(game, eval, &best.flow, RegretMode::Stepwise)?;
    Ok(SolveReport {
        converged: mfr <= opts.tol,
        flow: best.flow,
        mfr,
        iterations: best.iterations,
        damping: opts.damping,
        restarts_used: opts.restarts,
        start: best.start,
        tie_break: "lowest_index".into(),
    })
}

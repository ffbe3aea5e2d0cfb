//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use mfg_core::game::random::{random_dist, random_flow, random_game, RandomGameOpts};
use mfg_core::meanfield::{induced_policy, mf_bellman, q_push};
use mfg_core::nplayer::np_regrets_all;
use mfg_core::regret::mf_regret_avar_direct;
use mfg_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn counterexample() -> Outcome {
    let g = builtin("no_one_get_it").map_err(err)?;
    let e = Evaluator::for_game(&g);
    let policy = g.policy.clone().ok_or("no attached policy")?;
    let mut worst_player = 0.0f64;
    let mut mfr = 0.0;
    for n in [2, 4, 8] {
        let prof = PolicyProfile::homogeneous(policy.clone(), n).map_err(err)?;
        for s in np_regrets_all(&g, &e, &prof).map_err(err)? {
            worst_player = worst_player.max(s.stepwise.abs());
        }
        let flow = lift_flow(&g, &prof).map_err(err)?;
        mfr = mf_regret(&g, &e, &flow, RegretMode::Stepwise).map_err(err)?;
        ensure!((mfr - 1.0).abs() <= 1e-9, "N = {n}: lifted MFR {mfr}");
        let (_, greedy) = mf_bellman(&g, &e, &flow.marginals(), &mfg_core::meanfield::flow_terminal_values(&g, &flow).map_err(err)?)
            .map_err(err)?;
        let first = greedy.policy_dist(1, 0, &flow.marginals()[0]).map_err(err)?;
        ensure!(first.get(1) == 1.0, "N = {n}: optimal first move is {:?}", first.weights());
    }
    ensure!(worst_player <= 1e-12, "player regret {worst_player}");
    Ok(format!("max player regret {worst_player:.1e}, lifted MFR {mfr}"))
}

fn expected_sum_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..50 {
        let g = random_game(&mut rng, RandomGameOpts::default());
        let e = Evaluator::expected_sum(&g);
        let n = rng.gen_range(1..=3);
        let pols = (0..n).map(|_| some_policy(&mut rng, &g)).collect();
        let prof = PolicyProfile::new(pols).map_err(err)?;
        for s in np_regrets_all(&g, &e, &prof).map_err(err)? {
            worst = worst.max((s.end - s.stepwise).abs());
            ensure!(s.stepwise <= s.actual + 1e-9, "actual {} below stepwise {}", s.actual, s.stepwise);
            ensure!(s.actual <= g.horizon as f64 * s.stepwise + 1e-9, "actual {} above T * stepwise {}", s.actual, s.stepwise);
            checked += 1;
        }
    }
    ensure!(worst <= 1e-9, "end and stepwise differ by {worst}");
    Ok(format!("{checked} player regrets, max |end - stepwise| {worst:.1e}"))
}

fn approximation_sandwich() -> Outcome {
    let g = builtin("crowd").map_err(err)?;
    let e = Evaluator::expected_sum(&g);
    let policy = g.policy.clone().ok_or("no attached policy")?;
    let mut gaps = Vec::new();
    for n in [2, 4, 8] {
        let prof = PolicyProfile::homogeneous(policy.clone(), n).map_err(err)?;
        let regs = np_regrets_all(&g, &e, &prof).map_err(err)?;
        let avg = regs.iter().map(|s| s.stepwise).sum::<f64>() / n as f64;
        let mfr = mf_regret(&g, &e, &lift_flow(&g, &prof).map_err(err)?, RegretMode::Stepwise).map_err(err)?;
        let budget = error_budget(&g, &e, n, None).map_err(err)?;
        let gap = (avg - mfr).abs();
        ensure!(gap <= budget.big_e, "N = {n}: gap {gap} exceeds budget {}", budget.big_e);
        gaps.push(gap);
    }
    ensure!(gaps[2] < gaps[0], "gap at N = 8 ({}) not below N = 2 ({})", gaps[2], gaps[0]);
    Ok(format!("gaps {:.4} / {:.4} / {:.4} for N = 2 / 4 / 8", gaps[0], gaps[1], gaps[2]))
}

fn solver_games() -> Vec<GameSpec> {
    let mut out: Vec<GameSpec> = ["crowd", "commute", "idle"].iter().map(|n| builtin(n).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    out.push(sized_game(&mut rng, 2, 2, 3, true));
    out.push(sized_game(&mut rng, 2, 3, 4, true));
    out
}

fn constrained_approximation() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut worst_lift = 0.0f64;
    for (i, g) in solver_games().iter().enumerate() {
        let e = Evaluator::expected_sum(g);
        let rep = solve_mfe(g, &e, &SolveOpts { max_iter: 200, restarts: 2, seed: i as u64, ..Default::default() })
            .map_err(err)?;
        let pol = induced_policy(g, &rep.flow).map_err(err)?;
        for n in [2, 4, 8] {
            let prof = PolicyProfile::homogeneous(pol.clone(), n).map_err(err)?;
            let lifted = lift_flow(g, &prof).map_err(err)?;
            let d = flow_max_diff(&lifted, &rep.flow);
            ensure!(d <= 1e-12, "game {i}, N = {n}: lift differs by {d}");
            worst_lift = worst_lift.max(d);
            let budget = error_budget(g, &e, n, Some(&Modulus::Zero)).map_err(err)?;
            for s in np_regrets_all(g, &e, &prof).map_err(err)? {
                let gap = (s.stepwise - rep.mfr).abs();
                ensure!(gap <= budget.big_e, "game {i}, N = {n}: gap {gap} exceeds {}", budget.big_e);
                worst_ratio = worst_ratio.max(gap / budget.big_e);
            }
        }
    }
    Ok(format!("max gap / budget {worst_ratio:.2e}, max lift error {worst_lift:.1e}"))
}

fn spearman_negative(xs: &[f64]) -> bool {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut rank = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r as f64;
    }
    let d2: f64 = rank.iter().enumerate().map(|(i, r)| (i as f64 - r).powi(2)).sum();
    let rho = 1.0 - 6.0 * d2 / (n as f64 * (n as f64 * n as f64 - 1.0));
    rho < 0.0
}

fn concentration_check() -> Outcome {
    let sp = FiniteMetricSpace::line(4).map_err(err)?;
    let mu = Dist::new(vec![0.1, 0.4, 0.3, 0.2]).map_err(err)?;
    let mut est = Vec::new();
    for (i, n) in [10usize, 100, 1000, 10000].into_iter().enumerate() {
        let r = concentration(&sp, &vec![mu.clone(); n], 1000, 500 + i as u64).map_err(err)?;
        ensure!(r.estimate <= r.bound + 3.0 * r.se, "N = {n}: {} > {} + 3 * {}", r.estimate, r.bound, r.se);
        est.push(r.estimate);
    }
    ensure!(spearman_negative(&est), "estimates not decreasing: {est:?}");
    let two = FiniteMetricSpace::discrete(2, 2.0).map_err(err)?;
    let r = concentration(&two, &vec![Dist::uniform(2); 2], 1000, 7).map_err(err)?;
    ensure!((r.estimate - 0.25).abs() <= 3.0 * r.se, "two-point estimate {} (se {})", r.estimate, r.se);
    Ok(format!("estimates {est:.4?}, two-point {:.4} +- {:.4}", r.estimate, r.se))
}

fn solver_check() -> Outcome {
    let g = builtin("commute").map_err(err)?;
    let e = Evaluator::for_game(&g);
    let rep = solve_mfe(&g, &e, &SolveOpts { tol: 1e-9, ..Default::default() }).map_err(err)?;
    ensure!(rep.converged && rep.iterations <= 2, "commute: {} iterations, mfr {}", rep.iterations, rep.mfr);
    let oracle = single_agent_flow(&g);
    let prod = g.states.product(&g.actions);
    for (j, w) in rep.flow.joints.iter().zip(&oracle) {
        let d = bl_distance(&prod, &j.as_dist(), &Dist::new(w.clone()).map_err(err)?).map_err(err)?;
        ensure!(d <= 1e-9, "commute: BL {d} to the DP flow");
    }
    let fresh = mf_regret(&g, &e, &rep.flow, RegretMode::Stepwise).map_err(err)?;
    ensure!((fresh - rep.mfr).abs() <= 1e-12, "commute certificate {} vs {fresh}", rep.mfr);
    let commute_iters = rep.iterations;

    let g = builtin("crowd").map_err(err)?;
    let e = Evaluator::for_game(&g);
    let rep = solve_mfe(&g, &e, &SolveOpts { tol: 1e-6, max_iter: 500, damping: 0.2, ..Default::default() })
        .map_err(err)?;
    ensure!(rep.converged && rep.mfr <= 1e-6, "crowd: mfr {} after {}", rep.mfr, rep.iterations);
    let fresh = mf_regret(&g, &e, &rep.flow, RegretMode::Stepwise).map_err(err)?;
    ensure!((fresh - rep.mfr).abs() <= 1e-12, "crowd certificate {} vs {fresh}", rep.mfr);
    Ok(format!("commute in {commute_iters} iterations, crowd mfr {:.1e} in {}", rep.mfr, rep.iterations))
}

fn avar_assumptions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = [f64::NEG_INFINITY; 3];
    let mut samples = 0;
    let mut game = None;
    while samples < 10_000 {
        if samples % 100 == 0 {
            let kappa = rng.gen_range(0.05..=1.0);
            let g = random_game(&mut rng, RandomGameOpts { evaluator: EvaluatorKind::Avar { kappa }, ..Default::default() });
            let e = Evaluator::for_game(&g);
            ensure!((e.c_bar - 1.0 / kappa).abs() <= 1e-12, "contraction constant {} for kappa {kappa}", e.c_bar);
            game = Some((g, e));
        }
        let (g, e) = game.as_ref().unwrap();
        let (m, k) = (g.n_states(), g.n_actions());
        let t = rng.gen_range(1..g.horizon);
        let x = rng.gen_range(0..m);
        let xi = random_dist(&mut rng, m, true);
        let lam = random_dist(&mut rng, k, true);
        let lam2 = random_dist(&mut rng, k, true);
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let up: Vec<f64> = v.iter().map(|y| y + rng.gen_range(0.0..1.0)).collect();
        let gv = e.apply(g, t, x, &xi, &lam, &v).map_err(err)?;
        worst[0] = worst[0].max(gv - e.apply(g, t, x, &xi, &lam, &up).map_err(err)?);
        let q = q_push(g, t, x, &xi, &lam).map_err(err)?;
        let dist: f64 = (0..m).map(|y| q.get(y) * (v[y] - w[y]).abs()).sum();
        worst[1] = worst[1].max((gv - e.apply(g, t, x, &xi, &lam, &w).map_err(err)?).abs() - e.c_bar * dist);
        let s = rng.gen_range(0.0..=1.0);
        let mix = lam.mix(&lam2, s);
        let lhs = e.apply(g, t, x, &xi, &mix, &v).map_err(err)?;
        let rhs = s * gv + (1.0 - s) * e.apply(g, t, x, &xi, &lam2, &v).map_err(err)?;
        worst[2] = worst[2].max(lhs - rhs);
        samples += 1;
    }
    ensure!(worst.iter().all(|w| *w <= 1e-9), "violations (monotone, contraction, convexity) {worst:?}");

    let mut diff = 0.0f64;
    for _ in 0..20 {
        let kappa = rng.gen_range(0.05..=1.0);
        let g = random_game(&mut rng, RandomGameOpts { evaluator: EvaluatorKind::Avar { kappa }, ..Default::default() });
        let e = Evaluator::for_game(&g);
        let f = random_flow(&mut rng, &g, true);
        let a = mf_regret(&g, &e, &f, RegretMode::Stepwise).map_err(err)?;
        let b = mf_regret_avar_direct(&g, &f, kappa).map_err(err)?;
        diff = diff.max((a - b).abs());
    }
    ensure!(diff <= 1e-9, "direct and generic MFR differ by {diff}");
    Ok(format!("{samples} samples, worst excess {:.1e}, direct MFR gap {diff:.1e}", worst.iter().cloned().fold(f64::NEG_INFINITY, f64::max)))
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_np = 0.0f64;
    for i in 0..30 {
        let g = sized_game(&mut rng, 2, 2, 2, i % 2 == 0);
        let e = Evaluator::expected_sum(&g);
        let own = some_policy(&mut rng, &g);
        let other = some_policy(&mut rng, &g);
        let prof = PolicyProfile::new(vec![own.clone(), other.clone()]).map_err(err)?;
        let r = mfg_core::nplayer::np_regret(&g, &e, &prof, 0, RegretMode::Stepwise).map_err(err)?;
        worst_np = worst_np.max((r - regret_by_deviations(&g, &own, &other)).abs());
    }
    ensure!(worst_np <= 1e-12, "N-player regret off by {worst_np}");
    let mut worst_bl = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(1..=4);
        let sp = mfg_core::game::random::random_space(&mut rng, m);
        let p = random_dist(&mut rng, m, true);
        let q = random_dist(&mut rng, m, true);
        let lp = bl_distance(&sp, &p, &q).map_err(err)?;
        worst_bl = worst_bl.max((lp - bl_by_vertices(&sp, &p, &q)).abs());
    }
    ensure!(worst_bl <= 1e-9, "BL off by {worst_bl}");
    Ok(format!("regret error {worst_np:.1e}, BL error {worst_bl:.1e}"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 8] = [
        ("no-one-get-it counterexample", 1, counterexample),
        ("end equals stepwise under expected sum", 30, expected_sum_identity),
        ("lifted regret sandwich", 60, approximation_sandwich),
        ("constrained lift of solver flows", 60, constrained_approximation),
        ("empirical measure concentration", 60, concentration_check),
        ("equilibrium solver", 30, solver_check),
        ("AVaR evaluator assumptions", 30, avar_assumptions),
        ("brute-force oracles", 10, oracles),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let res = match res {
            Ok(msg) if took > Duration::from_secs(*limit) => Err(format!("{msg}; took {took:.2?} over {limit} s")),
            other => other,
        };
        match res {
            Ok(msg) => println!("criterion {} PASS {name} ({took:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({took:.2?}): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

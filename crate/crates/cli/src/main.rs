//! `mfg`: regrets, lifting budgets, equilibrium search and Monte Carlo
//! experiments for finite mean field games.
//!
//! Exit codes: 0 success, 2 bad arguments / config / failed validation,
//! 3 capacity exceeded, 1 internal consistency violation.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use mfg_core::game::validate::validate_game;
use mfg_core::lift::profile_theta;
use mfg_core::nplayer::np_regrets_all;
use mfg_core::regret::mf_regret_set;
use mfg_core::{
    builtin, concentration, empirical_gap, error_budget, lift_flow, load_game, solve_mfe, Dist, Error, ErrorBudget,
    Evaluator, GameSpec, MeanFieldFlow, Modulus, PolicyProfile, PolicySpec, SolveOpts,
};
use report::{cell, num, nums, Output, RunManifest, Table};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mfg", version, about = "Finite mean field games: regrets, lifting, equilibria, simulation")]
struct Cli {
    /// worker threads for parallel sections (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// N-player and mean-field regrets of the game's policy profile
    Regret(Opts),
    /// lifted mean field flow and error budgets
    Lift(Opts),
    /// search for a mean field equilibrium
    Mfe(Opts),
    /// Monte Carlo runs of the N-player game against the lifted flow
    Simulate(Opts),
    /// empirical measure concentration against the covering bound
    Concentration(Opts),
    /// run a built-in game end to end
    Example {
        name: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// sampled checks of the moduli and evaluator constants
    Validate(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// game config (JSON)
    #[arg(long, conflicts_with = "example")]
    config: Option<PathBuf>,
    /// built-in game name
    #[arg(long)]
    example: Option<String>,
    /// player counts, comma separated
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    n: Vec<usize>,
    /// replications (samples for `validate`)
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.2)]
    damping: f64,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long, default_value = "mfg-out")]
    out: PathBuf,
    /// budgets with a zero policy modulus
    #[arg(long)]
    theta_zero: bool,
}

enum Failure {
    Core(Error),
    Io(std::io::Error),
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::Capacity(_)) => 3,
            Failure::Core(Error::Consistency(_)) | Failure::Io(_) => 1,
            Failure::Core(_) | Failure::Usage(_) | Failure::Check(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(e) => format!("i/o error: {e}"),
            Failure::Usage(m) => m.clone(),
            Failure::Check(m) => m.clone(),
        }
    }
}

type Run = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("mfg: cannot set up {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.command {
        Command::Regret(o) => regret_cmd(o, "regret"),
        Command::Lift(o) => lift_cmd(o),
        Command::Mfe(o) => mfe_cmd(o),
        Command::Simulate(o) => simulate_cmd(o),
        Command::Concentration(o) => concentration_cmd(o),
        Command::Example { name, opts } => {
            let mut o = opts.clone();
            o.example = Some(name.clone());
            o.config = None;
            example_cmd(&o)
        }
        Command::Validate(o) => validate_cmd(o),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mfg: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load(o: &Opts) -> Result<(GameSpec, String), Failure> {
    match (&o.config, &o.example) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Ok((load_game(&text)?, path.display().to_string()))
        }
        (None, Some(name)) => Ok((builtin(name)?, format!("builtin:{name}"))),
        (None, None) => Err(Failure::Usage("one of --config or --example is required".into())),
    }
}

fn output(o: &Opts, command: &str, source: String) -> Result<Output, Failure> {
    if o.n.is_empty() || o.n.contains(&0) {
        return Err(Failure::Usage("--n needs positive player counts".into()));
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(Output {
        dir: o.out.clone(),
        manifest: RunManifest {
            command: command.into(),
            source,
            seed: o.seed,
            n: o.n.clone(),
            reps: o.reps,
            tol: o.tol,
            max_iter: o.max_iter,
            damping: o.damping,
            restarts: o.restarts,
            theta_zero: o.theta_zero,
            out: o.out.display().to_string(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
        },
    })
}

/// The game's attached policy, or the uniform oblivious one.
fn game_policy(game: &GameSpec) -> Result<PolicySpec, Failure> {
    match &game.policy {
        Some(p) => Ok(p.clone()),
        None => Ok(PolicySpec::constant(Dist::uniform(game.n_actions()), game.horizon, game.n_states())?),
    }
}

fn theta_for(o: &Opts, profile: &PolicyProfile) -> Modulus {
    if o.theta_zero {
        Modulus::Zero
    } else {
        profile_theta(profile)
    }
}

fn budget_json(b: &ErrorBudget) -> Value {
    json!({
        "n": b.n,
        "r": num(b.r),
        "r_j": b.r_j,
        "r_n_j": b.r_n_j,
        "r_product": num(b.r_product),
        "e": nums(&b.e),
        "l_choice": nums(&b.l_choice),
        "big_e": num(b.big_e),
        "e_bold": nums(&b.e_bold),
        "e_script": num(b.e_script),
        "big_e_constr": num(b.big_e_constr),
        "gap_bound": nums(&b.gap_bound),
        "theta": serde_json::to_value(&b.theta).unwrap_or(Value::Null),
    })
}

fn flow_table(name: &'static str, flows: &[(usize, &MeanFieldFlow)], game: &GameSpec) -> Table {
    let mut t = Table::new(name, &["n", "t", "state", "action", "mass"]);
    for (n, f) in flows {
        for (s, j) in f.joints.iter().enumerate() {
            for x in 0..game.n_states() {
                for a in 0..game.n_actions() {
                    t.push(vec![
                        n.to_string(),
                        (s + 1).to_string(),
                        game.states.labels()[x].clone(),
                        game.actions.labels()[a].clone(),
                        cell(j.get(x, a)),
                    ]);
                }
            }
        }
    }
    t
}

struct RegretRows {
    body: Vec<Value>,
    table: Table,
    budgets: Table,
}

fn regret_rows(o: &Opts, game: &GameSpec) -> Result<RegretRows, Failure> {
    let eval = Evaluator::for_game(game);
    let policy = game_policy(game)?;
    let mut table = Table::new(
        "regret",
        &[
            "n",
            "avg_player_stepwise_regret",
            "max_player_stepwise_regret",
            "avg_player_end_regret",
            "avg_player_actual_regret",
            "mf_stepwise_regret",
            "mf_end_regret",
            "mf_actual_regret",
            "abs_gap",
            "budget_big_e",
            "budget_e_script",
        ],
    );
    let mut budgets = Table::new("budget", &["n", "t", "e_t", "e_bold_t", "gap_bound_t"]);
    let mut body = Vec::new();
    for &n in &o.n {
        let profile = PolicyProfile::homogeneous(policy.clone(), n)?;
        let regs = np_regrets_all(game, &eval, &profile)?;
        let nf = n as f64;
        let avg = regs.iter().map(|r| r.stepwise).sum::<f64>() / nf;
        let max = regs.iter().map(|r| r.stepwise).fold(0.0, f64::max);
        let end = regs.iter().map(|r| r.end).sum::<f64>() / nf;
        let actual = regs.iter().map(|r| r.actual).sum::<f64>() / nf;
        let flow = lift_flow(game, &profile)?;
        let mf = mf_regret_set(game, &eval, &flow)?;
        let b = error_budget(game, &eval, n, Some(&theta_for(o, &profile)))?;
        let gap = (avg - mf.stepwise).abs();
        table.push(vec![
            n.to_string(),
            cell(avg),
            cell(max),
            cell(end),
            cell(actual),
            cell(mf.stepwise),
            cell(mf.end),
            cell(mf.actual),
            cell(gap),
            cell(b.big_e),
            cell(b.e_script),
        ]);
        for t in 0..game.horizon {
            let gb = b.gap_bound.get(t).copied();
            budgets.push(vec![
                n.to_string(),
                (t + 1).to_string(),
                cell(b.e[t]),
                cell(b.e_bold[t]),
                gb.map(cell).unwrap_or_default(),
            ]);
        }
        body.push(json!({
            "n": n,
            "avg_player_regret": num(avg),
            "max_player_regret": num(max),
            "avg_player_end_regret": num(end),
            "avg_player_actual_regret": num(actual),
            "lifted_mfr": num(mf.stepwise),
            "lifted_mf_end_regret": num(mf.end),
            "lifted_mf_actual_regret": num(mf.actual),
            "abs_gap": num(gap),
            "budget": budget_json(&b),
        }));
    }
    Ok(RegretRows { body, table, budgets })
}

fn regret_cmd(o: &Opts, command: &str) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, command, source)?;
    let rows = regret_rows(o, &game)?;
    for r in &rows.body {
        println!("N = {}: avg player regret {}, lifted MFR {}", r["n"], r["avg_player_regret"], r["lifted_mfr"]);
    }
    let body = json!({ "game": game.name, "profile": profile_name(&game), "rows": rows.body });
    out.write(body, &[rows.table, rows.budgets])?;
    Ok(())
}

fn profile_name(game: &GameSpec) -> &'static str {
    if game.policy.is_some() {
        "attached"
    } else {
        "uniform"
    }
}

fn lift_cmd(o: &Opts) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, "lift", source)?;
    let eval = Evaluator::for_game(&game);
    let policy = game_policy(&game)?;
    let mut flows = Vec::new();
    let mut budgets = Table::new("budget", &["n", "t", "e_t", "e_bold_t", "gap_bound_t", "l_choice_t"]);
    let mut totals = Table::new("budget_totals", &["n", "r", "r_j", "r_n_j", "big_e", "e_script", "big_e_constr"]);
    let mut body = Vec::new();
    for &n in &o.n {
        let profile = PolicyProfile::homogeneous(policy.clone(), n)?;
        let flow = lift_flow(&game, &profile)?;
        let b = error_budget(&game, &eval, n, Some(&theta_for(o, &profile)))?;
        for t in 0..game.horizon {
            budgets.push(vec![
                n.to_string(),
                (t + 1).to_string(),
                cell(b.e[t]),
                cell(b.e_bold[t]),
                b.gap_bound.get(t).copied().map(cell).unwrap_or_default(),
                if t == 0 { String::new() } else { cell(b.l_choice[t - 1]) },
            ]);
        }
        totals.push(vec![
            n.to_string(),
            cell(b.r),
            b.r_j.to_string(),
            b.r_n_j.to_string(),
            cell(b.big_e),
            cell(b.e_script),
            cell(b.big_e_constr),
        ]);
        println!("N = {n}: big E {}, script E {}", cell(b.big_e), cell(b.e_script));
        body.push(json!({ "n": n, "flow": serde_json::to_value(&flow).unwrap_or(Value::Null), "budget": budget_json(&b) }));
        flows.push((n, flow));
    }
    let refs: Vec<(usize, &MeanFieldFlow)> = flows.iter().map(|(n, f)| (*n, f)).collect();
    let ft = flow_table("lift_flow", &refs, &game);
    out.write(json!({ "game": game.name, "profile": profile_name(&game), "rows": body }), &[ft, budgets, totals])?;
    Ok(())
}

fn mfe_cmd(o: &Opts) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, "mfe", source)?;
    let eval = Evaluator::for_game(&game);
    let opts = SolveOpts { tol: o.tol, max_iter: o.max_iter, damping: o.damping, restarts: o.restarts, seed: o.seed };
    let rep = solve_mfe(&game, &eval, &opts)?;
    println!(
        "{} after {} iterations: mfr {} (start {})",
        if rep.converged { "converged" } else { "not converged" },
        rep.iterations,
        cell(rep.mfr),
        rep.start
    );
    let ft = flow_table("mfe_flow", &[(0, &rep.flow)], &game);
    let body = json!({
        "game": game.name,
        "converged": rep.converged,
        "mfr": num(rep.mfr),
        "iterations": rep.iterations,
        "damping": rep.damping,
        "restarts_used": rep.restarts_used,
        "start": rep.start,
        "tie_break": rep.tie_break,
        "flow": serde_json::to_value(&rep.flow).unwrap_or(Value::Null),
    });
    out.write(body, &[ft])?;
    Ok(())
}

fn simulate_cmd(o: &Opts) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, "simulate", source)?;
    let policy = game_policy(&game)?;
    let mut table = Table::new("simulate", &["n", "t", "mean_bl_to_lift", "se_bl_to_lift", "gap_bound"]);
    let mut body = Vec::new();
    for &n in &o.n {
        let profile = PolicyProfile::homogeneous(policy.clone(), n)?;
        let rows = empirical_gap(&game, &profile, o.reps.max(1), o.seed)?;
        for r in &rows {
            table.push(vec![n.to_string(), r.t.to_string(), cell(r.estimate), cell(r.se), cell(r.bound)]);
        }
        println!("N = {n}: mean BL per step {:?}", rows.iter().map(|r| r.estimate).collect::<Vec<_>>());
        body.push(json!({
            "n": n,
            "steps": rows.iter().map(|r| json!({
                "t": r.t, "estimate": num(r.estimate), "se": num(r.se), "bound": num(r.bound)
            })).collect::<Vec<_>>(),
        }));
    }
    out.write(json!({ "game": game.name, "profile": profile_name(&game), "rows": body }), &[table])?;
    Ok(())
}

fn concentration_cmd(o: &Opts) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, "concentration", source)?;
    let mut table = Table::new("concentration", &["n", "reps", "mc_estimate", "mc_se", "bound", "bound_j", "bound_n_j"]);
    let mut body = Vec::new();
    for &n in &o.n {
        let mus = vec![game.initial.clone(); n];
        let r = concentration(&game.states, &mus, o.reps, o.seed)?;
        table.push(vec![
            n.to_string(),
            r.reps.to_string(),
            cell(r.estimate),
            cell(r.se),
            cell(r.bound),
            r.j.to_string(),
            r.n_j.to_string(),
        ]);
        println!("N = {n}: estimate {} +- {}, bound {}", cell(r.estimate), cell(r.se), cell(r.bound));
        body.push(json!({
            "n": n, "estimate": num(r.estimate), "se": num(r.se), "bound": num(r.bound), "j": r.j, "n_j": r.n_j
        }));
    }
    out.write(json!({ "space": "states", "law": "initial", "rows": body }), &[table])?;
    Ok(())
}

fn example_cmd(o: &Opts) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, "example", source)?;
    let rows = regret_rows(o, &game)?;
    for r in &rows.body {
        println!("N = {}: avg player regret {}, lifted MFR {}", r["n"], r["avg_player_regret"], r["lifted_mfr"]);
    }
    let eval = Evaluator::for_game(&game);
    let opts = SolveOpts { tol: o.tol, max_iter: o.max_iter, damping: o.damping, restarts: o.restarts, seed: o.seed };
    let rep = solve_mfe(&game, &eval, &opts)?;
    println!("equilibrium search: mfr {} after {} iterations", cell(rep.mfr), rep.iterations);
    let ft = flow_table("mfe_flow", &[(0, &rep.flow)], &game);
    let body = json!({
        "game": game.name,
        "profile": profile_name(&game),
        "rows": rows.body,
        "mfe": {
            "converged": rep.converged,
            "mfr": num(rep.mfr),
            "iterations": rep.iterations,
            "flow": serde_json::to_value(&rep.flow).unwrap_or(Value::Null),
        },
    });
    out.write(body, &[rows.table, rows.budgets, ft])?;
    Ok(())
}

fn validate_cmd(o: &Opts) -> Run {
    let (game, source) = load(o)?;
    let out = output(o, "validate", source)?;
    let diags = validate_game(&game, o.reps, o.seed)?;
    let mut table = Table::new("validate", &["check", "worst_excess", "samples", "passed", "skipped"]);
    for d in &diags {
        table.push(vec![d.name.clone(), cell(d.worst_excess), d.samples.to_string(), d.passed.to_string(), d.skipped.to_string()]);
        let state = if d.skipped {
            "skipped"
        } else if d.passed {
            "ok"
        } else {
            "FAILED"
        };
        println!("{:<20} {state}", d.name);
    }
    let body = json!({
        "game": game.name,
        "checks": diags.iter().map(|d| json!({
            "name": d.name, "worst_excess": num(d.worst_excess), "samples": d.samples,
            "passed": d.passed, "skipped": d.skipped
        })).collect::<Vec<_>>(),
    });
    out.write(body, &[table])?;
    let failed: Vec<&str> = diags.iter().filter(|d| !d.passed).map(|d| d.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("validation failed: {}", failed.join(", "))))
    }
}

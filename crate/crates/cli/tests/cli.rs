use std::path::Path;
use std::process::{Command, Output};

use mfg_core::meanfield::{marginal_flow_of, mf_bellman};
use mfg_core::{builtin, Dist, Evaluator, PolicySpec};
use serde_json::Value;

fn mfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfg")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn csv_body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# manifest: "));
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn no_one_get_it_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfg(&["example", "no_one_get_it", "--n", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    let row = &r["report"]["rows"][0];
    assert_eq!(row["avg_player_regret"].as_f64().unwrap(), 0.0);
    assert!((row["lifted_mfr"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(row["budget"]["big_e"], "inf");
    assert_eq!(r["manifest"]["source"], "builtin:no_one_get_it");
}

#[test]
fn greedy_profile_has_no_regret() {
    let g = builtin("commute").unwrap();
    let e = Evaluator::for_game(&g);
    let u = PolicySpec::constant(Dist::uniform(3), g.horizon, 3).unwrap();
    let marg = marginal_flow_of(&g, &u).marginals();
    let (_, greedy) = mf_bellman(&g, &e, &marg, &g.terminal_vector(&Dist::uniform(3)).unwrap()).unwrap();
    let g = g.with_policy(Some(greedy)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.json");
    std::fs::write(&cfg, g.to_json().unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let out = mfg(&["regret", "--config", cfg.to_str().unwrap(), "--n", "2", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let row = &report(&out_dir)["report"]["rows"][0];
    for key in ["avg_player_regret", "max_player_regret", "avg_player_end_regret", "lifted_mfr"] {
        assert!(row[key].as_f64().unwrap().abs() < 1e-12, "{key}: {}", row[key]);
    }
}

#[test]
fn solver_runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = mfg(&["mfe", "--example", "crowd", "--tol", "1e-6", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert_eq!(ra["report"]["converged"], true);
    assert_eq!(ra["report"], rb["report"]);
    let name = "table_mfe_flow.csv";
    assert_eq!(csv_body(&a.path().join(name)), csv_body(&b.path().join(name)));
}

#[test]
fn csv_headers_cover_every_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfg(&["lift", "--example", "crowd", "--n", "2,3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().map_or(false, |e| e == "csv") {
            let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&p).unwrap();
            let width = rdr.headers().unwrap().len();
            assert!(width > 0);
            for rec in rdr.records() {
                assert_eq!(rec.unwrap().len(), width, "{}", p.display());
            }
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(mfg(&["regret", "--example", "commute", "--n", "14", "--out", o]).status.code(), Some(3));
    assert_eq!(mfg(&["regret", "--out", o]).status.code(), Some(2));
    assert_eq!(mfg(&["regret", "--example", "nope", "--out", o]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"horizon\": 1}").unwrap();
    assert_eq!(mfg(&["lift", "--config", bad.to_str().unwrap(), "--out", o]).status.code(), Some(2));
    assert_eq!(mfg(&["mfe", "--example", "crowd", "--damping", "0", "--out", o]).status.code(), Some(2));
    assert_eq!(mfg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_and_concentration_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert!(mfg(&["validate", "--example", "crowd", "--reps", "100", "--out", o]).status.success());
    assert!(dir.path().join("table_validate.csv").exists());
    assert!(mfg(&["concentration", "--example", "idle", "--n", "5,50", "--reps", "200", "--out", o]).status.success());
    let r = report(dir.path());
    for row in r["report"]["rows"].as_array().unwrap() {
        let est = row["estimate"].as_f64().unwrap();
        let se = row["se"].as_f64().unwrap();
        assert!(est <= row["bound"].as_f64().unwrap() + 3.0 * se);
    }
}

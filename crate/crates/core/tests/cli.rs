use std::path::Path;
use std::process::{Command, Output};

use repdyn::bifurcation::{Bracket, CurvePoint};
use repdyn::io::{grid_from_table, grid_table, JsonDoc, Table};

fn repdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repdyn")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = repdyn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn table(args: &[&str]) -> Table {
    Table::parse_csv(&ok(args)).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn hopf_beta_metadata() {
    let t = table(&["hopf", "--scenario", "beta", "--a", "0.8"]);
    let m: CurvePoint = t.meta_as("minimum").unwrap();
    assert!((m.value - 104.47).abs() <= 0.02 * 104.47);
    let asym: Vec<Bracket> = t.meta_as("asymptotes").unwrap();
    assert!(asym[0].contains(0.1));
    assert!(asym.iter().all(|b| b.width() <= 1e-3));
    assert_eq!(t.columns, ["rho", "tau_star"]);
}

#[test]
fn regions_fixture_cells() {
    let g = grid_from_table(&table(&["regions", "--a", "0.15"])).unwrap();
    assert_eq!(g.label_at(0.2, 0.8), Some(2));
    assert_eq!(g.label_at(0.9, 0.3), Some(3));
    assert_eq!(g.label_at(0.25, 0.9), Some(1));
}

#[test]
fn regions_round_trip_is_lossless() {
    let text = ok(&["regions", "--a", "0.3", "--n", "32"]);
    let t = Table::parse_csv(&text).unwrap();
    let g = grid_from_table(&t).unwrap();
    let mut again = grid_table(&g);
    again.meta.insert("config".into(), t.meta["config"].clone());
    assert_eq!(again, t);
    assert_eq!(again.to_csv_string(), text);
}

#[test]
fn areas_region4_nondecreasing() {
    let t = table(&["areas", "--a-values", "0.05:1.0:0.05", "--n", "128"]);
    assert_eq!(t.rows.len(), 20);
    let a4 = t.column("area4").unwrap();
    assert!(a4.windows(2).all(|w| w[1] >= w[0]), "{a4:?}");
}

#[test]
fn simulate_const_is_monotone_to_one() {
    let t = table(&["simulate", "--scenario", "const", "--a", "0.15", "--rho", "0.8", "--beta", "0.2", "--x0", "0.5"]);
    assert_eq!(t.columns, ["t", "x"]);
    let x = t.column("x").unwrap();
    assert!(x.windows(2).all(|w| w[1] >= w[0] - 2e-9));
    assert!(*x.last().unwrap() > 1.0 - 1e-6);
}

fn late_range(v: &[f64]) -> f64 {
    let tail = &v[v.len() / 2..];
    tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min)
}

#[test]
fn simulate_feedback_oscillates() {
    let t = table(&[
        "simulate", "--scenario", "beta", "--a", "0.8", "--rho", "0.2", "--tau-beta", "400", "--x0", "0.5", "--beta0",
        "0.5", "--t-end", "20000",
    ]);
    assert_eq!(t.columns, ["t", "x", "beta"]);
    assert!(late_range(&t.column("x").unwrap()) > 0.1);

    let t = table(&[
        "simulate", "--scenario", "both", "--a", "1.5", "--tau-rho", "1500", "--tau-beta", "1000", "--x0", "0.5",
        "--beta0", "0.5", "--rho0", "0.5", "--t-end", "60000",
    ]);
    assert_eq!(t.columns, ["t", "x", "beta", "rho"]);
    for c in ["x", "beta", "rho"] {
        assert!(late_range(&t.column(c).unwrap()) > 1e-2, "{c}");
    }
}

#[test]
fn equilibria_json_records() {
    let doc = JsonDoc::parse(&ok(&["equilibria", "--a", "0.15", "--rho", "0.9", "--beta", "0.25"])).unwrap();
    assert_eq!(doc.metadata["region"], 1);
    assert_eq!(doc.records.len(), 3);
    let interior: Vec<f64> = doc
        .records
        .iter()
        .filter(|r| r["kind"] == "interior")
        .map(|r| r["state"]["x"].as_f64().unwrap())
        .collect();
    assert!((interior[0] - 0.238594).abs() < 1e-5);
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"a": 0.3, "rho": 0.9, "beta": 0.25, "command": "equilibria"}"#).unwrap();
    let doc = JsonDoc::parse(&ok(&["equilibria", "--config", &cfg, "--a", "0.15"])).unwrap();
    assert_eq!(doc.metadata["config"]["a"], 0.15);
    assert_eq!(doc.metadata["config"]["rho"], 0.9);
    assert_eq!(doc.metadata["params"]["a"], 0.15);

    std::fs::write(&cfg, r#"{"a": 0.3, "colour": "red"}"#).unwrap();
    assert_eq!(repdyn(&["equilibria", "--config", &cfg]).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"a": 0.3, "command": "hopf"}"#).unwrap();
    assert_eq!(repdyn(&["equilibria", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(repdyn(&["hopf", "--scenario", "const", "--a", "0.8"]).status.code(), Some(2));
    assert_eq!(repdyn(&["simulate", "--a", "0.15", "--rho", "1.5", "--beta", "0.2"]).status.code(), Some(2));
    assert_eq!(repdyn(&["simulate", "--a", "0.15", "--rho", "0.5"]).status.code(), Some(2));
    assert_eq!(repdyn(&["frobnicate"]).status.code(), Some(2));
    let out = repdyn(&["simulate", "--a", "0.15", "--rho", "0.8", "--beta", "0.2", "--rtol", "0", "--atol", "1e-300"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    assert_eq!(repdyn(&["--help"]).status.code(), Some(0));
}

#[test]
fn abm_is_byte_identical_per_seed() {
    let args = ["abm", "--a", "0.15", "--rho", "0.9", "--beta", "0.25", "--population", "500", "--seed", "9"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let t = Table::parse_csv(&a).unwrap();
    assert_eq!(t.columns, ["generation", "x_hat"]);
    assert_eq!(t.rows.len(), 201);
    assert!(t.meta["report"]["rms"].as_f64().unwrap() < 0.2);
    let mut other = args.to_vec();
    other[10] = "10";
    assert_ne!(a, ok(&other));
}

#[test]
fn classify_independent_of_thread_count() {
    let args = ["classify", "--scenario", "rho", "--a", "0.5", "--nx", "6", "--ny", "3"];
    let run = |n: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_repdyn")).args(args).env("REPDYN_THREADS", n).output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
    let out = Command::new(env!("CARGO_BIN_EXE_repdyn")).args(args).env("REPDYN_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let grid = path(dir.path(), "grid.csv");
    ok(&["classify", "--scenario", "rho", "--a", "0.5", "--nx", "8", "--ny", "4", "--out", &grid]);
    let svg = path(dir.path(), "grid.svg");
    ok(&["plot", "--input", &grid, "--out", &svg]);
    let s1 = std::fs::read(&svg).unwrap();
    ok(&["plot", "--input", &grid, "--out", &svg]);
    assert_eq!(s1, std::fs::read(&svg).unwrap());
    let text = String::from_utf8(s1).unwrap();
    assert!(text.contains("version=\"1.1\""));
    let g = grid_from_table(&Table::read(Path::new(&grid)).unwrap()).unwrap();
    if g.labels.iter().any(|&c| g.is_multistable(c)) {
        assert!(text.contains("url(#hatch)"));
    }

    let hopf = path(dir.path(), "hopf.csv");
    ok(&["hopf", "--scenario", "rho", "--a", "1.5", "--n", "200", "--out", &hopf]);
    let hsvg = ok(&["plot", "--input", &hopf]);
    assert!(hsvg.contains("stroke-dasharray"));

    let empty = path(dir.path(), "empty.csv");
    std::fs::write(&empty, "# schema: hopf\nbeta,tau_star\n").unwrap();
    let target = path(dir.path(), "empty.svg");
    assert_ne!(repdyn(&["plot", "--input", &empty, "--out", &target]).status.code(), Some(0));
    assert!(!Path::new(&target).exists());

    let bad = path(dir.path(), "bad.csv");
    std::fs::write(&bad, "# schema: regions\nbeta,rho,label\n0.5,0.5,1\n").unwrap();
    assert_ne!(repdyn(&["plot", "--input", &bad]).status.code(), Some(0));
}

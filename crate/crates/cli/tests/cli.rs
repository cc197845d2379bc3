use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apartment"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap()
}

fn all_pass(v: &serde_json::Value) -> bool {
    v["checks"].as_array().unwrap().iter().all(|c| c["pass"].as_bool().unwrap())
}

#[test]
fn hitchin_roundtrip_example_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["hitchin-roundtrip", "--n", "4", "--trials", "100", "--seed", "0"];
    let o = run(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(dir.path().join("hitchin-roundtrip.csv")).unwrap();
    let s = summary(dir.path(), "hitchin-roundtrip");
    assert_eq!(s["command"], "hitchin-roundtrip");
    let rt = s["checks"].as_array().unwrap().iter().find(|c| c["name"] == "roundtrip").unwrap();
    assert!(rt["value"].as_f64().unwrap() <= 1e-8);
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 2);
    run(&args, dir.path());
    assert_eq!(first, fs::read(dir.path().join("hitchin-roundtrip.csv")).unwrap());
}

#[test]
fn flat_stability_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["flat-stability"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("flat-stability.csv")).unwrap();
    assert!(csv.starts_with("case,dim,index,min_eig\nflat-torus,50,0,"));
}

#[test]
fn monodromy_small_words() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["monodromy", "--density", "24", "--max-word", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("monodromy.csv")).unwrap();
    assert!(csv.contains("\nsqrt,1 0,1 0,1 0\n"));
    assert_eq!(csv.lines().count(), 1 + 2 + 4 + 16);
}

#[test]
fn p_surface_index_coarse() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["p-surface-index", "--resolution", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(all_pass(&summary(dir.path(), "p-surface-index")));
    for f in ["p-surface-index.csv", "p-surface-index_metrics.csv", "p-surface-index_cutoff.csv"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn decoupling_and_convergence_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["decoupling", "--grid-n", "65", "--r-list", "1,2,4", "--dump-fields", "true"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(fs::read_to_string(dir.path().join("decoupling_u_R4.csv")).unwrap().lines().count(), 65 * 65 + 1);
    let o = run(&["convergence", "--grid-n", "65", "--r-list", "1,2,4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("R,q_hr,q_f,diff,slope_so_far,commutator_term,decoupling_error\n"));
}

#[test]
fn failed_check_exits_one() {
    // Constant q: nothing decays, so the slope fit cannot pass.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["decoupling", "--grid-n", "33", "--r-list", "1,1.5,2", "--q", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!all_pass(&summary(dir.path(), "decoupling")));
}

#[test]
fn numerical_failure_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["decoupling", "--grid-n", "33", "--r-list", "1,1.5,2", "--tol", "1e-300"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let diag = fs::read_to_string(dir.path().join("decoupling_diagnostics.json")).unwrap();
    assert!(diag.contains("Newton") || diag.contains("converge"), "{diag}");
    assert!(!dir.path().join("decoupling.csv").exists());
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["decoupling", "--tol", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["convergence", "--r-list", "1,2,16"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["p-surface-index", "--resolution", "2"], dir.path()).status.code(), Some(2));
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"trials": 3, "unknown": true}"#).unwrap();
    let o = run(&["hitchin-roundtrip", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| e.unwrap().path().extension().is_some_and(|x| x == "json")));
}

#[test]
fn unknown_subcommand_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = run(&["frobnicate"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": [3], "trials": 5, "seed": 11}"#).unwrap();
    let o = run(&["hitchin-roundtrip", "--config", cfg.to_str().unwrap(), "--trials", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(dir.path(), "hitchin-roundtrip");
    assert_eq!(s["params"]["trials"], 7);
    assert_eq!(s["params"]["seed"], 11);
    assert_eq!(s["params"]["n"][0], 3);
}

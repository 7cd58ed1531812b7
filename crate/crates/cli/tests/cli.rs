use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ctbn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctbn")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ctbn(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn traj_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("traj_"))
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_writes_one_file_per_replicate() {
    let tmp = TempDir::new().unwrap();
    let out = p(tmp.path(), "sim");
    ok(&["simulate", "--m1", "--d", "20", "--T", "10", "--reps", "3", "--seed", "7", "--out", &out]);
    assert_eq!(traj_files(Path::new(&out)), ["traj_000.json", "traj_001.json", "traj_002.json"]);
    assert!(Path::new(&out).join("metadata.json").exists());

    let again = p(tmp.path(), "from_model");
    ok(&["simulate", "--model", &p(Path::new(&out), "model.json"), "--T", "5", "--out", &again]);
    assert_eq!(traj_files(Path::new(&again)).len(), 1);
}

#[test]
fn invalid_d_names_the_flag() {
    let tmp = TempDir::new().unwrap();
    let out = ctbn(&["simulate", "--m1", "--d", "1", "--T", "5", "--out", &p(tmp.path(), "x")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--d"));
    let out = ctbn(&["simulate", "--m1", "--T", "5", "--out", &p(tmp.path(), "x")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--d"));
}

#[test]
fn fit_on_jump_free_trajectory_is_empty() {
    let tmp = TempDir::new().unwrap();
    let traj = p(tmp.path(), "flat.json");
    fs::write(&traj, r#"{"d":3,"T":4.0,"initial":[0,1,0],"jumps":[]}"#).unwrap();
    let out = p(tmp.path(), "fit");
    ok(&["fit", &traj, "--out", &out]);
    assert_eq!(fs::read_to_string(Path::new(&out).join("edges.txt")).unwrap(), "");
}

#[test]
fn corrupt_trajectory_fails() {
    let tmp = TempDir::new().unwrap();
    let traj = p(tmp.path(), "bad.json");
    fs::write(&traj, "{\"d\": 3, \"T\": ").unwrap();
    let out = ctbn(&["fit", &traj, "--out", &p(tmp.path(), "fit")]);
    assert!(!out.status.success());
    assert!(!tmp.path().join("fit").join("metadata.json").exists());
}

#[test]
fn fit_recovers_chain_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let sim = p(tmp.path(), "sim");
    ok(&["simulate", "--m1", "--d", "3", "--T", "200", "--seed", "3", "--out", &sim]);
    let traj = p(Path::new(&sim), "traj_000.json");
    let a = p(tmp.path(), "a");
    let b = p(tmp.path(), "b");
    ok(&["--threads", "1", "fit", &traj, "--out", &a]);
    ok(&["--threads", "1", "fit", &traj, "--out", &b]);
    for name in ["paths.csv", "selections.json", "edges.txt", "stats.json", "metadata.json"] {
        let x = fs::read(Path::new(&a).join(name)).unwrap();
        let y = fs::read(Path::new(&b).join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let edges = fs::read_to_string(Path::new(&a).join("edges.txt")).unwrap();
    let lines: Vec<&str> = edges.lines().collect();
    assert!(lines.contains(&"0 1") && lines.contains(&"1 2"), "{edges}");
}

#[test]
fn fit_accepts_statistics_files() {
    let tmp = TempDir::new().unwrap();
    let sim = p(tmp.path(), "sim");
    ok(&["simulate", "--m1", "--d", "3", "--T", "40", "--reps", "2", "--out", &sim]);
    let t0 = p(Path::new(&sim), "traj_000.json");
    let t1 = p(Path::new(&sim), "traj_001.json");
    let pooled = p(tmp.path(), "pooled");
    ok(&["fit", &t0, &t1, "--out", &pooled]);
    let from_stats = p(tmp.path(), "from_stats");
    ok(&["fit", "--stats", &p(Path::new(&pooled), "stats.json"), "--out", &from_stats]);
    for name in ["paths.csv", "selections.json", "edges.txt"] {
        assert_eq!(
            fs::read(Path::new(&pooled).join(name)).unwrap(),
            fs::read(Path::new(&from_stats).join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn experiment_rejects_zero_reps() {
    let out = ctbn(&["experiment", "--m1", "--d", "5", "--T", "10", "--reps", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_writes_replicate_and_summary_rows() {
    let tmp = TempDir::new().unwrap();
    let out = p(tmp.path(), "exp");
    ok(&["experiment", "--m2", "--d", "8", "--T", "10", "--reps", "2", "--seed", "4", "--out", &out]);
    let reps = fs::read_to_string(Path::new(&out).join("reps.csv")).unwrap();
    let lines: Vec<&str> = reps.lines().collect();
    assert_eq!(lines[0], "model,d,T,rep,power,fdr,md,undirected_power,error");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("M2,8,10,0,"));
    let summary = fs::read_to_string(Path::new(&out).join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "model,d,T,reps,power,fdr,md,undirected_power,failures");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",0"));
}

#[test]
fn theory_reports_and_rejects() {
    let tmp = TempDir::new().unwrap();
    let sim = p(tmp.path(), "sim");
    ok(&["simulate", "--m1", "--d", "3", "--T", "1", "--out", &sim]);
    let model = p(Path::new(&sim), "model.json");
    let out = p(tmp.path(), "th");
    ok(&["theory", "--model", &model, "--xi", "2", "--epsilon", "0.1", "--out", &out]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&out).join("theory.json")).unwrap()).unwrap();
    for key in ["A_beta", "F_lower", "K", "T_min", "lambda_lo", "lambda_hi", "R", "zeta", "rho1"] {
        assert!(report[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert!(report["vacuous"].is_boolean());

    assert_eq!(ctbn(&["theory", "--model", &model, "--xi", "1"]).status.code(), Some(2));

    let m2 = p(tmp.path(), "m2");
    ok(&["simulate", "--m2", "--d", "5", "--T", "1", "--out", &m2]);
    let res = ctbn(&["theory", "--model", &p(Path::new(&m2), "model.json"), "--out", &p(tmp.path(), "t2")]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("unsupported model"));
}

#[test]
fn config_file_mirrors_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = p(tmp.path(), "run.toml");
    let out = p(tmp.path(), "sim");
    fs::write(&cfg, format!("threads = 1\n[simulate]\nm1 = true\nd = 4\nT = 3.0\nreps = 2\nout = {out:?}\n")).unwrap();
    ok(&["--config", &cfg, "simulate"]);
    assert_eq!(traj_files(Path::new(&out)).len(), 2);
    ok(&["--config", &cfg, "simulate", "--reps", "4"]);
    assert_eq!(traj_files(Path::new(&out)).len(), 4);

    fs::write(&cfg, "[simulate]\nbogus = 1\n").unwrap();
    assert!(!ctbn(&["--config", &cfg, "simulate", "--m1", "--d", "3", "--T", "1"]).status.success());
}

#[test]
fn config_seed_corpus_parses_as_expected() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/config_toml");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let parsed = ctbn_cli::config::parse_config(&text);
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        assert_eq!(parsed.is_ok(), !name.starts_with("bad_"), "{name}");
    }
}

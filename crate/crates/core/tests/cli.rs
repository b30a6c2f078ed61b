use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use branchprob::io::{read_matrix, read_matrix_csv};
use serde_json::Value;
use tempfile::TempDir;

const HSC: &str = r#"{"model":"hsc","rates":{"rho":0.125,"nu":0.104,"mu":0.147},"t":1.0,"init":[1,0]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_branchprob"))
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("model.json");
    fs::write(&p, text).unwrap();
    p
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(out).args(args).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(dir, &["--threads", threads, "solve", "--config", cfg.to_str().unwrap(), "--n", "16"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(a.join("S.bin")).unwrap(), fs::read(b.join("S.bin")).unwrap());
    let s = read_matrix(&a.join("S.bin")).unwrap();
    assert_eq!(s.n(), 16);
    assert!((s.sum() - 1.0).abs() < 1e-6);
    assert_eq!(manifest(&a)["pgf_evaluations"], 256);
}

#[test]
fn recover_with_full_sampling_reproduces_solve() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let cfg = cfg.to_str().unwrap();
    let o = run(tmp.path(), &["solve", "--config", cfg, "--n", "16"]);
    assert!(o.status.success());
    let truth = tmp.path().join("S.bin");
    let admm_flags = ["--lambda", "0", "--eps-abs", "1e-13", "--eps-rel", "1e-13", "--d1-exp", "0", "--d2-exp", "0"];
    let pgd_flags = ["--lambda", "0", "--tol", "1e-14"];
    for solver in ["admm", "pgd"] {
        let out = tmp.path().join(solver);
        let mut args = vec!["recover", "--config", cfg, "--n", "16", "--m", "16", "--solver", solver];
        args.extend(["--truth", truth.to_str().unwrap()]);
        args.extend(if solver == "admm" { &admm_flags[..] } else { &pgd_flags[..] });
        let o = run(&out, &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&out);
        let err = m["metrics"]["eps_rel_l2"].as_f64().unwrap();
        assert!(err < 1e-6, "{solver}: {err}");
        assert_eq!(m["pgf_evaluations"], 256);
        assert!(out.join("S_hat.bin").exists() && out.join("report.json").exists());
    }
}

#[test]
fn recover_evaluates_only_the_sampled_points() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let o = run(tmp.path(), &["recover", "--config", cfg.to_str().unwrap(), "--n", "32", "--m", "7", "--seed", "4"]);
    assert!(o.status.success());
    let m = manifest(tmp.path());
    assert!(m["pgf_evaluations"].as_u64().unwrap() <= 49);
    assert_eq!(m["indices"].as_array().unwrap().len(), 7);
    assert_eq!(m["seed"], 4);
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["solver"], "admm");
}

#[test]
fn csv_format_round_trips() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let o = run(tmp.path(), &["--format", "csv", "solve", "--config", cfg.to_str().unwrap(), "--n", "8"]);
    assert!(o.status.success());
    let s = read_matrix_csv(&fs::read_to_string(tmp.path().join("S.csv")).unwrap()).unwrap();
    assert_eq!(s.n(), 8);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let good = config(tmp.path(), HSC);
    let good = good.to_str().unwrap();
    assert_eq!(run(tmp.path(), &["solve"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["solve", "--config", "/nonexistent.json", "--n", "8"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["recover", "--config", good, "--n", "8", "--m", "9"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["--help"]).status.code(), Some(0));

    let starved = tmp.path().join("starved.json");
    fs::write(
        &starved,
        r#"{"model":"hsc","rates":{"rho":0.125,"nu":0.104,"mu":0.147},"t":1.0,"init":[1,0],"ode":{"atol":1e-10,"rtol":1e-10,"max_steps":1}}"#,
    )
    .unwrap();
    let o = run(tmp.path(), &["solve", "--config", starved.to_str().unwrap(), "--n", "8"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_csv_columns_and_single_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let o = run(
        tmp.path(),
        &["sweep", "--config", cfg.to_str().unwrap(), "--n", "16", "--param", "beta", "--grid", "list:0.08"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,eps_rel_l2,iterations,wall_time,converged,error");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.08,"));
}

#[test]
fn bench_has_one_row_per_size_and_solver() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let o = run(tmp.path(), &["bench", "--config", cfg.to_str().unwrap(), "--n-list", "8,16", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n,m,solver,trials,median_wall_time,median_eps_rel_l2,median_iterations,median_time_per_iter,all_converged,all_matched"
    );
    let solvers: Vec<(&str, &str)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0], f[2])
        })
        .collect();
    assert_eq!(solvers, [("8", "pgd"), ("8", "admm"), ("16", "pgd"), ("16", "admm")]);
    assert_eq!(manifest(tmp.path())["extra"]["trials"].as_array().unwrap().len(), 8);
}

#[test]
fn oracle_writes_probabilities_and_truncation_mass() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), HSC);
    let o = run(tmp.path(), &["oracle", "--config", cfg.to_str().unwrap(), "--n-trunc", "12"]);
    assert!(o.status.success());
    let p = read_matrix(&tmp.path().join("oracle.bin")).unwrap();
    let mass = manifest(tmp.path())["extra"]["truncation_mass"].as_f64().unwrap();
    assert!((p.sum() + mass - 1.0).abs() < 1e-10);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fimp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fimp")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fimp-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fimp(&[]).status.code(), Some(2));
    assert_eq!(fimp(&["bogus"]).status.code(), Some(2));
    assert_eq!(fimp(&["srs-theory", "--p", "10", "--q", "5", "--r", "2", "--trees", "3"]).status.code(), Some(2));
    assert_eq!(fimp(&["gen", "--problem", "digit", "--exact"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let out = fimp(&["importance", "--oracle", "--dist", "/nonexistent/d.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/d.json"));
}

#[test]
fn oracle_importances_and_config_override() {
    let dir = scratch("oracle");
    let dist = dir.join("digit.json");
    assert!(fimp(&["gen", "--problem", "digit", "--out", s(&dist)]).status.success());
    let out = fimp(&["importance", "--oracle", "--dist", s(&dist), "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "variable,score,k0,k1,k2,k3,k4,k5,k6");
    assert!(lines.next().unwrap().starts_with("X1,0.4127,0.1031,"));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("# fimp importance {"));

    let config = dir.join("config.json");
    std::fs::write(&config, r#"{"format":"markdown","decimals":2}"#).unwrap();
    let out = fimp(&["importance", "--oracle", "--dist", s(&dist), "--config", s(&config), "--decimals", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("| variable | score |"));
    assert!(text.contains("| X1 | 0.413 | 0.103 |"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn srs_theory_table() {
    let out = fimp(&["srs-theory", "--p", "10000", "--q", "100", "--r", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("chaining,SRS,10000,100,2,200.0000,200.0000"));
    assert!(text.contains("clique,SRS,10000,100,2,10302.0000,10302.0000"));
}

#[test]
fn network_pipeline() {
    let dir = scratch("net");
    let (series, truth, scores) = (dir.join("s.csv"), dir.join("t.csv"), dir.join("sc.csv"));
    let out = fimp(&[
        "gen", "--problem", "network", "--nodes", "12", "--density", "0.15", "--steps", "800", "--seed", "3",
        "--out", s(&series), "--truth", s(&truth),
    ]);
    assert!(out.status.success());
    assert!(fimp(&["netinfer", "--series", s(&series), "--method", "pc", "--filter", "f1", "--out", s(&scores)])
        .status
        .success());
    let out = fimp(&["eval", "--scores", s(&scores), "--truth", s(&truth), "--series", s(&series)]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[3], 132.0);
    assert!(row[0] > 0.8, "auroc {}", row[0]);
    std::fs::remove_dir_all(dir).unwrap();
}

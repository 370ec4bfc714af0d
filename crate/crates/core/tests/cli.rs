//! End-to-end runs of the gradlab binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use gradlab::cli::report::HEADER;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradlab"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn verify_constant_exits_zero_with_exact_header() {
    let out = run(&["verify", config("constant.ini").to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    for line in lines {
        assert_eq!(line.split(',').count(), 17, "{line}");
        assert!(line.starts_with("constant,"));
    }
}

#[test]
fn failing_lemma_exits_one() {
    let out = run(&["verify", config("thm1_case1.ini").to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_config_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    std::fs::write(&path, "[geometry]\nn = 3\nR = 1\nbogus = 2\n").unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    std::fs::write(&path, "[coefficients]\na = constant:-2\n[checks]\nrun = thm1-case1\n").unwrap();
    assert_eq!(code(&run(&["verify", path.to_str().unwrap()])), 3);
    assert_eq!(code(&run(&["verify", dir.path().join("missing.ini").to_str().unwrap()])), 3);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&["verify", config("schrodinger_zero.ini").to_str().unwrap(), "--quiet", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with(HEADER));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn sweep_orders_rows_by_grid() {
    let out = run(&["sweep", config("constant.ini").to_str().unwrap(), "--param", "R=5,10,20", "--quiet"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let mut seen: Vec<&str> = ids.clone();
    seen.dedup();
    assert_eq!(seen, ["constant[R=5]", "constant[R=10]", "constant[R=20]"]);
}

#[test]
fn solve_elliptic_prints_profile() {
    let out = run(&["solve-elliptic", config("constant.ini").to_str().unwrap(), "--quiet", "--grid", "64"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,u");
    assert_eq!(lines.len(), 66);
    let u: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((u - std::f64::consts::E).abs() < 1e-10);
}

#[test]
fn solve_parabolic_prints_check_times() {
    let out = run(&["solve-parabolic", config("heat.ini").to_str().unwrap(), "--quiet", "--grid", "64"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let times: std::collections::BTreeSet<String> =
        text.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(times.len(), 3);
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

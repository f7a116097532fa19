use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ssmm::format::{self, AnyMatrix};

fn ssmm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssmm"))
        .current_dir(dir)
        .env_remove("SSMM_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')))
        .map(str::trim)
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn gen_then_multiply_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ssmm(dir.path(), &["gen", "hard", "--N", "1024", "--Z", "256", "--seed", "4"]);
    assert!(gen.status.success(), "{gen:?}");
    for algo in ["naive", "cmm", "auto"] {
        let out = ssmm(
            dir.path(),
            &["multiply", "A.ssmm", "C.ssmm", "--algo", algo, "--verify", "--out", "P.ssmm", "--csv", "r.csv"],
        );
        assert!(out.status.success(), "{algo}: {out:?}");
        let text = stdout(&out);
        assert_eq!(field(&text, "correct"), "exact");
        assert_eq!(field(&text, "emitted"), "256");
        let product = format::load_any(&dir.path().join("P.ssmm")).unwrap();
        assert!(matches!(&product, AnyMatrix::Int64(m) if m.entries.len() == 256));
        let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), ssmm::bench::CSV_HEADER.join(","));
        assert!(lines.next().unwrap().ends_with(",exact"));
    }
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_ssmm"))
            .current_dir(dir.path())
            .env("SSMM_SEED", seed)
            .args(["gen", "--a-out", name, "--c-out", "c.ssmm", "random", "--U", "20", "--nnz", "30"])
            .status()
            .unwrap();
        assert!(status.success());
        fs::read_to_string(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("7", "x.ssmm"), run("7", "y.ssmm"));
    assert_ne!(run("7", "x.ssmm"), run("8", "y.ssmm"));
}

#[test]
fn every_semiring_round_trips_through_multiply() {
    let dir = tempfile::tempdir().unwrap();
    for semiring in ["int64", "bool", "tropical"] {
        let gen = ssmm(dir.path(), &["gen", "random", "--U", "40", "--nnz", "200", "--semiring", semiring]);
        assert!(gen.status.success());
        let out = ssmm(dir.path(), &["multiply", "A.ssmm", "C.ssmm", "--M", "512", "--B", "16", "--verify"]);
        assert!(out.status.success(), "{semiring}: {out:?}");
        assert_eq!(field(&stdout(&out), "correct"), "exact");
    }
}

#[test]
fn estimate_prints_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ssmm(dir.path(), &["gen", "cancel", "--U", "64", "--pairs", "16"]).status.success());
    let out = ssmm(dir.path(), &["estimate", "A.ssmm", "C.ssmm", "--columns"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let z: f64 = field(&text, "Z_hat").parse().unwrap();
    assert!(z >= 0.0);
    let header = text.lines().position(|l| l == "col,z_hat").unwrap();
    assert_eq!(text.lines().count() - header - 1, 64);
}

#[test]
fn bench_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssmm(
        dir.path(),
        &["bench", "--kind", "hard", "--N", "1024", "--Z", "64,256", "--M", "2048,4096", "--seeds", "0..2", "--out", "b.csv"],
    );
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    // 2 Z x 2 M x 2 algorithms x 2 seeds
    assert_eq!(csv.lines().count(), 1 + 16);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",exact")));
}

#[test]
fn usage_and_format_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ssmm(dir.path(), &["multiply"]).status.code(), Some(2));
    fs::write(dir.path().join("bad.ssmm"), "SSMM 1\nint64 2 1\n0 0\n").unwrap();
    assert_eq!(ssmm(dir.path(), &["multiply", "bad.ssmm", "bad.ssmm"]).status.code(), Some(2));
    assert!(ssmm(dir.path(), &["gen", "random", "--U", "8", "--nnz", "4"]).status.success());
    assert_eq!(ssmm(dir.path(), &["estimate", "A.ssmm", "C.ssmm", "--eps", "1"]).status.code(), Some(2));
    assert_eq!(ssmm(dir.path(), &["bench", "--kind", "hard", "--N", "64", "--Z", "4", "--seeds", "x"]).status.code(), Some(2));
}

#[test]
fn invalid_machine_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ssmm(dir.path(), &["gen", "random", "--U", "8", "--nnz", "4"]).status.success());
    let out = ssmm(dir.path(), &["multiply", "A.ssmm", "C.ssmm", "--M", "8", "--B", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn unreadable_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssmm(dir.path(), &["multiply", "missing.ssmm", "missing.ssmm"]);
    assert_eq!(out.status.code(), Some(1));
}

//! End-to-end tests of the command-line driver against the shipped corpus.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dufloq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(file: &str, args: &[&str]) -> Output {
    let path = corpus(file);
    let mut full = vec![args[0].to_string(), path.to_string_lossy().into_owned()];
    full.extend(args[1..].iter().map(|s| s.to_string()));
    Command::new(env!("CARGO_BIN_EXE_dufloq"))
        .args(&full)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_corpus_passes() {
    for name in [
        "abelian1.alg",
        "abelian2.alg",
        "abelian3.alg",
        "heisenberg.alg",
        "solv2.alg",
        "sl2.alg",
        "gl2.alg",
        "super11.alg",
        "dgla2.alg",
        "derham1.q",
        "derham2.q",
    ] {
        let out = run_on(name, &["validate"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
    }
}

#[test]
fn validate_rejects_malformed_input() {
    let dir = std::env::temp_dir().join("dufloq-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("malformed.alg");
    std::fs::write(&bad, "basis: a:0, b:0\n[a,b = a\n").unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn validate_fails_on_broken_bracket() {
    let dir = std::env::temp_dir().join("dufloq-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    // [e1,e2] = e1, [e1,e3] = e2 violates the Jacobi identity
    let bad = dir.join("nonjacobi.alg");
    std::fs::write(
        &bad,
        "basis: e1:0, e2:0, e3:0\n[e1,e2] = e1\n[e1,e3] = e2\n",
    )
    .unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("Jacobi"));
}

#[test]
fn duflo_examples() {
    let out = run_on("sl2.alg", &["duflo", "--max-degree", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("naive symmetrization fails"));

    let out = run_on("heisenberg.alg", &["duflo"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("strange automorphism = identity"));

    let out = run_on("abelian2.alg", &["duflo"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("strange automorphism = identity"));
}

#[test]
fn cohomology_tables() {
    let out = run_on("sl2.alg", &["cohomology", "--type", "ce"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for line in [
        "degree 0: dimension 1",
        "degree 1: dimension 0",
        "degree 2: dimension 0",
        "degree 3: dimension 1",
    ] {
        assert!(text.contains(line), "missing `{line}` in:\n{text}");
    }

    // the Hochschild table matches the polyvector table on the same window
    let hh = run_on(
        "solv2.alg",
        &["cohomology", "--type", "hochschild", "--window", "0..2", "--cap", "3"],
    );
    let tp = run_on(
        "solv2.alg",
        &["cohomology", "--type", "tpoly", "--window", "0..2", "--cap", "3", "--truncation", "3"],
    );
    assert_eq!(hh.status.code(), Some(0));
    assert_eq!(tp.status.code(), Some(0));
    let dims = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.contains("dimension"))
            .map(|l| l.trim().to_string())
            .collect()
    };
    assert_eq!(dims(&stdout(&hh)), dims(&stdout(&tp)));

    let out = run_on(
        "abelian1.alg",
        &["cohomology", "--type", "tpoly", "--window", "0..2", "--cap", "3", "--truncation", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
    // zero differential: dimensions count the truncated monomial basis
    assert!(stdout(&out).contains("degree 0: dimension 4"));
}

#[test]
fn theorem7_and_lemmas() {
    let out = run_on("solv2.alg", &["theorem7", "--window", "0..2", "--cap", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("pass"));

    let out = run_on("sl2.alg", &["lemma", "--which", "5.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let out = run_on("sl2.alg", &["lemma", "--which", "3.3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let out = run_on("dgla2.alg", &["lemma", "--which", "corollary4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("identical"));
}

#[test]
fn dimension_cap_exit_code() {
    let path = corpus("solv2.alg");
    let out = Command::new(env!("CARGO_BIN_EXE_dufloq"))
        .args(["theorem7", path.to_str().unwrap()])
        .env("DUFLOQ_DIM_CAP", "5")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_reports_are_deterministic() {
    let path = corpus("abelian1.alg");
    let args = ["theorem7", path.to_str().unwrap(), "--json", "-"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let json_start = text.find('{').expect("JSON present");
    let v: serde_json::Value = serde_json::from_str(&text[json_start..]).expect("valid JSON");
    assert_eq!(v["schema"], "dufloq-report/1");
    assert_eq!(v["passed"], true);
}

#[test]
fn q_structure_input() {
    let out = run_on("derham2.q", &["cohomology", "--type", "tpoly", "--window", "0..1", "--cap", "2", "--truncation", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let out = run_on("derham1.q", &["lemma", "--which", "5.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

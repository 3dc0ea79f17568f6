//! Byte-level reproducibility of every subcommand: identical flags and
//! seed must give identical stdout and identical output files, and the
//! verify exit code must reflect the verdict.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn seppath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seppath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_identical_runs(args: &[&str]) -> Output {
    let a = seppath(args);
    let b = seppath(args);
    assert_eq!(
        a.stdout, b.stdout,
        "stdout differs between identical runs of {args:?}"
    );
    assert_eq!(a.status.code(), b.status.code(), "exit code differs");
    a
}

fn write_clique(path: &Path, n: usize) {
    let mut text = String::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            text.push_str(&format!("{u} {v}\n"));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn bounds_is_reproducible() {
    let out = assert_identical_runs(&["bounds", "--n", "100", "--alpha", "0.5", "--eps", "0.1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("general_lower_bound:"));
    assert!(text.contains("clique_lower_bound: 100"));
}

#[test]
fn construct_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    let run = |out: &Path| {
        let args = [
            "construct",
            "--family",
            "clique",
            "--n",
            "40",
            "--eps",
            "0.2",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ];
        seppath(&args)
    };
    let a = run(&out_a);
    let b = run(&out_b);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "construct stdout must be reproducible");
    let file_a = fs::read(&out_a).unwrap();
    let file_b = fs::read(&out_b).unwrap();
    assert_eq!(file_a, file_b, "path-system files must be byte-identical");

    // The written system passes strong verification against the host.
    let graph = dir.path().join("k40.txt");
    write_clique(&graph, 40);
    let v = assert_identical_runs(&[
        "verify",
        "--graph",
        graph.to_str().unwrap(),
        "--paths",
        out_a.to_str().unwrap(),
        "--mode",
        "strong",
    ]);
    assert!(v.status.success());
    assert!(String::from_utf8(v.stdout).unwrap().contains("\"ok\": true"));

    // A broken system exits nonzero: drop the first path.
    let text = fs::read_to_string(&out_a).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let paths = doc["paths"].as_array_mut().unwrap();
    paths.remove(0);
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();
    let bad = seppath(&[
        "verify",
        "--graph",
        graph.to_str().unwrap(),
        "--paths",
        tampered.to_str().unwrap(),
        "--mode",
        "strong",
    ]);
    assert_eq!(bad.status.code(), Some(1), "violations must exit 1");
    assert!(String::from_utf8(bad.stdout)
        .unwrap()
        .contains("\"ok\": false"));
}

#[test]
fn oracle_is_reproducible_on_tiny_cliques() {
    let dir = tempfile::tempdir().unwrap();
    let k4 = dir.path().join("k4.txt");
    write_clique(&k4, 4);
    let out = assert_identical_runs(&["oracle", "--graph", k4.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("exact_ssp: "), "got: {text}");
}

#[test]
fn bench_csv_is_reproducible_without_timings() {
    let dir = tempfile::tempdir().unwrap();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let run = |csv: &Path| {
        seppath(&[
            "bench",
            "--family",
            "clique",
            "--sizes",
            "40",
            "--trials",
            "1",
            "--seed",
            "9",
            "--csv",
            csv.to_str().unwrap(),
        ])
    };
    let a = run(&csv_a);
    let b = run(&csv_b);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    let bytes_a = fs::read(&csv_a).unwrap();
    let bytes_b = fs::read(&csv_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "CSV must be byte-identical by default");
    let text = String::from_utf8(bytes_a).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("family,n,trial,"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("clique,40,0,"));
    // Default runs zero the wall-time column.
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[15], "0", "wall_ms must be zeroed without --timings");
    assert_eq!(cols[14], "true", "row must be verified");
}

#[test]
fn certify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let k12 = dir.path().join("k12.txt");
    write_clique(&k12, 12);
    let out = assert_identical_runs(&[
        "certify",
        "--graph",
        k12.to_str().unwrap(),
        "--delta",
        "0.5",
        "--L",
        "1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"mode\": \"exact\""));

    // Sampled mode is seeded internally, so it reproduces too.
    let sampled = assert_identical_runs(&[
        "certify",
        "--graph",
        k12.to_str().unwrap(),
        "--delta",
        "0.5",
        "--L",
        "1",
        "--sampled",
        "10",
    ]);
    assert!(sampled.status.success());

    // An unsatisfiable demand is a clean failure.
    let fail = seppath(&[
        "certify",
        "--graph",
        k12.to_str().unwrap(),
        "--delta",
        "2.0",
        "--L",
        "1",
    ]);
    assert_eq!(fail.status.code(), Some(1));
}

// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn revcirc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revcirc"))
        .args(args)
        .env_remove("REVCIRC_SEED")
        .output()
        .expect("spawn revcirc")
}

fn ok(args: &[&str]) -> String {
    let out = revcirc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn rerun_from_manifest_reproduces_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    ok(&["recipe", "fig7", "--samples", "3000", "--seed", "11", "--workers", "1", "--out", p(&first)]);
    let manifest = first.join("manifest.json");
    ok(&["rerun", p(&manifest), "--workers", "4", "--out", p(&second)]);

    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(saved["params"]["seed"], 11);
    assert_eq!(saved["params"]["samples_per_length"], 3000);
    let files = saved["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f.as_str().unwrap();
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_revcirc"));
        cmd.args(["sample", "--lengths", "10", "--samples", "500"]);
        match seed {
            Some(s) => cmd.env("REVCIRC_SEED", s),
            None => cmd.env_remove("REVCIRC_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let flagged = ok(&["sample", "--lengths", "10", "--samples", "500", "--seed", "42"]);
    assert_eq!(run(Some("42")), flagged.as_bytes());
    assert_ne!(run(None), flagged.as_bytes());
}

#[test]
fn sample_output_is_worker_independent() {
    let a = ok(&["sample", "--lengths", "5,50", "--samples", "4000", "--workers", "1"]);
    let b = ok(&["sample", "--lengths", "5,50", "--samples", "4000", "--workers", "3"]);
    assert_eq!(a, b);
    assert!(a.starts_with("length,fitness,count"), "{a}");
    let total: u64 = a
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("50,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 4000);
}

#[test]
fn minscan_finds_nothing_up_to_length_three() {
    let csv = ok(&["minscan", "--max-length", "3"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "length,circuits,solutions,best_fitness,example");
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "0", "{row}");
    }
    assert!(rows[2].starts_with("1,90,0,"));
}

#[test]
fn ga_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ga");
    let summary = ok(&[
        "ga", "--wires", "6", "--gates", "6", "--runs", "2", "--pop", "100", "--gens", "30", "--seed", "5", "--out",
        p(&out),
    ]);
    let summary: serde_json::Value = serde_json::from_str(summary.trim()).unwrap();
    assert_eq!(summary["runs"], 2);
    let log = fs::read_to_string(out.join("runs.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2 * 30);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["run"].as_u64().unwrap() < 2);
    }
    let solutions = fs::read_to_string(out.join("solutions.txt")).unwrap();
    assert_eq!(solutions.lines().count() as u64, summary["solved"].as_u64().unwrap());
}

#[test]
fn limit_and_target_print_tables() {
    let limit = ok(&["limit", "--wires", "6"]);
    let mass: f64 = limit.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    let target = ok(&["target"]);
    assert!(target.lines().count() >= 64);
}

#[test]
fn errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let bad_out = blocker.join("out.csv");
    let out = revcirc(&["sample", "--lengths", "5", "--samples", "10", "--out", p(&bad_out)]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    let out = revcirc(&["sample", "--wires", "4"]);
    assert!(!out.status.success());

    let out = revcirc(&["rerun", p(&dir.path().join("missing.json")), "--out", p(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = revcirc(&["recipe", "fig99"]);
    assert!(!out.status.success());
}

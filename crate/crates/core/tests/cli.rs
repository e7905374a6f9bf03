// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use clap::Parser;
use offload_core::cli::{execute, Cli};
use offload_core::fixtures;

fn offload(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("offload").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    execute(cli, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn read_dir(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn profile_writes_two_trees_per_input_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        offload(&["profile", "--workload", "scan", "--runs", "3", "--out", dir.to_str().unwrap()]);
    }
    let files = read_dir(&a);
    let trees = files.iter().filter(|(n, _)| n.ends_with(".tree")).count();
    assert_eq!(trees, 6);
    let model = &files.iter().find(|(n, _)| n == "model.txt").unwrap().1;
    assert_eq!(model.lines().filter(|l| l.starts_with("execution ")).count(), 3);
    assert_eq!(files, read_dir(&b));
}

#[test]
fn partition_then_run_through_a_database() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let prof = dir.join("prof");
    let db = dir.join("search.db");
    let (prof_s, db_s) = (prof.to_str().unwrap(), db.to_str().unwrap());
    offload(&["profile", "--workload", "search", "--size", "medium", "--out", prof_s]);
    let model = prof.join("model.txt");
    let model_s = model.to_str().unwrap();
    let wifi = offload(&["partition", "--workload", "search", "--model", model_s, "--net", "wifi", "--db", db_s]);
    assert!(wifi.contains("Offload"), "{wifi}");
    let first = fs::read_to_string(&db).unwrap();
    offload(&["partition", "--workload", "search", "--model", model_s, "--net", "wifi", "--db", db_s]);
    assert_eq!(fs::read_to_string(&db).unwrap(), first);
    offload(&["partition", "--workload", "search", "--model", model_s, "--net", "3g", "--db", db_s]);
    assert!(fs::read_to_string(&db).unwrap().contains("PARTITION 3g"));

    let local = offload(&["run", "--workload", "search", "--size", "medium", "--no-migrate"]);
    let remote = offload(&["run", "--workload", "search", "--size", "medium", "--db", db_s, "--net", "wifi"]);
    let out = |s: &str| s.lines().next().unwrap().to_string();
    assert_eq!(out(&local), out(&remote));
    assert!(remote.contains("partition Offload migrations 1"), "{remote}");

    let missing = offload(&["run", "--workload", "search", "--size", "medium", "--db", dir.join("none.db").to_str().unwrap()]);
    assert!(missing.contains("partition Local migrations 0"));
}

#[test]
fn tiny_program_file_stays_local_on_3g() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("tri.prog");
    fs::write(&src, fixtures::CALL_TRIANGLE).unwrap();
    let prof = tmp.path().join("prof");
    let src_s = src.to_str().unwrap();
    offload(&["profile", "--program", src_s, "--input", "0", "--input", "1", "--out", prof.to_str().unwrap()]);
    let emit = tmp.path().join("tri.3g.prog");
    let line = offload(&[
        "partition",
        "--program",
        src_s,
        "--model",
        prof.join("model.txt").to_str().unwrap(),
        "--net",
        "3g",
        "--db",
        tmp.path().join("tri.db").to_str().unwrap(),
        "--emit",
        emit.to_str().unwrap(),
    ]);
    assert!(line.starts_with("tri on 3g: Local"), "{line}");
    assert!(!fs::read_to_string(&emit).unwrap().contains("MIGRATE"));
}

#[test]
fn compare_prints_one_row_per_size_and_network() {
    let table = offload(&["compare", "--workload", "search"]);
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        if row.contains("Local") {
            assert!(row.contains(" 1.00 "), "{row}");
        }
    }
    assert_eq!(table, offload(&["compare", "--workload", "search"]));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(Cli::try_parse_from(["offload", "run"]).is_err());
    assert!(Cli::try_parse_from(["offload", "run", "--workload", "scan", "--net", "carrier-pigeon"]).is_err());
    assert!(Cli::try_parse_from(["offload", "compare", "--size", "huge"]).is_err());
}

//! Command-line behaviour: exit codes, help coverage, and file round-trips
//! through the binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::tiny_spec;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fleet")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, seed: u64) {
    std::fs::write(dir.join("spec.toml"), toml::to_string(&tiny_spec(seed)).unwrap()).unwrap();
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--no-such-flag"), "error must name the flag: {err}");

    let out = run_in(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "missing.toml", "--out", "x.toml", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.path().join("garbage.toml"), "not really toml [").unwrap();
    let out = run_in(dir.path(), &["solve", "garbage.toml", "--out", "x.toml", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_size_limit_exits_with_two_and_names_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec(1);
    spec.task_count = 7;
    std::fs::write(dir.path().join("spec.toml"), toml::to_string(&spec).unwrap()).unwrap();
    let out = run_in(dir.path(), &["gen", "--spec", "spec.toml", "--out", "scen.toml"]);
    assert!(out.status.success());
    let out = run_in(dir.path(), &["oracle", "scen.toml", "--max-tasks", "6"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("size exceeded"), "unexpected message: {err}");
}

#[test]
fn help_exits_zero_and_covers_every_flag() {
    let subcommands: &[(&str, &[&str])] = &[
        ("gen", &["--spec", "--out", "--seed"]),
        (
            "solve",
            &[
                "--out",
                "--seed",
                "--log-iterations",
                "--k",
                "--n-r",
                "--n-t",
                "--p-removal",
                "--p-discount",
                "--noise-max",
                "--sa-t0",
                "--sa-cooling",
                "--discount-denominator",
            ],
        ),
        ("greedy", &["--out", "--seed", "--trace", "--k"]),
        ("random", &["--out", "--seed", "--k"]),
        ("oracle", &["--out", "--max-tasks", "--max-base-fleet", "--max-states"]),
        ("export-milp", &["--out"]),
        ("experiment", &["--spec", "--out-dir"]),
        ("report", &["--out"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (sub, flags) in subcommands {
        let out = run_in(dir.path(), &[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub} --help must exit 0");
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in *flags {
            assert!(text.contains(flag), "{sub} --help does not document {flag}");
        }
    }
}

#[test]
fn solver_flags_are_exactly_the_documented_set() {
    // Guards against undocumented flags sneaking in: the help output of
    // `solve` must list precisely these long options.
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut found: Vec<String> = text
        .split_whitespace()
        .filter(|tok| tok.starts_with("--"))
        .map(|tok| tok.trim_end_matches("...").to_string())
        .collect();
    found.sort();
    found.dedup();
    let mut expected: Vec<String> = [
        "--out",
        "--seed",
        "--log-iterations",
        "--k",
        "--n-r",
        "--n-t",
        "--p-removal",
        "--p-discount",
        "--noise-max",
        "--sa-t0",
        "--sa-cooling",
        "--discount-denominator",
        "--verbose",
        "--help",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    expected.sort();
    assert_eq!(found, expected);
}

#[test]
fn files_written_by_the_cli_reload_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(dir.path(), 6);
    assert!(run_in(dir.path(), &["gen", "--spec", "spec.toml", "--out", "scen.toml"])
        .status
        .success());
    assert!(run_in(
        dir.path(),
        &["solve", "scen.toml", "--seed", "3", "--out", "sol.toml", "--k", "60"]
    )
    .status
    .success());
    assert!(run_in(dir.path(), &["export-milp", "scen.toml", "--out", "model.lp"])
        .status
        .success());

    let (problem, _) = fleet_core::scenarios::load_scenario(&dir.path().join("scen.toml")).unwrap();
    let (solution, file) =
        fleet_core::scenarios::load_solution(&dir.path().join("sol.toml"), &problem).unwrap();
    assert_eq!(solution.visit_count(), file.reward);
    let lp_text = std::fs::read_to_string(dir.path().join("model.lp")).unwrap();
    let model = fleet_core::exact::parse_lp(&lp_text).unwrap();
    assert!(model.references_are_declared());
}

#[test]
fn seed_is_printed_even_when_drawn_from_entropy() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(dir.path(), 6);
    run_in(dir.path(), &["gen", "--spec", "spec.toml", "--out", "scen.toml"]);
    let out = run_in(dir.path(), &["solve", "scen.toml", "--out", "sol.toml", "--k", "40"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let seed_line = stdout.lines().find(|l| l.starts_with("seed: ")).expect("seed printed");
    let seed: u64 = seed_line.trim_start_matches("seed: ").parse().unwrap();
    // replaying the printed seed reproduces the solution file
    let first = std::fs::read(dir.path().join("sol.toml")).unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "scen.toml", "--seed", &seed.to_string(), "--out", "sol2.toml", "--k", "40"],
    );
    assert!(out.status.success());
    let second = std::fs::read(dir.path().join("sol2.toml")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn greedy_trace_reflects_chosen_steps() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(dir.path(), 9);
    run_in(dir.path(), &["gen", "--spec", "spec.toml", "--out", "scen.toml"]);
    let out = run_in(
        dir.path(),
        &["greedy", "scen.toml", "--seed", "2", "--out", "g.toml", "--trace", "t.csv", "--k", "60"],
    );
    assert!(out.status.success());
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("step,type_id,marginal_gain,cost,ratio,reward_after\n"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let reward: usize = stdout
        .lines()
        .find_map(|l| l.strip_prefix("reward: "))
        .unwrap()
        .parse()
        .unwrap();
    if let Some(last) = trace.lines().last().filter(|l| !l.starts_with("step")) {
        let reward_after: usize = last.split(',').last().unwrap().parse().unwrap();
        assert_eq!(reward_after, reward);
    }
}

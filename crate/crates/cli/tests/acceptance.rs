//! Acceptance suite. One test per criterion; each prints a PASS line when
//! it survives its assertions (run with `--nocapture` to see them).

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::{knapsack_dp, random_knapsack, tiny_spec};
use fleet_core::exact::{brute_force, export_milp, knapsack_reduction, parse_lp, write_lp, OracleLimits};
use fleet_core::harness::{self, Method};
use fleet_core::lns::{self, LnsParams};
use fleet_core::model::{build_base_fleet, check_feasibility};
use fleet_core::pathing::build_travel_set;
use fleet_core::scenarios::generate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle_limits() -> OracleLimits {
    OracleLimits { max_tasks: 14, max_base_fleet: 24, max_states: 200_000_000 }
}

fn sweep_spec_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/experiment1_sweep.toml")
}

/// Criterion 1 — on 30 seeded tiny instances (≤ 5 tasks, 2 robot types,
/// base fleet ≤ 4, 16-vertex grid) the solver at K = 2000 reaches the
/// exhaustive optimum on at least 90% and never exceeds it, within 60 s.
#[test]
fn criterion_1_oracle_optimality_at_desk_scale() {
    let started = Instant::now();
    let mut matched = 0;
    for seed in 0..30u64 {
        let problem = generate(&tiny_spec(seed)).unwrap();
        let optimum = brute_force(&problem, &oracle_limits()).unwrap().reward;
        let params = LnsParams { iterations: 2000, seed, ..Default::default() };
        let reward = lns::solve(&problem, &params).best_reward();
        assert!(
            reward <= optimum,
            "seed {seed}: heuristic {reward} exceeded the optimum {optimum}"
        );
        if reward == optimum {
            matched += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(matched >= 27, "only {matched}/30 instances reached the optimum");
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, expected under a minute");
    println!(
        "ACCEPTANCE 1 (oracle optimality at desk scale): PASS ({matched}/30 optimal, {elapsed:?})"
    );
}

/// Criterion 2 — on 20 knapsack reduction instances (≤ 6 items) the
/// routing oracle equals an independent knapsack table exactly.
#[test]
fn criterion_2_knapsack_cross_check() {
    for seed in 0..20u64 {
        let (items, capacity) = random_knapsack(seed);
        let expected = knapsack_dp(&items, capacity);
        let problem = knapsack_reduction(&items, capacity);
        let reward = brute_force(&problem, &oracle_limits()).unwrap().reward as u64;
        assert_eq!(reward, expected, "seed {seed}: items {items:?} capacity {capacity}");
    }
    println!("ACCEPTANCE 2 (knapsack cross-check): PASS (20/20 exact)");
}

/// Criterion 3 — 1000 seeded runs on random scenarios: the returned
/// solution and every intermediate accepted solution satisfy all
/// feasibility constraints. Zero violations tolerated.
#[test]
fn criterion_3_feasibility_fuzzing() {
    let mut checked = 0u64;
    for seed in 0..1000u64 {
        let mut spec = tiny_spec(seed);
        // widen the family a little: more tasks, varying budget
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        spec.task_count = rng.gen_range(3..=8);
        spec.graph = fleet_core::scenarios::GraphSource::Generator(fleet_core::scenarios::GridSpec {
            width: 5,
            height: 5,
            edge_length: 4,
            obstacle_density: 0.15,
            air_edges: fleet_core::scenarios::AirEdgePolicy::None,
        });
        spec.budget = *[20u64, 40, 65].get(rng.gen_range(0..3)).unwrap();
        let problem = generate(&spec).unwrap();
        let fleet = build_base_fleet(&problem);
        let travel = build_travel_set(&problem);
        let params = LnsParams { iterations: 40, seed, ..Default::default() };
        let mut observer = |_rec: &lns::IterationRecord, sol: &fleet_core::model::Solution| {
            let verdict = check_feasibility(sol, &problem, &fleet, &travel);
            assert!(
                verdict.is_feasible(),
                "seed {seed}: intermediate violations {:?}",
                verdict.violations
            );
            checked += 1;
        };
        let out = lns::solve_observed(&problem, &params, Some(&mut observer));
        let verdict = check_feasibility(&out.best, &problem, &fleet, &travel);
        assert!(verdict.is_feasible(), "seed {seed}: final violations {:?}", verdict.violations);
    }
    println!("ACCEPTANCE 3 (feasibility fuzzing): PASS (1000 runs, {checked} solutions checked)");
}

/// Criterion 4 — iteration logs carry a non-decreasing best reward and the
/// reported solution is exactly the best logged one.
#[test]
fn criterion_4_monotone_best_so_far() {
    for seed in 0..100u64 {
        let problem = generate(&tiny_spec(seed % 30)).unwrap();
        let params = LnsParams { iterations: 150, seed, ..Default::default() };
        let out = lns::solve(&problem, &params);
        let mut prev = 0;
        for rec in &out.log {
            assert!(
                rec.best_reward >= prev,
                "seed {seed}: best reward dropped from {prev} to {}",
                rec.best_reward
            );
            prev = rec.best_reward;
        }
        let logged_max = out.log.iter().map(|r| r.best_reward).max().unwrap_or(0);
        assert_eq!(out.best_reward(), logged_max, "seed {seed}");
    }
    println!("ACCEPTANCE 4 (monotone best-so-far): PASS (100 logs checked)");
}

/// Criterion 5 — on the bundled budget sweep (N = 20, B ∈ {30,50,70,100},
/// 20 trials, K = 100) mean rewards order lns ≥ greedy ≥ random at every
/// budget, lns at B = 50 reaches greedy at B = 100 minus one task, and
/// means are non-decreasing in the budget. Runs in well under two minutes.
#[test]
fn criterion_5_baseline_ordering() {
    let started = Instant::now();
    let spec = harness::load_spec(&sweep_spec_path()).unwrap();
    let outcome = harness::run(&spec);
    assert!(outcome.errors.is_empty(), "cells failed: {:?}", outcome.errors);
    let summary = harness::summarize(&outcome.records);
    let mean = |method: Method, budget: u64| {
        summary
            .stats
            .iter()
            .find(|s| s.method == method && s.budget == budget)
            .map(|s| s.mean)
            .unwrap_or_else(|| panic!("missing cell {method:?} B={budget}"))
    };
    for &budget in &spec.budgets {
        let (l, g, r) = (
            mean(Method::Lns, budget),
            mean(Method::Greedy, budget),
            mean(Method::Random, budget),
        );
        assert!(l >= g, "B={budget}: lns {l} < greedy {g}");
        assert!(g >= r, "B={budget}: greedy {g} < random {r}");
    }
    assert!(
        mean(Method::Lns, 50) >= mean(Method::Greedy, 100) - 1.0,
        "lns at half budget fell more than one task short of greedy at full budget"
    );
    // The budget at which lns first reaches greedy's full-budget mean never
    // lies above the budget greedy itself needs for it.
    let target = mean(Method::Greedy, 100);
    let first_reach = |method: Method| {
        spec.budgets
            .iter()
            .copied()
            .find(|&b| mean(method, b) >= target)
            .unwrap_or(u64::MAX)
    };
    assert!(first_reach(Method::Lns) <= first_reach(Method::Greedy));
    for &method in &spec.methods {
        let mut prev = f64::NEG_INFINITY;
        for &budget in &spec.budgets {
            let m = mean(method, budget);
            assert!(
                m >= prev,
                "{method:?}: mean dropped to {m} at B={budget} from {prev}"
            );
            prev = m;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "sweep took {elapsed:?}");
    println!("ACCEPTANCE 5 (baseline ordering on the budget sweep): PASS ({elapsed:?})");
}

/// Criterion 6 — the exported LP for a 2-task, 2-robot instance has exactly
/// the variable and constraint counts that index arithmetic implies, and
/// round-trips through the crate's own LP reader unchanged. (Solving the
/// file with an external MIP solver is an optional manual check; see the
/// README.)
#[test]
fn criterion_6_milp_export_validity() {
    let mut spec = tiny_spec(3);
    spec.task_count = 2;
    spec.budget = 40; // one type costing 20 → base fleet of exactly 2
    spec.robot_types.truncate(1);
    spec.robot_types[0].capabilities = vec![1, 2];
    spec.robot_types[0].battery = 500;
    spec.task_requirements = vec![fleet_core::scenarios::RequirementChoice {
        labels: vec![1],
        weight: 1.0,
    }];
    // obstacle-free grid: every arc must stay finite for the count formulas
    spec.graph = fleet_core::scenarios::GraphSource::Generator(fleet_core::scenarios::GridSpec {
        width: 4,
        height: 4,
        edge_length: 5,
        obstacle_density: 0.0,
        air_edges: fleet_core::scenarios::AirEdgePolicy::None,
    });
    let mut problem = generate(&spec).unwrap();
    // guarantee generous deadlines so every arc stays usable
    for t in &mut problem.tasks {
        t.deadline = fleet_core::units::TimeVal::from_int(500);
    }
    let fleet = build_base_fleet(&problem);
    let (n, k) = (problem.task_count(), fleet.len());
    assert_eq!((n, k), (2, 2));

    let model = export_milp(&problem);

    // Independent index arithmetic for a fully reachable instance.
    let x = (n + 2) * (n + 2) * k;
    let y = n * k;
    let z = k;
    let s = (n + 2) * k;
    let arcs = (n + 1) * (n + 1) - n - 1;
    let count_prefix = |names: &[String], p: &str| names.iter().filter(|v| v.starts_with(p)).count();
    assert_eq!(count_prefix(&model.binaries, "x_"), x);
    assert_eq!(count_prefix(&model.binaries, "y_"), y);
    assert_eq!(count_prefix(&model.binaries, "z_"), z);
    assert_eq!(model.continuous.len(), s);

    let rows = |p: &str| model.constraints.iter().filter(|r| r.name.starts_with(p)).count();
    assert_eq!(rows("c3b_"), 2 * k);
    assert_eq!(rows("c3c_"), 2 * n * k);
    assert_eq!(rows("c3d_"), arcs * k);
    assert_eq!(rows("c3e_"), n);
    assert_eq!(rows("c3f_"), n * k);
    assert_eq!(rows("c3g_"), n * k);
    assert_eq!(rows("c3h_"), k);
    assert_eq!(model.constraints.iter().filter(|r| r.name == "c3i").count(), 1);
    assert_eq!(
        model.constraints.len(),
        2 * k + 2 * n * k + arcs * k + n + n * k + n * k + k + 1
    );
    assert!(model.references_are_declared());

    let text = write_lp(&model);
    let parsed = parse_lp(&text).unwrap();
    assert_eq!(parsed, model, "LP text did not round-trip into the same model");
    assert_eq!(write_lp(&parsed), text, "re-emission is not byte-stable");
    println!("ACCEPTANCE 6 (MILP export validity): PASS ({x}+{y}+{z} binaries, {s} continuous)");
}

/// Criterion 7 — every subcommand, run twice with the same seed, produces
/// byte-identical stdout and output files.
#[test]
fn criterion_7_subcommand_determinism() {
    let bin = env!("CARGO_BIN_EXE_fleet");
    let spec_toml = toml::to_string(&tiny_spec(5)).unwrap();
    let patch = |k: usize| harness::LnsParamsPatch { iterations: Some(k), ..Default::default() };
    let experiment = harness::ExperimentSpec {
        format_version: 1,
        experiment: "det".into(),
        budgets: vec![40],
        task_counts: vec![4],
        trials: 2,
        methods: vec![Method::Lns, Method::Random],
        scenario: tiny_spec(5),
        params: std::collections::BTreeMap::from([
            ("lns".to_string(), patch(30)),
            ("random".to_string(), patch(30)),
        ]),
        oracle: None,
        measure_timing: false,
    };
    let experiment_toml = toml::to_string(&experiment).unwrap();

    // Each invocation list: (args, files it should produce).
    let invocations: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["gen", "--spec", "spec.toml", "--out", "scen.toml", "--seed", "9"], vec!["scen.toml"]),
        (
            vec!["solve", "scen.toml", "--seed", "9", "--out", "lns.toml", "--log-iterations", "iters.csv", "--k", "80"],
            vec!["lns.toml", "iters.csv"],
        ),
        (
            vec!["greedy", "scen.toml", "--seed", "9", "--out", "greedy.toml", "--trace", "trace.csv", "--k", "60"],
            vec!["greedy.toml", "trace.csv"],
        ),
        (vec!["random", "scen.toml", "--seed", "9", "--out", "rand.toml", "--k", "60"], vec!["rand.toml"]),
        (
            vec!["oracle", "scen.toml", "--out", "oracle.toml", "--max-tasks", "8", "--max-base-fleet", "8"],
            vec!["oracle.toml"],
        ),
        (vec!["export-milp", "scen.toml", "--out", "model.lp"], vec!["model.lp"]),
        (
            vec!["experiment", "--spec", "exp.toml", "--out-dir", "expout"],
            vec!["expout/results.csv", "expout/summary.csv"],
        ),
        (vec!["report", "expout/results.csv", "--out", "report.csv"], vec!["report.csv"]),
    ];

    let run_all = |dir: &Path| -> Vec<(String, Vec<Vec<u8>>)> {
        std::fs::write(dir.join("spec.toml"), &spec_toml).unwrap();
        std::fs::write(dir.join("exp.toml"), &experiment_toml).unwrap();
        invocations
            .iter()
            .map(|(args, files)| {
                let output = Command::new(bin)
                    .args(args)
                    .current_dir(dir)
                    .output()
                    .expect("subcommand runs");
                assert!(
                    output.status.success(),
                    "{args:?} failed: {}",
                    String::from_utf8_lossy(&output.stderr)
                );
                let mut blobs = vec![output.stdout.clone()];
                for f in files {
                    blobs.push(std::fs::read(dir.join(f)).unwrap_or_else(|_| {
                        panic!("{args:?} did not produce {f}")
                    }));
                }
                (format!("{args:?}"), blobs)
            })
            .collect()
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = run_all(dir_a.path());
    let b = run_all(dir_b.path());
    for ((name, blobs_a), (_, blobs_b)) in a.iter().zip(b.iter()) {
        assert_eq!(blobs_a, blobs_b, "outputs of {name} differ between identical runs");
    }
    println!("ACCEPTANCE 7 (subcommand determinism): PASS ({} subcommands)", invocations.len());
}

/// Criterion 8 — removal-mode selection and SA acceptance hit their
/// documented distributions within ±0.01 over 10⁵ draws.
#[test]
fn criterion_8_distributional_checks() {
    let draws = 100_000;

    let params = LnsParams::default(); // removal bias 1/3
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let robot_picks = (0..draws)
        .filter(|_| lns::select_removal_mode(&mut rng, &params) == lns::RemovalMode::Robot)
        .count();
    let freq = robot_picks as f64 / draws as f64;
    let expected = params.removal_mode_bias;
    assert!(
        (freq - expected).abs() < 0.01,
        "removal-mode frequency {freq} vs expected {expected}"
    );

    // Δρ = −1 at temperature 1 (iteration 0 keeps temp at t0).
    let params = LnsParams { sa_initial_temp: 1.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    let accepted = (0..draws)
        .filter(|_| lns::accept(4, 5, 0, &params, &mut rng))
        .count();
    let freq = accepted as f64 / draws as f64;
    let expected = (-1.0f64).exp();
    assert!(
        (freq - expected).abs() < 0.01,
        "acceptance frequency {freq} vs expected {expected}"
    );
    println!("ACCEPTANCE 8 (distributional checks): PASS (both within ±0.01)");
}

/// The iteration-log CSV of a solver run agrees with the reported outcome —
/// supports criterion 4 through the CLI surface.
#[test]
fn iteration_log_matches_reported_reward() {
    let bin = env!("CARGO_BIN_EXE_fleet");
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.toml"), toml::to_string(&tiny_spec(2)).unwrap()).unwrap();
    let ok = |args: &[&str]| {
        let out = Command::new(bin).args(args).current_dir(dir.path()).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&["gen", "--spec", "spec.toml", "--out", "scen.toml"]);
    let stdout = ok(&[
        "solve", "scen.toml", "--seed", "4", "--out", "sol.toml", "--log-iterations", "log.csv",
    ]);
    let reported: usize = stdout
        .lines()
        .find_map(|l| l.strip_prefix("reward: "))
        .unwrap()
        .parse()
        .unwrap();
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let mut best_seen = 0usize;
    for line in log.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let best: usize = fields[3].parse().unwrap();
        assert!(best >= best_seen, "best_reward column must be non-decreasing");
        best_seen = best;
    }
    assert_eq!(best_seen, reported);
}

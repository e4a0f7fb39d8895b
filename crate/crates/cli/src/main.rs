//! `fleet` — generate scenarios, run the solvers, export MILPs, and drive
//! experiment sweeps from the command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors (unreadable
//! files, invalid scenarios, oracle size limits).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fleet_core::baselines;
use fleet_core::exact::{self, OracleLimits};
use fleet_core::harness::{self, LnsParamsPatch};
use fleet_core::lns::{self, LnsParams};
use fleet_core::model::{build_base_fleet, Problem};
use fleet_core::scenarios;

#[derive(Parser)]
#[command(name = "fleet", version, about = "Budgeted heterogeneous fleet design solvers")]
struct Cli {
    /// Print progress details to stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a concrete scenario file from a scenario spec.
    Gen(GenArgs),
    /// Run the fleet LNS solver on a scenario.
    Solve(SolveArgs),
    /// Run the greedy fleet baseline on a scenario.
    Greedy(GreedyArgs),
    /// Run the random fleet baseline on a scenario.
    Random(RandomArgs),
    /// Compute the exact optimum of a desk-scale scenario.
    Oracle(OracleArgs),
    /// Export the mixed-integer formulation as an LP file.
    ExportMilp(ExportMilpArgs),
    /// Run an experiment sweep and write results.csv.
    Experiment(ExperimentArgs),
    /// Aggregate a results.csv into summary statistics.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Scenario spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output scenario file.
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's generation seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Solver parameter overrides; defaults are the reference configuration.
#[derive(Args, Clone)]
struct ParamArgs {
    /// Iteration budget.
    #[arg(long = "k")]
    k: Option<usize>,
    /// Robot-removal limit, percent of active robots.
    #[arg(long = "n-r")]
    n_r: Option<u32>,
    /// Task-removal limit, percent of each tour.
    #[arg(long = "n-t")]
    n_t: Option<u32>,
    /// Probability of picking robot removal.
    #[arg(long = "p-removal")]
    p_removal: Option<f64>,
    /// Probability of discounting an idle robot's activation.
    #[arg(long = "p-discount")]
    p_discount: Option<f64>,
    /// Upper bound of the insertion noise.
    #[arg(long = "noise-max")]
    noise_max: Option<f64>,
    /// Simulated-annealing start temperature.
    #[arg(long = "sa-t0")]
    sa_t0: Option<f64>,
    /// Simulated-annealing cooling factor per iteration.
    #[arg(long = "sa-cooling")]
    sa_cooling: Option<f64>,
    /// Activation discount denominator: cost or battery.
    #[arg(long = "discount-denominator")]
    discount_denominator: Option<String>,
}

impl ParamArgs {
    fn to_params(&self, seed: u64) -> Result<LnsParams> {
        let patch = LnsParamsPatch {
            iterations: self.k,
            robot_removal_max_pct: self.n_r,
            task_removal_max_pct: self.n_t,
            removal_mode_bias: self.p_removal,
            discount_prob: self.p_discount,
            noise_max: self.noise_max,
            sa_initial_temp: self.sa_t0,
            sa_cooling: self.sa_cooling,
            discount_denominator: self.discount_denominator.clone(),
        };
        let base = LnsParams { seed, ..Default::default() };
        patch.apply(&base).context("invalid solver parameters")
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// Output solution file.
    #[arg(long)]
    out: PathBuf,
    /// RNG seed; drawn from entropy (and printed) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the per-iteration log as CSV.
    #[arg(long = "log-iterations")]
    log_iterations: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct GreedyArgs {
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the greedy step trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct RandomArgs {
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct OracleArgs {
    scenario: PathBuf,
    /// Output solution file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "max-tasks")]
    max_tasks: Option<usize>,
    #[arg(long = "max-base-fleet")]
    max_base_fleet: Option<usize>,
    #[arg(long = "max-states")]
    max_states: Option<u64>,
}

#[derive(Args)]
struct ExportMilpArgs {
    scenario: PathBuf,
    /// Output LP file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for results.csv, summary.csv and errors.csv.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// results.csv produced by the experiment subcommand.
    results: PathBuf,
    /// Also write the summary as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn effective_seed(requested: Option<u64>) -> u64 {
    requested.unwrap_or_else(rand::random)
}

fn load_problem(path: &Path) -> Result<Problem> {
    let (problem, _) = scenarios::load_scenario(path)
        .with_context(|| format!("cannot load scenario {}", path.display()))?;
    Ok(problem)
}

fn report_solution(problem: &Problem, solution: &fleet_core::model::Solution) {
    let fleet = build_base_fleet(problem);
    let composition = solution.fleet_composition(&fleet, problem);
    let fleet_str = composition
        .iter()
        .map(|&(rtype, count)| format!("{}:{}", problem.robot_types[rtype].id, count))
        .collect::<Vec<_>>()
        .join("+");
    println!("reward: {}", solution.visit_count());
    println!("fleet: {}", if fleet_str.is_empty() { "-" } else { &fleet_str });
    println!("cost: {}", solution.active_cost(&fleet, problem));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let mut spec = scenarios::load_spec(&args.spec)
                .with_context(|| format!("cannot load spec {}", args.spec.display()))?;
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            println!("seed: {}", spec.seed);
            let problem = scenarios::generate(&spec)?;
            scenarios::save_scenario(&problem, spec.seed, &args.out)?;
            println!(
                "wrote {} ({} vertices, {} tasks, {} robot types)",
                args.out.display(),
                problem.graph.vertex_count,
                problem.task_count(),
                problem.robot_types.len()
            );
            Ok(())
        }
        Command::Solve(args) => {
            let problem = load_problem(&args.scenario)?;
            let seed = effective_seed(args.seed);
            println!("seed: {seed}");
            let params = args.params.to_params(seed)?;
            let outcome = lns::solve(&problem, &params);
            scenarios::save_solution(&outcome.best, &problem, "lns", seed, &args.out)?;
            if let Some(log_path) = &args.log_iterations {
                let mut buf = Vec::new();
                lns::write_iteration_log(&outcome.log, &mut buf)?;
                std::fs::write(log_path, buf)?;
            }
            report_solution(&problem, &outcome.best);
            Ok(())
        }
        Command::Greedy(args) => {
            let problem = load_problem(&args.scenario)?;
            let seed = effective_seed(args.seed);
            println!("seed: {seed}");
            let params = args.params.to_params(seed)?;
            let (outcome, trace) = baselines::greedy_fleet(&problem, &params);
            scenarios::save_solution(&outcome.best, &problem, "greedy", seed, &args.out)?;
            if let Some(trace_path) = &args.trace {
                let mut buf = Vec::new();
                baselines::write_greedy_trace(&trace, &problem, &mut buf)?;
                std::fs::write(trace_path, buf)?;
            }
            if trace.unspent_budget > 0 && cli.verbose > 0 {
                eprintln!("greedy stopped with {} budget unspent", trace.unspent_budget);
            }
            report_solution(&problem, &outcome.best);
            Ok(())
        }
        Command::Random(args) => {
            let problem = load_problem(&args.scenario)?;
            let seed = effective_seed(args.seed);
            println!("seed: {seed}");
            let params = args.params.to_params(seed)?;
            let outcome = baselines::random_fleet(&problem, &params);
            scenarios::save_solution(&outcome.best, &problem, "random", seed, &args.out)?;
            report_solution(&problem, &outcome.best);
            Ok(())
        }
        Command::Oracle(args) => {
            let problem = load_problem(&args.scenario)?;
            let defaults = OracleLimits::default();
            let limits = OracleLimits {
                max_tasks: args.max_tasks.unwrap_or(defaults.max_tasks),
                max_base_fleet: args.max_base_fleet.unwrap_or(defaults.max_base_fleet),
                max_states: args.max_states.unwrap_or(defaults.max_states),
            };
            let outcome = exact::brute_force(&problem, &limits)?;
            if let Some(out) = &args.out {
                scenarios::save_solution(&outcome.solution, &problem, "oracle", 0, out)?;
            }
            println!("optimum: {}", outcome.reward);
            report_solution(&problem, &outcome.solution);
            Ok(())
        }
        Command::ExportMilp(args) => {
            let problem = load_problem(&args.scenario)?;
            let model = exact::export_milp(&problem);
            std::fs::write(&args.out, exact::write_lp(&model))?;
            println!(
                "wrote {} ({} variables, {} constraints)",
                args.out.display(),
                model.binaries.len() + model.continuous.len(),
                model.constraints.len()
            );
            Ok(())
        }
        Command::Experiment(args) => {
            let spec = harness::load_spec(&args.spec)
                .with_context(|| format!("cannot load experiment spec {}", args.spec.display()))?;
            std::fs::create_dir_all(&args.out_dir)?;
            println!("experiment: {}", spec.experiment);
            let outcome = harness::run(&spec);
            let results_path = args.out_dir.join("results.csv");
            let mut buf = Vec::new();
            harness::write_results_csv(&outcome.records, &mut buf)?;
            std::fs::write(&results_path, buf)?;
            if !outcome.errors.is_empty() {
                let mut buf = Vec::new();
                harness::write_errors_csv(&outcome.errors, &mut buf)?;
                std::fs::write(args.out_dir.join("errors.csv"), buf)?;
                eprintln!("{} cells failed; see errors.csv", outcome.errors.len());
            }
            let summary = harness::summarize(&outcome.records);
            let mut buf = Vec::new();
            harness::write_summary_csv(&summary, &mut buf)?;
            std::fs::write(args.out_dir.join("summary.csv"), buf)?;
            println!("{} records -> {}", outcome.records.len(), results_path.display());
            Ok(())
        }
        Command::Report(args) => {
            let text = std::fs::read_to_string(&args.results)
                .with_context(|| format!("cannot read {}", args.results.display()))?;
            let records = harness::read_results_csv(&text)?;
            let summary = harness::summarize(&records);
            print!("{}", harness::format_summary_table(&summary));
            if let Some(out) = &args.out {
                let mut buf = Vec::new();
                harness::write_summary_csv(&summary, &mut buf)?;
                std::fs::write(out, buf)?;
            }
            Ok(())
        }
    }
}

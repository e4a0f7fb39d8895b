//! Seeded experiment sweeps over (method × task count × budget × trial)
//! cells, and aggregation of the resulting reward table.
//!
//! Seeds are derived from the experiment name and the cell coordinates with
//! a stable hash, so adding a method or a budget never reshuffles existing
//! cells. All methods within a trial share the same generated instance
//! (scenario seeds depend on the task count and trial, not on the method or
//! budget), which keeps comparisons paired the way the reward plots assume.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::exact::{brute_force, OracleLimits};
use crate::lns::{self, LnsParams};
use crate::model::build_base_fleet;
use crate::scenarios::{self, ScenarioSpec, FORMAT_VERSION};
use crate::seeding::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lns,
    Greedy,
    Random,
    Oracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Lns => "lns",
            Method::Greedy => "greedy",
            Method::Random => "random",
            Method::Oracle => "oracle",
        }
    }
}

/// Optional per-field overrides applied over [`LnsParams::default`].
/// Reused by the CLI flags and the per-method tables in experiment specs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LnsParamsPatch {
    pub iterations: Option<usize>,
    pub robot_removal_max_pct: Option<u32>,
    pub task_removal_max_pct: Option<u32>,
    pub removal_mode_bias: Option<f64>,
    pub discount_prob: Option<f64>,
    pub noise_max: Option<f64>,
    pub sa_initial_temp: Option<f64>,
    pub sa_cooling: Option<f64>,
    /// `"cost"` or `"battery"`.
    pub discount_denominator: Option<String>,
}

impl LnsParamsPatch {
    pub fn apply(&self, base: &LnsParams) -> Result<LnsParams, lns::LnsError> {
        let mut p = base.clone();
        if let Some(v) = self.iterations {
            p.iterations = v;
        }
        if let Some(v) = self.robot_removal_max_pct {
            p.robot_removal_max_pct = v;
        }
        if let Some(v) = self.task_removal_max_pct {
            p.task_removal_max_pct = v;
        }
        if let Some(v) = self.removal_mode_bias {
            p.removal_mode_bias = v;
        }
        if let Some(v) = self.discount_prob {
            p.discount_prob = v;
        }
        if let Some(v) = self.noise_max {
            p.noise_max = v;
        }
        if let Some(v) = self.sa_initial_temp {
            p.sa_initial_temp = v;
        }
        if let Some(v) = self.sa_cooling {
            p.sa_cooling = v;
        }
        if let Some(v) = &self.discount_denominator {
            p.discount_denominator = match v.as_str() {
                "cost" => lns::DiscountDenominator::Cost,
                "battery" => lns::DiscountDenominator::Battery,
                _ => return Err(lns::LnsError::Invalid("discount_denominator is cost or battery")),
            };
        }
        p.validate()?;
        Ok(p)
    }
}

/// A full sweep description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "version_default")]
    pub format_version: u32,
    pub experiment: String,
    pub budgets: Vec<u64>,
    pub task_counts: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Template scenario; its `task_count`, `budget` and `seed` are replaced
    /// per cell.
    pub scenario: ScenarioSpec,
    /// Per-method parameter overrides, keyed by method label.
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, LnsParamsPatch>,
    /// Limits for oracle cells.
    #[serde(default)]
    pub oracle: Option<OracleLimitsSpec>,
    /// Record real wall-clock times. Off by default so rerunning a sweep
    /// yields byte-identical CSVs.
    #[serde(default)]
    pub measure_timing: bool,
}

fn version_default() -> u32 {
    FORMAT_VERSION
}

fn default_trials() -> usize {
    20
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleLimitsSpec {
    pub max_tasks: Option<usize>,
    pub max_base_fleet: Option<usize>,
    pub max_states: Option<u64>,
}

impl OracleLimitsSpec {
    fn to_limits(self) -> OracleLimits {
        let d = OracleLimits::default();
        OracleLimits {
            max_tasks: self.max_tasks.unwrap_or(d.max_tasks),
            max_base_fleet: self.max_base_fleet.unwrap_or(d.max_base_fleet),
            max_states: self.max_states.unwrap_or(d.max_states),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot parse experiment spec: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported format_version {found} (this build reads {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("results csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// One finished cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub method: Method,
    pub task_count: usize,
    pub budget: u64,
    pub trial: usize,
    pub reward: usize,
    /// Active robots as `typeid:count` pairs joined by `+`.
    pub fleet: String,
    pub cost: u64,
    pub wall_ms: u64,
    pub iters: u64,
}

/// A failed cell; kept out of the result table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellError {
    pub method: Method,
    pub task_count: usize,
    pub budget: u64,
    pub trial: usize,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutcome {
    pub records: Vec<ResultRecord>,
    pub errors: Vec<CellError>,
}

pub fn spec_from_toml(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let spec: ExperimentSpec = toml::from_str(text)?;
    if spec.format_version != FORMAT_VERSION {
        return Err(HarnessError::FormatVersion {
            found: spec.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if spec.trials == 0 {
        return Err(HarnessError::Invalid("trials must be at least 1".into()));
    }
    if spec.methods.is_empty() {
        return Err(HarnessError::Invalid("methods must not be empty".into()));
    }
    for key in spec.params.keys() {
        if !["lns", "greedy", "random"].contains(&key.as_str()) {
            return Err(HarnessError::Invalid(format!("params table for unknown method {key}")));
        }
    }
    Ok(spec)
}

pub fn load_spec(path: &std::path::Path) -> Result<ExperimentSpec, HarnessError> {
    spec_from_toml(&std::fs::read_to_string(path)?)
}

fn method_params(
    spec: &ExperimentSpec,
    method: Method,
    seed: u64,
) -> Result<LnsParams, HarnessError> {
    let base = LnsParams { seed, ..Default::default() };
    match spec.params.get(method.label()) {
        Some(patch) => patch
            .apply(&base)
            .map_err(|e| HarnessError::Invalid(format!("params.{}: {e}", method.label()))),
        None => Ok(base),
    }
}

fn run_cell(
    spec: &ExperimentSpec,
    method: Method,
    task_count: usize,
    budget: u64,
    trial: usize,
) -> Result<ResultRecord, String> {
    let scenario_seed = derive_seed(
        &format!("{}#scenario", spec.experiment),
        &[task_count as u64, trial as u64],
    );
    let mut scenario = spec.scenario.clone();
    scenario.task_count = task_count;
    scenario.budget = budget;
    scenario.seed = scenario_seed;
    let problem = scenarios::generate(&scenario).map_err(|e| e.to_string())?;

    let cell_seed = derive_seed(
        &format!("{}#{}", spec.experiment, method.label()),
        &[task_count as u64, budget, trial as u64],
    );
    let started = std::time::Instant::now();
    let (solution, iters) = match method {
        Method::Lns => {
            let params = method_params(spec, method, cell_seed).map_err(|e| e.to_string())?;
            let out = lns::solve(&problem, &params);
            let iters = out.log.len() as u64;
            (out.best, iters)
        }
        Method::Greedy => {
            let params = method_params(spec, method, cell_seed).map_err(|e| e.to_string())?;
            let (out, trace) = baselines::greedy_fleet(&problem, &params);
            let iters = trace
                .steps
                .iter()
                .map(|s| s.candidates.len() as u64 * params.iterations as u64)
                .sum();
            (out.best, iters)
        }
        Method::Random => {
            let params = method_params(spec, method, cell_seed).map_err(|e| e.to_string())?;
            let out = baselines::random_fleet(&problem, &params);
            let iters = out.log.len() as u64;
            (out.best, iters)
        }
        Method::Oracle => {
            let limits = spec.oracle.map(OracleLimitsSpec::to_limits).unwrap_or_default();
            let out = brute_force(&problem, &limits).map_err(|e| e.to_string())?;
            (out.solution, out.states)
        }
    };
    let wall_ms = if spec.measure_timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };

    let fleet = build_base_fleet(&problem);
    let composition = solution.fleet_composition(&fleet, &problem);
    let fleet_str = composition
        .iter()
        .map(|&(rtype, count)| format!("{}:{}", problem.robot_types[rtype].id, count))
        .collect::<Vec<_>>()
        .join("+");
    Ok(ResultRecord {
        experiment: spec.experiment.clone(),
        method,
        task_count,
        budget,
        trial,
        reward: solution.visit_count(),
        fleet: fleet_str,
        cost: solution.active_cost(&fleet, &problem),
        wall_ms,
        iters,
    })
}

/// Runs every cell of the sweep on a worker pool. Cell failures land in
/// `errors` without aborting the rest. The record order is the deterministic
/// (method, task count, budget, trial) iteration order.
pub fn run(spec: &ExperimentSpec) -> ExperimentOutcome {
    let mut cells = Vec::new();
    for &method in &spec.methods {
        for &n in &spec.task_counts {
            for &b in &spec.budgets {
                for trial in 0..spec.trials {
                    cells.push((method, n, b, trial));
                }
            }
        }
    }
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(method, n, b, trial)| {
            (method, n, b, trial, run_cell(spec, method, n, b, trial))
        })
        .collect();

    let mut outcome = ExperimentOutcome::default();
    for (method, n, b, trial, result) in results {
        match result {
            Ok(record) => outcome.records.push(record),
            Err(error) => outcome.errors.push(CellError {
                method,
                task_count: n,
                budget: b,
                trial,
                error,
            }),
        }
    }
    outcome
}

pub const RESULTS_HEADER: &str = "experiment,method,N,B,trial,reward,fleet,cost,wall_ms,iters";

pub fn write_results_csv<W: Write>(records: &[ResultRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.method.label(),
            r.task_count,
            r.budget,
            r.trial,
            r.reward,
            r.fleet,
            r.cost,
            r.wall_ms,
            r.iters
        )?;
    }
    Ok(())
}

pub fn write_errors_csv<W: Write>(errors: &[CellError], out: &mut W) -> io::Result<()> {
    writeln!(out, "method,N,B,trial,error")?;
    for e in errors {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.method.label(),
            e.task_count,
            e.budget,
            e.trial,
            e.error.replace([',', '\n'], ";")
        )?;
    }
    Ok(())
}

pub fn read_results_csv(text: &str) -> Result<Vec<ResultRecord>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULTS_HEADER => {}
        _ => {
            return Err(HarnessError::Csv {
                line: 1,
                message: format!("expected header {RESULTS_HEADER}"),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(HarnessError::Csv {
                line: i + 1,
                message: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| HarnessError::Csv { line: i + 1, message: format!("bad {what}") };
        let method = match fields[1] {
            "lns" => Method::Lns,
            "greedy" => Method::Greedy,
            "random" => Method::Random,
            "oracle" => Method::Oracle,
            other => {
                return Err(HarnessError::Csv {
                    line: i + 1,
                    message: format!("unknown method {other}"),
                })
            }
        };
        records.push(ResultRecord {
            experiment: fields[0].to_string(),
            method,
            task_count: fields[2].parse().map_err(|_| bad("N"))?,
            budget: fields[3].parse().map_err(|_| bad("B"))?,
            trial: fields[4].parse().map_err(|_| bad("trial"))?,
            reward: fields[5].parse().map_err(|_| bad("reward"))?,
            fleet: fields[6].to_string(),
            cost: fields[7].parse().map_err(|_| bad("cost"))?,
            wall_ms: fields[8].parse().map_err(|_| bad("wall_ms"))?,
            iters: fields[9].parse().map_err(|_| bad("iters"))?,
        });
    }
    Ok(records)
}

/// Summary statistics of one (method, N, B) group.
#[derive(Clone, Debug, PartialEq)]
pub struct StatRow {
    pub method: Method,
    pub task_count: usize,
    pub budget: u64,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator); zero for a single record.
    pub sd: f64,
    pub min: usize,
    pub max: usize,
}

/// Mean reward difference lns − greedy for one (N, B).
#[derive(Clone, Debug, PartialEq)]
pub struct DiffRow {
    pub task_count: usize,
    pub budget: u64,
    pub lns_mean: f64,
    pub greedy_mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub stats: Vec<StatRow>,
    pub diffs: Vec<DiffRow>,
}

/// Aggregates records per (method, N, B). The input order does not matter:
/// groups are keyed and emitted in sorted order.
pub fn summarize(records: &[ResultRecord]) -> Summary {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(Method, usize, u64), Vec<usize>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.method, r.task_count, r.budget))
            .or_default()
            .push(r.reward);
    }
    let stats: Vec<StatRow> = groups
        .iter()
        .map(|(&(method, n, b), rewards)| {
            let count = rewards.len();
            let mean = rewards.iter().sum::<usize>() as f64 / count as f64;
            let sd = if count < 2 {
                0.0
            } else {
                let var = rewards
                    .iter()
                    .map(|&r| (r as f64 - mean).powi(2))
                    .sum::<f64>()
                    / (count - 1) as f64;
                var.sqrt()
            };
            StatRow {
                method,
                task_count: n,
                budget: b,
                trials: count,
                mean,
                sd,
                min: *rewards.iter().min().unwrap(),
                max: *rewards.iter().max().unwrap(),
            }
        })
        .collect();

    let mut diffs = Vec::new();
    let mut cells: Vec<(usize, u64)> =
        stats.iter().map(|s| (s.task_count, s.budget)).collect();
    cells.sort_unstable();
    cells.dedup();
    for (n, b) in cells {
        let find = |m: Method| {
            stats
                .iter()
                .find(|s| s.method == m && s.task_count == n && s.budget == b)
                .map(|s| s.mean)
        };
        if let (Some(lns_mean), Some(greedy_mean)) = (find(Method::Lns), find(Method::Greedy)) {
            diffs.push(DiffRow { task_count: n, budget: b, lns_mean, greedy_mean });
        }
    }
    Summary { stats, diffs }
}

pub fn write_summary_csv<W: Write>(summary: &Summary, out: &mut W) -> io::Result<()> {
    writeln!(out, "method,N,B,trials,mean,sd,min,max")?;
    for s in &summary.stats {
        writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{},{}",
            s.method.label(),
            s.task_count,
            s.budget,
            s.trials,
            s.mean,
            s.sd,
            s.min,
            s.max
        )?;
    }
    Ok(())
}

/// Plain-text table of the summary, plus the lns − greedy differences when
/// both methods are present.
pub fn format_summary_table(summary: &Summary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:>5} {:>5} {:>7} {:>9} {:>8} {:>5} {:>5}\n",
        "method", "N", "B", "trials", "mean", "sd", "min", "max"
    ));
    for s in &summary.stats {
        out.push_str(&format!(
            "{:<8} {:>5} {:>5} {:>7} {:>9.3} {:>8.3} {:>5} {:>5}\n",
            s.method.label(),
            s.task_count,
            s.budget,
            s.trials,
            s.mean,
            s.sd,
            s.min,
            s.max
        ));
    }
    if !summary.diffs.is_empty() {
        out.push_str("\nmean reward difference (lns - greedy)\n");
        out.push_str(&format!("{:>5} {:>5} {:>10}\n", "N", "B", "lns-greedy"));
        for d in &summary.diffs {
            out.push_str(&format!(
                "{:>5} {:>5} {:>10.3}\n",
                d.task_count,
                d.budget,
                d.lns_mean - d.greedy_mean
            ));
        }
    }
    out
}

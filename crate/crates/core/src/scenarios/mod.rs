//! Scenario specs, random scenario generation, and file persistence.
//!
//! Three file kinds, all versioned TOML (see `docs/schema.md` in the repo
//! root for the field-by-field reference):
//!
//! * a *scenario spec* describes how to generate a problem (graph source,
//!   task distribution, robot table, budget, seed);
//! * a *scenario file* is a fully concrete problem instance;
//! * a *solution file* stores the nonempty tours of one solver run.
//!
//! Unknown fields are rejected everywhere, so a typo in a spec fails loudly
//! instead of silently falling back to a default.

pub mod schema;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::model::{
    build_base_fleet, BaseFleet, LabelSet, Problem, Solution, Task, Tour, MAX_LABELS,
};
use crate::pathing::{Edge, EnvironmentGraph};
use crate::units::TimeVal;

pub use schema::{
    AirEdgePolicy, DeadlineField, GraphSource, GridSpec, InlineGraph, RequirementChoice,
    RobotKind, RobotTypeSpec, ScenarioFile, ScenarioSpec, SolutionFile, TourRecord,
    FORMAT_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot parse file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialise: {0}")]
    Serialise(#[from] toml::ser::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported format_version {found} (this build reads {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{needed} tasks requested but only {available} non-depot vertices exist")]
    InsufficientVertices { needed: usize, available: usize },
    #[error("solution does not fit the scenario: {0}")]
    SolutionMismatch(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Integer-rounded square root (round half up), for air-edge lengths.
fn rounded_sqrt(m: u64) -> u64 {
    let s = m.isqrt();
    if m > s * s + s {
        s + 1
    } else {
        s
    }
}

/// Builds a grid graph: one vertex per non-obstacle cell, `ground` edges
/// between 4-neighbours, and optionally a complete layer of direct `air`
/// edges with rounded Euclidean lengths. The central cell is reserved as the
/// depot and never becomes an obstacle.
fn generate_grid(grid: &GridSpec, rng: &mut ChaCha8Rng) -> (EnvironmentGraph, usize) {
    let (w, h) = (grid.width, grid.height);
    let depot_cell = (h / 2) * w + w / 2;

    let open: Vec<bool> = (0..w * h)
        .map(|cell| cell == depot_cell || !rng.gen_bool(grid.obstacle_density))
        .collect();
    let mut vertex_of = vec![usize::MAX; w * h];
    let mut cells = Vec::new();
    for cell in 0..w * h {
        if open[cell] {
            vertex_of[cell] = cells.len();
            cells.push(cell);
        }
    }

    let mut edges = Vec::new();
    for &cell in &cells {
        let (x, y) = (cell % w, cell / w);
        if x + 1 < w && open[cell + 1] {
            edges.push(Edge {
                u: vertex_of[cell],
                v: vertex_of[cell + 1],
                length: grid.edge_length,
                class: "ground".into(),
            });
        }
        if y + 1 < h && open[cell + w] {
            edges.push(Edge {
                u: vertex_of[cell],
                v: vertex_of[cell + w],
                length: grid.edge_length,
                class: "ground".into(),
            });
        }
    }
    if grid.air_edges == AirEdgePolicy::Complete {
        for a in 0..cells.len() {
            for b in (a + 1)..cells.len() {
                let (ax, ay) = ((cells[a] % w) as i64, (cells[a] / w) as i64);
                let (bx, by) = ((cells[b] % w) as i64, (cells[b] / w) as i64);
                let d2 = ((ax - bx) * (ax - bx) + (ay - by) * (ay - by)) as u64;
                let len = rounded_sqrt(d2 * u64::from(grid.edge_length) * u64::from(grid.edge_length))
                    .max(1);
                edges.push(Edge {
                    u: a,
                    v: b,
                    length: u32::try_from(len).expect("air edge length fits u32"),
                    class: "air".into(),
                });
            }
        }
    }

    let graph = EnvironmentGraph { vertex_count: cells.len(), edges };
    (graph, vertex_of[depot_cell])
}

fn validate_spec(spec: &ScenarioSpec) -> Result<(), ScenarioError> {
    if spec.format_version != FORMAT_VERSION {
        return Err(ScenarioError::FormatVersion {
            found: spec.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if spec.task_requirements.is_empty() {
        return Err(invalid("task_requirements must list at least one choice"));
    }
    if spec.task_requirements.iter().any(|c| c.weight.is_nan() || c.weight < 0.0) {
        return Err(invalid("requirement weights must be non-negative"));
    }
    if spec.task_requirements.iter().all(|c| c.weight == 0.0) {
        return Err(invalid("requirement weights must not all be zero"));
    }
    for c in &spec.task_requirements {
        if c.labels.iter().any(|&l| l >= MAX_LABELS) {
            return Err(invalid(format!("requirement labels must stay below {MAX_LABELS}")));
        }
    }
    if spec.robot_types.is_empty() {
        return Err(invalid("at least one robot type is required"));
    }
    let mut ids: Vec<u32> = spec.robot_types.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != spec.robot_types.len() {
        return Err(invalid("robot type ids must be unique"));
    }
    for r in &spec.robot_types {
        if r.speed_percent == 0 {
            return Err(invalid(format!("robot type {} needs a positive speed", r.id)));
        }
        if r.battery == 0 || r.cost == 0 {
            return Err(invalid(format!("robot type {} needs positive battery and cost", r.id)));
        }
    }
    match (&spec.graph, spec.depot) {
        (GraphSource::Generator(_), Some(_)) => {
            Err(invalid("generated grids derive their depot; drop the depot field"))
        }
        (GraphSource::Inline(_), None) => {
            Err(invalid("inline graphs need an explicit depot vertex"))
        }
        _ => Ok(()),
    }
}

/// Generates a concrete problem from a spec: builds or loads the graph,
/// samples `task_count` distinct non-depot vertices uniformly, and draws one
/// requirement set per task from the weighted choices. Deterministic in
/// `spec.seed`; the stream order is obstacles, then task vertices, then
/// requirement sets.
pub fn generate(spec: &ScenarioSpec) -> Result<Problem, ScenarioError> {
    validate_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let (graph, depot) = match &spec.graph {
        GraphSource::Generator(grid) => generate_grid(grid, &mut rng),
        GraphSource::Inline(inline) => (inline.to_graph(), spec.depot.unwrap()),
    };
    graph.validate().map_err(|e| invalid(e.to_string()))?;
    if depot >= graph.vertex_count {
        return Err(invalid(format!("depot vertex {depot} is outside the graph")));
    }

    let candidates: Vec<usize> = (0..graph.vertex_count).filter(|&v| v != depot).collect();
    if spec.task_count > candidates.len() {
        return Err(ScenarioError::InsufficientVertices {
            needed: spec.task_count,
            available: candidates.len(),
        });
    }
    let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), spec.task_count)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picks.sort_unstable();

    let weights: Vec<f64> = spec.task_requirements.iter().map(|c| c.weight).collect();
    let chooser = WeightedIndex::new(&weights).map_err(|e| invalid(e.to_string()))?;
    let deadline = spec.deadline.to_time()?;

    let tasks = picks
        .into_iter()
        .enumerate()
        .map(|(id, vertex)| {
            let choice = &spec.task_requirements[chooser.sample(&mut rng)];
            Ok(Task {
                id,
                vertex,
                deadline,
                requirements: LabelSet::from_labels(&choice.labels)
                    .map_err(|e| invalid(e.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let robot_types = spec
        .robot_types
        .iter()
        .enumerate()
        .map(|(index, r)| r.to_model(index))
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let problem = Problem {
        name: spec.name.clone(),
        graph,
        depot,
        tasks,
        robot_types,
        budget: spec.budget,
    };
    problem.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(problem)
}

/// Parses a scenario spec from TOML text.
pub fn spec_from_toml(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = toml::from_str(text)?;
    validate_spec(&spec)?;
    Ok(spec)
}

pub fn load_spec(path: &std::path::Path) -> Result<ScenarioSpec, ScenarioError> {
    spec_from_toml(&std::fs::read_to_string(path)?)
}

/// Serialises a concrete problem (plus its generation seed) to TOML.
pub fn scenario_to_toml(problem: &Problem, seed: u64) -> Result<String, ScenarioError> {
    let file = ScenarioFile::from_problem(problem, seed)?;
    Ok(toml::to_string(&file)?)
}

/// Parses a scenario file back into a problem and its recorded seed.
pub fn scenario_from_toml(text: &str) -> Result<(Problem, u64), ScenarioError> {
    let file: ScenarioFile = toml::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(ScenarioError::FormatVersion {
            found: file.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let problem = file.to_problem()?;
    problem.validate().map_err(|e| invalid(e.to_string()))?;
    Ok((problem, file.seed))
}

pub fn save_scenario(
    problem: &Problem,
    seed: u64,
    path: &std::path::Path,
) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_toml(problem, seed)?)?;
    Ok(())
}

pub fn load_scenario(path: &std::path::Path) -> Result<(Problem, u64), ScenarioError> {
    scenario_from_toml(&std::fs::read_to_string(path)?)
}

/// Serialises a solution (nonempty tours only) against its problem.
pub fn solution_to_toml(
    solution: &Solution,
    problem: &Problem,
    method: &str,
    seed: u64,
) -> Result<String, ScenarioError> {
    let fleet = build_base_fleet(problem);
    let tours = solution
        .tours
        .iter()
        .filter(|t| !t.is_empty())
        .map(|t| TourRecord {
            robot_index: t.robot_index,
            type_id: problem.robot_types[fleet.robots[t.robot_index].rtype].id,
            visits: t.visits.clone(),
        })
        .collect();
    let file = SolutionFile {
        format_version: FORMAT_VERSION,
        scenario: problem.name.clone(),
        method: method.to_string(),
        seed,
        reward: solution.visit_count(),
        tours,
    };
    Ok(toml::to_string(&file)?)
}

/// Parses a solution file and re-expands it over the problem's base fleet.
pub fn solution_from_toml(
    text: &str,
    problem: &Problem,
) -> Result<(Solution, SolutionFile), ScenarioError> {
    let file: SolutionFile = toml::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(ScenarioError::FormatVersion {
            found: file.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let fleet: BaseFleet = build_base_fleet(problem);
    let mut solution = Solution::empty(fleet.len());
    for rec in &file.tours {
        if rec.robot_index >= fleet.len() {
            return Err(ScenarioError::SolutionMismatch(format!(
                "robot index {} is outside the base fleet of {}",
                rec.robot_index,
                fleet.len()
            )));
        }
        let rtype = &problem.robot_types[fleet.robots[rec.robot_index].rtype];
        if rtype.id != rec.type_id {
            return Err(ScenarioError::SolutionMismatch(format!(
                "robot {} has type id {} in the scenario but {} in the solution",
                rec.robot_index, rtype.id, rec.type_id
            )));
        }
        if let Some(&bad) = rec.visits.iter().find(|&&t| t >= problem.task_count()) {
            return Err(ScenarioError::SolutionMismatch(format!("unknown task id {bad}")));
        }
        if !solution.tours[rec.robot_index].is_empty() {
            return Err(ScenarioError::SolutionMismatch(format!(
                "robot {} appears twice",
                rec.robot_index
            )));
        }
        solution.tours[rec.robot_index] =
            Tour { robot_index: rec.robot_index, visits: rec.visits.clone() };
    }
    Ok((solution, file))
}

pub fn save_solution(
    solution: &Solution,
    problem: &Problem,
    method: &str,
    seed: u64,
    path: &std::path::Path,
) -> Result<(), ScenarioError> {
    std::fs::write(path, solution_to_toml(solution, problem, method, seed)?)?;
    Ok(())
}

pub fn load_solution(
    path: &std::path::Path,
    problem: &Problem,
) -> Result<(Solution, SolutionFile), ScenarioError> {
    solution_from_toml(&std::fs::read_to_string(path)?, problem)
}

impl DeadlineField {
    pub fn to_time(&self) -> Result<TimeVal, ScenarioError> {
        match self {
            DeadlineField::Finite(v) => Ok(TimeVal::from_int(*v as i64)),
            DeadlineField::Symbol(s) if s == "inf" => Ok(TimeVal::Infinite),
            DeadlineField::Symbol(s) => {
                Err(invalid(format!("deadline must be a number or \"inf\", found {s:?}")))
            }
        }
    }

    pub fn from_time(t: TimeVal) -> Result<DeadlineField, ScenarioError> {
        match t {
            TimeVal::Infinite => Ok(DeadlineField::Symbol("inf".into())),
            TimeVal::Finite(v) if v.is_integer() && *v.numer() >= 0 => {
                Ok(DeadlineField::Finite(*v.numer() as u64))
            }
            other => Err(invalid(format!("deadline {other} is not representable in a file"))),
        }
    }
}

//! Serde types mirroring the on-disk TOML formats.

use std::collections::BTreeSet;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::model::{LabelSet, Problem, RobotType, Task};
use crate::pathing::{Edge, EnvironmentGraph};
use crate::scenarios::ScenarioError;

pub const FORMAT_VERSION: u32 = 1;

fn version_default() -> u32 {
    FORMAT_VERSION
}

/// Recipe for generating a problem instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "version_default")]
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub task_count: usize,
    pub deadline: DeadlineField,
    pub budget: u64,
    /// Required for inline graphs, forbidden for generated grids (which
    /// place the depot at the central cell).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depot: Option<usize>,
    pub graph: GraphSource,
    pub task_requirements: Vec<RequirementChoice>,
    pub robot_types: Vec<RobotTypeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GraphSource {
    Generator(GridSpec),
    Inline(InlineGraph),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default = "one")]
    pub edge_length: u32,
    #[serde(default)]
    pub obstacle_density: f64,
    #[serde(default)]
    pub air_edges: AirEdgePolicy,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirEdgePolicy {
    /// Ground edges only.
    #[default]
    None,
    /// A direct `air` edge between every pair of vertices.
    Complete,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineGraph {
    pub vertex_count: usize,
    /// `[u, v, length, class]` per edge.
    #[serde(default)]
    pub edges: Vec<(usize, usize, u32, String)>,
}

impl InlineGraph {
    pub fn to_graph(&self) -> EnvironmentGraph {
        EnvironmentGraph {
            vertex_count: self.vertex_count,
            edges: self
                .edges
                .iter()
                .map(|(u, v, length, class)| Edge {
                    u: *u,
                    v: *v,
                    length: *length,
                    class: class.clone(),
                })
                .collect(),
        }
    }

    pub fn from_graph(graph: &EnvironmentGraph) -> InlineGraph {
        InlineGraph {
            vertex_count: graph.vertex_count,
            edges: graph
                .edges
                .iter()
                .map(|e| (e.u, e.v, e.length, e.class.clone()))
                .collect(),
        }
    }
}

/// One entry of the categorical requirement distribution. A task drawn from
/// this choice requires all of `labels` at once.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementChoice {
    pub labels: Vec<u32>,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Agv,
    Uav,
}

impl RobotKind {
    pub fn label(self) -> &'static str {
        match self {
            RobotKind::Agv => "agv",
            RobotKind::Uav => "uav",
        }
    }

    fn default_classes(self) -> Vec<String> {
        match self {
            RobotKind::Agv => vec!["ground".into()],
            RobotKind::Uav => vec!["ground".into(), "air".into()],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotTypeSpec {
    pub id: u32,
    pub capabilities: Vec<u32>,
    pub speed_percent: u32,
    pub battery: u64,
    pub cost: u64,
    pub kind: RobotKind,
    /// Defaults by kind: `ground` for AGVs, `ground` + `air` for UAVs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_edge_classes: Option<Vec<String>>,
}

impl RobotTypeSpec {
    pub fn to_model(&self, index: usize) -> Result<RobotType, ScenarioError> {
        let classes: BTreeSet<String> = self
            .allowed_edge_classes
            .clone()
            .unwrap_or_else(|| self.kind.default_classes())
            .into_iter()
            .collect();
        Ok(RobotType {
            index,
            id: self.id,
            capabilities: LabelSet::from_labels(&self.capabilities)
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?,
            deploy_cost: self.cost,
            battery: Rational64::from_integer(self.battery as i64),
            speed_factor: Rational64::new(self.speed_percent as i64, 100),
            allowed_edge_classes: classes,
            kind: self.kind.label().to_string(),
        })
    }

    pub fn from_model(rt: &RobotType) -> Result<RobotTypeSpec, ScenarioError> {
        let percent = rt.speed_factor * Rational64::from_integer(100);
        if !percent.is_integer() || *percent.numer() <= 0 {
            return Err(ScenarioError::Invalid(format!(
                "speed factor {} of type {} has no whole-percent representation",
                rt.speed_factor, rt.id
            )));
        }
        let battery = if rt.battery.is_integer() && *rt.battery.numer() > 0 {
            *rt.battery.numer() as u64
        } else {
            return Err(ScenarioError::Invalid(format!(
                "battery {} of type {} is not a positive integer",
                rt.battery, rt.id
            )));
        };
        let kind = match rt.kind.as_str() {
            "uav" => RobotKind::Uav,
            _ => RobotKind::Agv,
        };
        let classes: Vec<String> = rt.allowed_edge_classes.iter().cloned().collect();
        let default: Vec<String> = kind.default_classes().into_iter().collect();
        let classes_sorted_default: BTreeSet<String> = default.iter().cloned().collect();
        let matches_default =
            rt.allowed_edge_classes == classes_sorted_default;
        Ok(RobotTypeSpec {
            id: rt.id,
            capabilities: rt.capabilities.labels(),
            speed_percent: *percent.numer() as u32,
            battery,
            cost: rt.deploy_cost,
            kind,
            allowed_edge_classes: if matches_default { None } else { Some(classes) },
        })
    }
}

/// Task deadline in a file: a number of time units or the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeadlineField {
    Finite(u64),
    Symbol(String),
}

/// A fully concrete problem instance on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "version_default")]
    pub format_version: u32,
    pub name: String,
    /// Seed the instance was generated with; provenance only.
    pub seed: u64,
    pub budget: u64,
    pub depot: usize,
    pub graph: InlineGraph,
    #[serde(default)]
    pub tasks: Vec<TaskRecord>,
    pub robot_types: Vec<RobotTypeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub id: usize,
    pub vertex: usize,
    pub deadline: DeadlineField,
    pub requirements: Vec<u32>,
}

impl ScenarioFile {
    pub fn from_problem(problem: &Problem, seed: u64) -> Result<ScenarioFile, ScenarioError> {
        Ok(ScenarioFile {
            format_version: FORMAT_VERSION,
            name: problem.name.clone(),
            seed,
            budget: problem.budget,
            depot: problem.depot,
            graph: InlineGraph::from_graph(&problem.graph),
            tasks: problem
                .tasks
                .iter()
                .map(|t| {
                    Ok(TaskRecord {
                        id: t.id,
                        vertex: t.vertex,
                        deadline: DeadlineField::from_time(t.deadline)?,
                        requirements: t.requirements.labels(),
                    })
                })
                .collect::<Result<_, ScenarioError>>()?,
            robot_types: problem
                .robot_types
                .iter()
                .map(RobotTypeSpec::from_model)
                .collect::<Result<_, ScenarioError>>()?,
        })
    }

    pub fn to_problem(&self) -> Result<Problem, ScenarioError> {
        Ok(Problem {
            name: self.name.clone(),
            graph: self.graph.to_graph(),
            depot: self.depot,
            tasks: self
                .tasks
                .iter()
                .map(|t| {
                    Ok(Task {
                        id: t.id,
                        vertex: t.vertex,
                        deadline: t.deadline.to_time()?,
                        requirements: LabelSet::from_labels(&t.requirements)
                            .map_err(|e| ScenarioError::Invalid(e.to_string()))?,
                    })
                })
                .collect::<Result<_, ScenarioError>>()?,
            robot_types: self
                .robot_types
                .iter()
                .enumerate()
                .map(|(i, r)| r.to_model(i))
                .collect::<Result<_, ScenarioError>>()?,
            budget: self.budget,
        })
    }
}

/// Tours of one solver run; robots with empty tours are omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    #[serde(default = "version_default")]
    pub format_version: u32,
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    pub reward: usize,
    #[serde(default)]
    pub tours: Vec<TourRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourRecord {
    pub robot_index: usize,
    pub type_id: u32,
    pub visits: Vec<usize>,
}

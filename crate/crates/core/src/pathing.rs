//! Environment graph and per-robot-type travel matrices.
//!
//! Robot types differ in speed and in which edge classes they may traverse
//! (a ground vehicle cannot use an `air` edge). For each type we build a
//! complete meta-graph over the depot and the task vertices: entry `(a, b)`
//! is the shortest permitted path length divided by the type's speed factor,
//! or infinite when no permitted path exists.

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use num_rational::Rational64;

use crate::model::{Problem, RobotType, Task};
use crate::units::TimeVal;

pub type VertexId = usize;

/// An undirected weighted edge tagged with a traversability class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: u32,
    pub class: String,
}

/// Undirected environment graph. Every listed edge is traversable in both
/// directions by any robot type whose permitted classes include its class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvironmentGraph {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
}

impl EnvironmentGraph {
    /// Validates endpoint ranges and positive lengths.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.u >= self.vertex_count || e.v >= self.vertex_count {
                return Err(GraphError::EndpointOutOfRange { edge: i });
            }
            if e.length == 0 {
                return Err(GraphError::ZeroLength { edge: i });
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {edge} has an endpoint outside the vertex range")]
    EndpointOutOfRange { edge: usize },
    #[error("edge {edge} has zero length")]
    ZeroLength { edge: usize },
}

/// Complete travel-time matrix over `{depot} ∪ task vertices` for one robot
/// type. Index 0 is the depot; index `t + 1` is task `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TravelMatrix {
    /// Position of the robot type in `Problem::robot_types`.
    pub robot_type: usize,
    n: usize,
    times: Vec<TimeVal>,
}

impl TravelMatrix {
    /// Matrix dimension, `task count + 1`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Travel time between meta-graph indices (0 = depot, `t + 1` = task `t`).
    pub fn time(&self, from: usize, to: usize) -> TimeVal {
        self.times[from * self.n + to]
    }

    pub fn depot_to_task(&self, task: usize) -> TimeVal {
        self.time(0, task + 1)
    }

    pub fn between_tasks(&self, a: usize, b: usize) -> TimeVal {
        self.time(a + 1, b + 1)
    }

    pub fn task_to_depot(&self, task: usize) -> TimeVal {
        self.time(task + 1, 0)
    }
}

/// Dijkstra over the subgraph of permitted edges, from one source.
/// Distances are metric lengths; `None` marks unreachable vertices.
fn shortest_metric_lengths(
    vertex_count: usize,
    adjacency: &[Vec<(VertexId, u64)>],
    source: VertexId,
) -> Vec<Option<u64>> {
    let mut dist: Vec<Option<u64>> = vec![None; vertex_count];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0);
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u] != Some(d) {
            continue;
        }
        for &(v, w) in &adjacency[u] {
            let nd = d + w;
            if dist[v].is_none_or(|cur| nd < cur) {
                dist[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Builds the meta-graph travel matrix for one robot type.
///
/// Shortest paths are computed on the subgraph of edges whose class the type
/// may traverse, then scaled by the inverse speed factor. Unreachable pairs
/// become [`TimeVal::Infinite`] rather than an error: a pair being unusable
/// for one type is ordinary data, not a defect in the problem.
pub fn build_travel_matrix(
    graph: &EnvironmentGraph,
    depot: VertexId,
    tasks: &[Task],
    rtype: &RobotType,
) -> TravelMatrix {
    let mut adjacency: Vec<Vec<(VertexId, u64)>> = vec![Vec::new(); graph.vertex_count];
    for e in &graph.edges {
        if rtype.allowed_edge_classes.contains(&e.class) {
            adjacency[e.u].push((e.v, u64::from(e.length)));
            adjacency[e.v].push((e.u, u64::from(e.length)));
        }
    }

    let meta_vertices: Vec<VertexId> = std::iter::once(depot)
        .chain(tasks.iter().map(|t| t.vertex))
        .collect();
    let n = meta_vertices.len();

    let mut times = vec![TimeVal::Infinite; n * n];
    for (row, &src) in meta_vertices.iter().enumerate() {
        let dist = shortest_metric_lengths(graph.vertex_count, &adjacency, src);
        for (col, &dst) in meta_vertices.iter().enumerate() {
            if let Some(d) = dist[dst] {
                let metric = Rational64::from_integer(d as i64);
                times[row * n + col] = TimeVal::Finite(metric / rtype.speed_factor);
            }
        }
    }

    TravelMatrix {
        robot_type: rtype.index,
        n,
        times,
    }
}

/// One travel matrix per robot type, indexed by type position.
pub fn build_travel_set(problem: &Problem) -> Vec<TravelMatrix> {
    problem
        .robot_types
        .iter()
        .map(|rt| build_travel_matrix(&problem.graph, problem.depot, &problem.tasks, rt))
        .collect()
}

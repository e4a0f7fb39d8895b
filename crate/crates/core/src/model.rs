//! Problem and solution types shared by every solver, plus the reward
//! functional and the feasibility predicates.
//!
//! Conventions baked into the model:
//!
//! * A tour starts and ends at the depot; the return leg counts toward the
//!   battery. Service takes zero time.
//! * Tours contain only serviced tasks. A visit that would arrive after the
//!   task's deadline makes the solution infeasible instead of being "visited
//!   but not counted", so the reward is simply the number of visits.
//! * Only robots with a nonempty tour ("active" robots) cost money.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Rational64;

use crate::pathing::{EnvironmentGraph, TravelMatrix, VertexId};
use crate::units::{Money, TimeVal};

pub type TaskId = usize;

/// A set of requirement/capability labels, stored as a bitmask.
/// Labels are small dense integers; at most 128 distinct labels per problem.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelSet(u128);

pub const MAX_LABELS: u32 = 128;

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn from_labels(labels: &[u32]) -> Result<LabelSet, ModelError> {
        let mut mask = 0u128;
        for &l in labels {
            if l >= MAX_LABELS {
                return Err(ModelError::LabelOutOfRange { label: l });
            }
            mask |= 1u128 << l;
        }
        Ok(LabelSet(mask))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True when every label in `required` is present in `self`.
    pub fn is_superset_of(self, required: LabelSet) -> bool {
        required.0 & !self.0 == 0
    }

    pub fn labels(self) -> Vec<u32> {
        (0..MAX_LABELS).filter(|&l| self.0 & (1u128 << l) != 0).collect()
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.labels().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// A task: visit `vertex` before `deadline` with a robot whose capabilities
/// cover `requirements`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub id: TaskId,
    pub vertex: VertexId,
    pub deadline: TimeVal,
    pub requirements: LabelSet,
}

/// An available robot type. `index` is the position in
/// `Problem::robot_types` and is what the rest of the crate refers to;
/// `id` is the user-facing identifier from the scenario file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobotType {
    pub index: usize,
    pub id: u32,
    pub capabilities: LabelSet,
    pub deploy_cost: Money,
    pub battery: Rational64,
    pub speed_factor: Rational64,
    pub allowed_edge_classes: BTreeSet<String>,
    pub kind: String,
}

/// One deployable robot instance in the base fleet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Robot {
    /// Position in the base fleet.
    pub index: usize,
    /// Robot type, as a position in `Problem::robot_types`.
    pub rtype: usize,
}

/// The base fleet: `ceil(budget / cost_i)` robots of each type, ordered by
/// (type position, copy index). Any budget-feasible fleet is a subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseFleet {
    pub robots: Vec<Robot>,
}

impl BaseFleet {
    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    /// Number of base-fleet slots per type.
    pub fn count_of_type(&self, rtype: usize) -> usize {
        self.robots.iter().filter(|r| r.rtype == rtype).count()
    }

    /// Base-fleet indices holding robots of `rtype`, in copy order.
    pub fn slots_of_type(&self, rtype: usize) -> Vec<usize> {
        self.robots
            .iter()
            .filter(|r| r.rtype == rtype)
            .map(|r| r.index)
            .collect()
    }
}

/// A full problem instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub graph: EnvironmentGraph,
    pub depot: VertexId,
    pub tasks: Vec<Task>,
    pub robot_types: Vec<RobotType>,
    pub budget: Money,
}

impl Problem {
    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    /// Checks the structural invariants the solvers rely on.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.graph
            .validate()
            .map_err(|e| ModelError::InvalidGraph(e.to_string()))?;
        if self.depot >= self.graph.vertex_count {
            return Err(ModelError::DepotOutOfRange { depot: self.depot });
        }
        if self.robot_types.is_empty() {
            return Err(ModelError::NoRobotTypes);
        }
        for (pos, rt) in self.robot_types.iter().enumerate() {
            if rt.index != pos {
                return Err(ModelError::TypeIndexMismatch { position: pos });
            }
            if rt.deploy_cost == 0 {
                return Err(ModelError::NonPositiveCost { rtype: pos });
            }
            if rt.battery <= Rational64::from_integer(0) {
                return Err(ModelError::NonPositiveBattery { rtype: pos });
            }
            if rt.speed_factor <= Rational64::from_integer(0) {
                return Err(ModelError::NonPositiveSpeed { rtype: pos });
            }
        }
        for (pos, t) in self.tasks.iter().enumerate() {
            if t.id != pos {
                return Err(ModelError::TaskIndexMismatch { position: pos });
            }
            if t.vertex >= self.graph.vertex_count {
                return Err(ModelError::TaskVertexOutOfRange { task: pos });
            }
            if t.deadline <= TimeVal::ZERO {
                return Err(ModelError::NonPositiveDeadline { task: pos });
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("requirement label {label} exceeds the supported range")]
    LabelOutOfRange { label: u32 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("depot vertex {depot} is outside the graph")]
    DepotOutOfRange { depot: usize },
    #[error("a problem needs at least one robot type")]
    NoRobotTypes,
    #[error("robot type at position {position} has a mismatched index")]
    TypeIndexMismatch { position: usize },
    #[error("robot type {rtype} must have a positive deployment cost")]
    NonPositiveCost { rtype: usize },
    #[error("robot type {rtype} must have a positive battery")]
    NonPositiveBattery { rtype: usize },
    #[error("robot type {rtype} must have a positive speed factor")]
    NonPositiveSpeed { rtype: usize },
    #[error("task at position {position} has a mismatched id")]
    TaskIndexMismatch { position: usize },
    #[error("task {task} sits on a vertex outside the graph")]
    TaskVertexOutOfRange { task: usize },
    #[error("task {task} must have a positive deadline")]
    NonPositiveDeadline { task: usize },
    #[error("tour of robot {robot} crosses an unreachable leg at visit {visit}")]
    UnreachableVertex { robot: usize, visit: usize },
    #[error("solution is infeasible: {0}")]
    InfeasibleSolution(String),
}

/// Ordered visits of one base-fleet robot. An empty tour means the robot is
/// not deployed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tour {
    pub robot_index: usize,
    pub visits: Vec<TaskId>,
}

impl Tour {
    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

/// One tour per base-fleet robot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub tours: Vec<Tour>,
}

impl Solution {
    /// All-empty solution for a fleet of `n` robots.
    pub fn empty(n: usize) -> Solution {
        Solution {
            tours: (0..n).map(|i| Tour { robot_index: i, visits: Vec::new() }).collect(),
        }
    }

    /// Indices of robots with nonempty tours.
    pub fn active_robots(&self) -> Vec<usize> {
        self.tours
            .iter()
            .filter(|t| !t.is_empty())
            .map(|t| t.robot_index)
            .collect()
    }

    /// Total number of visits. Equals the reward for feasible solutions.
    pub fn visit_count(&self) -> usize {
        self.tours.iter().map(|t| t.visits.len()).sum()
    }

    /// Deployment cost of the active robots.
    pub fn active_cost(&self, fleet: &BaseFleet, problem: &Problem) -> Money {
        self.tours
            .iter()
            .filter(|t| !t.is_empty())
            .map(|t| problem.robot_types[fleet.robots[t.robot_index].rtype].deploy_cost)
            .sum()
    }

    /// Active robots aggregated per type position.
    pub fn fleet_composition(&self, fleet: &BaseFleet, problem: &Problem) -> Vec<(usize, usize)> {
        let mut counts = vec![0usize; problem.robot_types.len()];
        for t in &self.tours {
            if !t.is_empty() {
                counts[fleet.robots[t.robot_index].rtype] += 1;
            }
        }
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect()
    }
}

/// Builds the base fleet: `ceil(budget / deploy_cost)` robots per type,
/// ordered by (type position, copy index).
pub fn build_base_fleet(problem: &Problem) -> BaseFleet {
    let mut robots = Vec::new();
    for rt in &problem.robot_types {
        let copies = problem.budget.div_ceil(rt.deploy_cost);
        for _ in 0..copies {
            robots.push(Robot { index: robots.len(), rtype: rt.index });
        }
    }
    BaseFleet { robots }
}

/// Arrival times along one tour plus the depot-to-depot duration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TourSchedule {
    /// `(task id, arrival time)` per visit, in tour order.
    pub arrivals: Vec<(TaskId, TimeVal)>,
    /// Total duration including the final leg back to the depot.
    pub duration: TimeVal,
}

/// Computes arrival times as prefix sums of travel legs. Fails when a leg is
/// unreachable for the robot's type.
pub fn tour_schedule(
    tour: &Tour,
    travel: &TravelMatrix,
) -> Result<TourSchedule, ModelError> {
    if tour.visits.is_empty() {
        return Ok(TourSchedule { arrivals: Vec::new(), duration: TimeVal::ZERO });
    }
    let mut arrivals = Vec::with_capacity(tour.visits.len());
    let mut clock = TimeVal::ZERO;
    let mut at = 0usize; // meta index of the depot
    for (k, &task) in tour.visits.iter().enumerate() {
        let leg = travel.time(at, task + 1);
        clock = clock + leg;
        if !clock.is_finite() {
            return Err(ModelError::UnreachableVertex { robot: tour.robot_index, visit: k });
        }
        arrivals.push((task, clock));
        at = task + 1;
    }
    let back = travel.time(at, 0);
    let duration = clock + back;
    if !duration.is_finite() {
        return Err(ModelError::UnreachableVertex {
            robot: tour.robot_index,
            visit: tour.visits.len(),
        });
    }
    Ok(TourSchedule { arrivals, duration })
}

/// A single violated constraint, with enough indices to locate it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    BudgetExceeded { active_cost: Money, budget: Money },
    BatteryExceeded { robot: usize, duration: TimeVal, battery: TimeVal },
    MissingCapability { robot: usize, task: TaskId },
    DeadlineMissed { robot: usize, task: TaskId, arrival: TimeVal, deadline: TimeVal },
    DuplicateTask { task: TaskId },
    UnknownTask { robot: usize, task: TaskId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BudgetExceeded { active_cost, budget } => {
                write!(f, "active fleet costs {active_cost} but the budget is {budget}")
            }
            Violation::BatteryExceeded { robot, duration, battery } => {
                write!(f, "robot {robot} tours for {duration} exceeding battery {battery}")
            }
            Violation::MissingCapability { robot, task } => {
                write!(f, "robot {robot} lacks the capabilities of task {task}")
            }
            Violation::DeadlineMissed { robot, task, arrival, deadline } => {
                write!(f, "robot {robot} reaches task {task} at {arrival}, after deadline {deadline}")
            }
            Violation::DuplicateTask { task } => write!(f, "task {task} is visited more than once"),
            Violation::UnknownTask { robot, task } => {
                write!(f, "robot {robot} visits unknown task {task}")
            }
        }
    }
}

/// Outcome of a feasibility check. Infeasibility is a verdict, not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feasibility {
    pub violations: Vec<Violation>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every solution constraint: budget over active robots, battery per
/// tour, capability match, deadlines, and task uniqueness across tours.
///
/// `travel_set` holds one matrix per robot type, indexed by type position.
pub fn check_feasibility(
    solution: &Solution,
    problem: &Problem,
    fleet: &BaseFleet,
    travel_set: &[TravelMatrix],
) -> Feasibility {
    let mut violations = Vec::new();

    let active_cost = solution.active_cost(fleet, problem);
    if active_cost > problem.budget {
        violations.push(Violation::BudgetExceeded { active_cost, budget: problem.budget });
    }

    let mut seen = vec![false; problem.tasks.len()];
    for tour in &solution.tours {
        if tour.is_empty() {
            continue;
        }
        let robot = tour.robot_index;
        let rtype = &problem.robot_types[fleet.robots[robot].rtype];
        let travel = &travel_set[rtype.index];

        for &task in &tour.visits {
            if task >= problem.tasks.len() {
                violations.push(Violation::UnknownTask { robot, task });
                continue;
            }
            if seen[task] {
                violations.push(Violation::DuplicateTask { task });
            }
            seen[task] = true;
            if !rtype.capabilities.is_superset_of(problem.tasks[task].requirements) {
                violations.push(Violation::MissingCapability { robot, task });
            }
        }
        if tour.visits.iter().any(|&t| t >= problem.tasks.len()) {
            continue; // schedule is meaningless with unknown tasks
        }

        // Walk the schedule by hand so an unreachable leg degrades into an
        // infinite arrival/duration instead of aborting the verdict.
        let mut clock = TimeVal::ZERO;
        let mut at = 0usize;
        for &task in &tour.visits {
            clock = clock + travel.time(at, task + 1);
            let deadline = problem.tasks[task].deadline;
            if clock > deadline {
                violations.push(Violation::DeadlineMissed {
                    robot,
                    task,
                    arrival: clock,
                    deadline,
                });
            }
            at = task + 1;
        }
        let duration = clock + travel.time(at, 0);
        let battery = TimeVal::Finite(rtype.battery);
        if duration > battery {
            violations.push(Violation::BatteryExceeded { robot, duration, battery });
        }
    }

    Feasibility { violations }
}

/// The reward functional: number of distinct tasks serviced on time.
///
/// Guarded by a full feasibility check so a late or duplicated visit can
/// never inflate the count.
pub fn evaluate_reward(
    solution: &Solution,
    problem: &Problem,
    fleet: &BaseFleet,
    travel_set: &[TravelMatrix],
) -> Result<usize, ModelError> {
    let verdict = check_feasibility(solution, problem, fleet, travel_set);
    if let Some(first) = verdict.violations.first() {
        return Err(ModelError::InfeasibleSolution(first.to_string()));
    }
    Ok(solution.visit_count())
}

//! Exhaustive search over fleets, task assignments and visit orders.
//!
//! The search has three nested layers:
//!
//! 1. every fleet composition (count per type) affordable under the budget;
//! 2. for a composition, every way to split tasks among its robots, via a
//!    subset-cover sweep over task bitmasks;
//! 3. per robot type and task subset, whether some visit order meets every
//!    deadline and the battery, via a dynamic program over (subset, last)
//!    states that considers all orderings.
//!
//! Everything is enumerated, nothing is sampled, so the result is exact.
//! The `OracleLimits` guard refuses instances that would blow the state
//! space up instead of silently grinding.

use num_rational::Rational64;

use crate::model::{
    build_base_fleet, BaseFleet, LabelSet, Problem, Solution, Task, TaskId, Tour,
};
use crate::pathing::{build_travel_set, Edge, EnvironmentGraph, TravelMatrix};
use crate::units::{Money, TimeVal};

/// Hard ceilings checked before any enumeration starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_tasks: usize,
    pub max_base_fleet: usize,
    pub max_states: u64,
}

/// Subset tables are dense in `2^tasks`; beyond this the oracle is the
/// wrong tool no matter what the caller asks for.
pub const SUPPORTED_MAX_TASKS: usize = 16;

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_tasks: 12, max_base_fleet: 12, max_states: 50_000_000 }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("size exceeded: {quantity} is {actual}, limit {limit}")]
    SizeExceeded { quantity: &'static str, actual: u64, limit: u64 },
    #[error("fleet requests {requested} robots of type {rtype} but the base fleet has {available}")]
    FleetBeyondBase { rtype: usize, requested: usize, available: usize },
}

#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub reward: usize,
    pub solution: Solution,
    /// Enumeration effort actually spent, for reporting.
    pub states: u64,
}

/// Per-type reachability tables over task subsets.
struct TypeReach {
    /// Tasks the type can service at all (capability and graph permitting).
    serviceable: u32,
    /// `arrival[mask][last]`: earliest time a robot of this type can sit at
    /// `last` having visited exactly `mask`, all deadlines respected.
    arrival: Vec<Vec<Option<Rational64>>>,
    /// Predecessor of `last` in the ordering behind `arrival[mask][last]`.
    parent: Vec<Vec<u8>>,
    /// Whether some ordering of `mask` also fits the battery.
    feasible: Vec<bool>,
}

const NO_PARENT: u8 = u8::MAX;

fn build_type_reach(
    problem: &Problem,
    rtype: usize,
    travel: &TravelMatrix,
    states: &mut u64,
) -> TypeReach {
    let n = problem.task_count();
    let full = 1usize << n;
    let caps = problem.robot_types[rtype].capabilities;
    let battery = TimeVal::Finite(problem.robot_types[rtype].battery);

    let mut serviceable = 0u32;
    for t in &problem.tasks {
        if caps.is_superset_of(t.requirements) {
            serviceable |= 1 << t.id;
        }
    }

    let mut arrival = vec![vec![None; n]; full];
    let mut parent = vec![vec![NO_PARENT; n]; full];
    let mut feasible = vec![false; full];
    feasible[0] = true;

    for t in 0..n {
        if serviceable & (1 << t) == 0 {
            continue;
        }
        if let TimeVal::Finite(d) = travel.depot_to_task(t) {
            if TimeVal::Finite(d) <= problem.tasks[t].deadline {
                arrival[1 << t][t] = Some(d);
            }
        }
    }

    for mask in 1..full {
        if mask as u32 & !serviceable != 0 {
            continue;
        }
        for last in 0..n {
            let Some(at) = arrival[mask][last] else { continue };
            *states += 1;
            // close the tour
            if !feasible[mask] {
                if let TimeVal::Finite(back) = travel.task_to_depot(last) {
                    if TimeVal::Finite(at + back) <= battery {
                        feasible[mask] = true;
                    }
                }
            }
            // extend to one more task
            for next in 0..n {
                if mask & (1 << next) != 0 || serviceable & (1 << next) == 0 {
                    continue;
                }
                let TimeVal::Finite(leg) = travel.between_tasks(last, next) else { continue };
                let reach = at + leg;
                if TimeVal::Finite(reach) > problem.tasks[next].deadline {
                    continue;
                }
                let slot = &mut arrival[mask | (1 << next)][next];
                if slot.is_none_or(|cur| reach < cur) {
                    *slot = Some(reach);
                    parent[mask | (1 << next)][next] = last as u8;
                }
            }
        }
    }

    TypeReach { serviceable, arrival, parent, feasible }
}

impl TypeReach {
    /// Deterministic feasible visit order for `mask`: minimal completion
    /// time, ties to the smallest final task index.
    fn order_for(&self, mask: u32, travel: &TravelMatrix) -> Vec<TaskId> {
        if mask == 0 {
            return Vec::new();
        }
        let n = self.arrival[0].len();
        let mut best: Option<(Rational64, usize)> = None;
        for last in 0..n {
            if mask & (1 << last) == 0 {
                continue;
            }
            let Some(at) = self.arrival[mask as usize][last] else { continue };
            let TimeVal::Finite(back) = travel.task_to_depot(last) else { continue };
            let total = at + back;
            if best.is_none_or(|(t, _)| total < t) {
                best = Some((total, last));
            }
        }
        let (_, mut last) = best.expect("order_for called on an infeasible mask");
        let mut mask = mask as usize;
        let mut order = vec![last];
        while self.parent[mask][last] != NO_PARENT {
            let prev = self.parent[mask][last] as usize;
            mask &= !(1 << last);
            last = prev;
            order.push(last);
        }
        order.reverse();
        order
    }
}

fn check_state_budget(states: u64, limits: &OracleLimits) -> Result<(), OracleError> {
    if states > limits.max_states {
        return Err(OracleError::SizeExceeded {
            quantity: "search states",
            actual: states,
            limit: limits.max_states,
        });
    }
    Ok(())
}

/// Best coverage achievable by the given multiset of robots (as type
/// positions), together with the chosen subset per robot. Robots may stay
/// unused (empty subset).
fn best_cover(
    robots: &[usize],
    reaches: &[TypeReach],
    n: usize,
    states: &mut u64,
    limits: &OracleLimits,
) -> Result<Option<(u32, Vec<u32>)>, OracleError> {
    let full = 1usize << n;
    // levels[r][mask]: mask coverable by the first r robots
    let mut levels: Vec<Vec<bool>> = Vec::with_capacity(robots.len() + 1);
    let mut cur = vec![false; full];
    cur[0] = true;
    levels.push(cur.clone());
    for &rt in robots {
        let reach = &reaches[rt];
        let mut next = vec![false; full];
        for mask in 0..full {
            if !cur[mask] {
                continue;
            }
            let domain = !(mask as u32) & reach.serviceable & ((full - 1) as u32);
            // all submasks of `domain`, including the empty one
            let mut s = domain;
            loop {
                *states += 1;
                if reach.feasible[s as usize] {
                    next[mask | s as usize] = true;
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & domain;
            }
        }
        check_state_budget(*states, limits)?;
        cur = next.clone();
        levels.push(next);
    }

    let best_mask = (0..full)
        .filter(|&m| cur[m])
        .max_by_key(|&m| (m.count_ones(), std::cmp::Reverse(m)));

    let Some(best_mask) = best_mask else { return Ok(None) };

    // Walk back through the levels, peeling one robot's subset at a time.
    let mut picks = vec![0u32; robots.len()];
    let mut m = best_mask as u32;
    for r in (0..robots.len()).rev() {
        let reach = &reaches[robots[r]];
        let domain = m & reach.serviceable;
        let mut s = domain;
        let chosen = loop {
            if reach.feasible[s as usize] && levels[r][(m & !s) as usize] {
                break s;
            }
            assert!(s != 0, "cover reconstruction lost its trail");
            s = (s - 1) & domain;
        };
        picks[r] = chosen;
        m &= !chosen;
    }
    debug_assert_eq!(m, 0);
    Ok(Some((best_mask as u32, picks)))
}

/// Builds a base-fleet-shaped solution out of per-robot subsets for a
/// composition `counts[type] = #robots`.
fn assemble_solution(
    problem: &Problem,
    fleet: &BaseFleet,
    travel: &[TravelMatrix],
    reaches: &[TypeReach],
    robots: &[usize],
    picks: &[u32],
) -> Solution {
    let mut solution = Solution::empty(fleet.len());
    let mut used_per_type = vec![0usize; problem.robot_types.len()];
    for (r, &rt) in robots.iter().enumerate() {
        let copy = used_per_type[rt];
        used_per_type[rt] += 1;
        if picks[r] == 0 {
            continue;
        }
        let slot = fleet.slots_of_type(rt)[copy];
        let order = reaches[rt].order_for(picks[r], &travel[rt]);
        solution.tours[slot] = Tour { robot_index: slot, visits: order };
    }
    solution
}

fn expand_composition(counts: &[usize]) -> Vec<usize> {
    let mut robots = Vec::new();
    for (rt, &c) in counts.iter().enumerate() {
        robots.extend(std::iter::repeat_n(rt, c));
    }
    robots
}

fn check_preconditions(problem: &Problem, limits: &OracleLimits) -> Result<BaseFleet, OracleError> {
    let n = problem.task_count();
    let cap = limits.max_tasks.min(SUPPORTED_MAX_TASKS);
    if n > cap {
        return Err(OracleError::SizeExceeded {
            quantity: "tasks",
            actual: n as u64,
            limit: cap as u64,
        });
    }
    let fleet = build_base_fleet(problem);
    if fleet.len() > limits.max_base_fleet {
        return Err(OracleError::SizeExceeded {
            quantity: "base fleet",
            actual: fleet.len() as u64,
            limit: limits.max_base_fleet as u64,
        });
    }
    Ok(fleet)
}

/// Exhaustive optimum over every budget-feasible subset of the base fleet.
pub fn brute_force(problem: &Problem, limits: &OracleLimits) -> Result<OracleOutcome, OracleError> {
    let fleet = check_preconditions(problem, limits)?;
    let travel = build_travel_set(problem);

    let mut states = 0u64;
    let reaches: Vec<TypeReach> = (0..problem.robot_types.len())
        .map(|rt| build_type_reach(problem, rt, &travel[rt], &mut states))
        .collect();
    check_state_budget(states, limits)?;

    // Per-type enumeration caps: more robots of a type than tasks it can
    // service can never improve coverage.
    let caps: Vec<usize> = problem
        .robot_types
        .iter()
        .map(|rt| {
            let afford = (problem.budget / rt.deploy_cost) as usize;
            afford.min(reaches[rt.index].serviceable.count_ones() as usize)
        })
        .collect();

    let mut best = OracleOutcome { reward: 0, solution: Solution::empty(fleet.len()), states: 0 };
    let mut counts = vec![0usize; problem.robot_types.len()];

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        problem: &Problem,
        fleet: &BaseFleet,
        travel: &[TravelMatrix],
        reaches: &[TypeReach],
        caps: &[usize],
        limits: &OracleLimits,
        counts: &mut Vec<usize>,
        rtype: usize,
        cost: Money,
        states: &mut u64,
        best: &mut OracleOutcome,
    ) -> Result<(), OracleError> {
        if rtype == counts.len() {
            let robots = expand_composition(counts);
            // Skip compositions whose combined capabilities cannot beat the
            // incumbent.
            let union = counts
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c > 0)
                .fold(0u32, |acc, (rt, _)| acc | reaches[rt].serviceable);
            if (union.count_ones() as usize) <= best.reward && best.reward > 0 {
                return Ok(());
            }
            let n = problem.task_count();
            if let Some((mask, picks)) = best_cover(&robots, reaches, n, states, limits)? {
                let reward = mask.count_ones() as usize;
                if reward > best.reward {
                    let solution =
                        assemble_solution(problem, fleet, travel, reaches, &robots, &picks);
                    debug_assert_eq!(solution.visit_count(), reward);
                    *best = OracleOutcome { reward, solution, states: *states };
                }
            }
            return Ok(());
        }
        let unit = problem.robot_types[rtype].deploy_cost;
        let mut c = 0;
        loop {
            let add = unit
                .checked_mul(c as u64)
                .filter(|&extra| cost + extra <= problem.budget);
            if c > caps[rtype] || add.is_none() {
                break;
            }
            counts[rtype] = c;
            recurse(
                problem,
                fleet,
                travel,
                reaches,
                caps,
                limits,
                counts,
                rtype + 1,
                cost + add.unwrap(),
                states,
                best,
            )?;
            c += 1;
        }
        counts[rtype] = 0;
        Ok(())
    }

    recurse(
        problem, &fleet, &travel, &reaches, &caps, limits, &mut counts, 0, 0, &mut states,
        &mut best,
    )?;
    best.states = states;
    Ok(best)
}

/// Exhaustive optimum for a fixed multiset of robots (type positions). The
/// budget is not consulted: the fleet is taken as given.
pub fn brute_force_for_fleet(
    problem: &Problem,
    fleet_types: &[usize],
    limits: &OracleLimits,
) -> Result<OracleOutcome, OracleError> {
    let fleet = check_preconditions(problem, limits)?;
    for rt in 0..problem.robot_types.len() {
        let requested = fleet_types.iter().filter(|&&t| t == rt).count();
        let available = fleet.count_of_type(rt);
        if requested > available {
            return Err(OracleError::FleetBeyondBase { rtype: rt, requested, available });
        }
    }
    let travel = build_travel_set(problem);
    let n = problem.task_count();

    let mut states = 0u64;
    let reaches: Vec<TypeReach> = (0..problem.robot_types.len())
        .map(|rt| build_type_reach(problem, rt, &travel[rt], &mut states))
        .collect();
    check_state_budget(states, limits)?;

    let mut robots = fleet_types.to_vec();
    robots.sort_unstable();
    let outcome = best_cover(&robots, &reaches, n, &mut states, limits)?;
    let best = match outcome {
        Some((mask, picks)) => {
            let solution = assemble_solution(problem, &fleet, &travel, &reaches, &robots, &picks);
            OracleOutcome { reward: mask.count_ones() as usize, solution, states }
        }
        None => OracleOutcome { reward: 0, solution: Solution::empty(fleet.len()), states },
    };
    Ok(best)
}

/// Builds the star-graph instance that encodes a 0/1 knapsack: one vertex
/// and one dedicated robot type per item, one task copy per unit of profit,
/// unit travel times and battery 2, budget equal to the knapsack capacity.
/// The optimal reward of this instance equals the knapsack optimum.
pub fn knapsack_reduction(items: &[(Money, u64)], capacity: Money) -> Problem {
    assert!(items.iter().all(|&(w, _)| w > 0), "item weights must be positive");
    let graph = EnvironmentGraph {
        vertex_count: items.len() + 1,
        edges: (0..items.len())
            .map(|i| Edge { u: 0, v: i + 1, length: 1, class: "ground".into() })
            .collect(),
    };
    let mut tasks = Vec::new();
    for (i, &(_, profit)) in items.iter().enumerate() {
        for _ in 0..profit {
            tasks.push(Task {
                id: tasks.len(),
                vertex: i + 1,
                deadline: TimeVal::from_int(1),
                requirements: LabelSet::from_labels(&[i as u32]).unwrap(),
            });
        }
    }
    let robot_types = items
        .iter()
        .enumerate()
        .map(|(i, &(weight, _))| crate::model::RobotType {
            index: i,
            id: i as u32 + 1,
            capabilities: LabelSet::from_labels(&[i as u32]).unwrap(),
            deploy_cost: weight,
            battery: Rational64::from_integer(2),
            speed_factor: Rational64::from_integer(1),
            allowed_edge_classes: std::collections::BTreeSet::from(["ground".to_string()]),
            kind: "agv".into(),
        })
        .collect();
    Problem {
        name: "knapsack-star".into(),
        graph,
        depot: 0,
        tasks,
        robot_types,
        budget: capacity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasibility, evaluate_reward, RobotType};
    use std::collections::BTreeSet;

    fn simple_problem(n_tasks: usize, budget: Money) -> Problem {
        let graph = EnvironmentGraph {
            vertex_count: n_tasks + 1,
            edges: (0..n_tasks)
                .map(|v| Edge { u: 0, v: v + 1, length: 5, class: "ground".into() })
                .collect(),
        };
        Problem {
            name: "simple".into(),
            graph,
            depot: 0,
            tasks: (0..n_tasks)
                .map(|i| Task {
                    id: i,
                    vertex: i + 1,
                    deadline: TimeVal::from_int(50),
                    requirements: LabelSet::from_labels(&[0]).unwrap(),
                })
                .collect(),
            robot_types: vec![RobotType {
                index: 0,
                id: 1,
                capabilities: LabelSet::from_labels(&[0]).unwrap(),
                deploy_cost: 10,
                battery: Rational64::from_integer(40),
                speed_factor: Rational64::from_integer(1),
                allowed_edge_classes: BTreeSet::from(["ground".to_string()]),
                kind: "agv".into(),
            }],
            budget,
        }
    }

    #[test]
    fn no_tasks_means_zero_reward() {
        let p = simple_problem(0, 30);
        let out = brute_force(&p, &OracleLimits::default()).unwrap();
        assert_eq!(out.reward, 0);
    }

    #[test]
    fn single_serviceable_task_gives_one() {
        let p = simple_problem(1, 10);
        let out = brute_force(&p, &OracleLimits::default()).unwrap();
        assert_eq!(out.reward, 1);
        let fleet = build_base_fleet(&p);
        let travel = build_travel_set(&p);
        assert_eq!(evaluate_reward(&out.solution, &p, &fleet, &travel).unwrap(), 1);
    }

    #[test]
    fn battery_limits_coverage() {
        // battery 40, legs of 10 each way: a tour fits at most 3 tasks
        // (5 out + 4 hops of 10 between leaves + 5 back is too long).
        let p = simple_problem(4, 10);
        let out = brute_force(&p, &OracleLimits::default()).unwrap();
        // depot→t1 = 5, leaf→leaf = 10; visits v: duration 10 + 10(v−1) ≤ 40 ⇒ v ≤ 4? 10+30=40 ok
        assert_eq!(out.reward, 4);
        let p2 = simple_problem(5, 10);
        let out2 = brute_force(&p2, &OracleLimits::default()).unwrap();
        assert_eq!(out2.reward, 4); // one robot affordable, five visits need 50
    }

    #[test]
    fn budget_expands_coverage() {
        let p = simple_problem(5, 20); // two robots affordable
        let out = brute_force(&p, &OracleLimits::default()).unwrap();
        assert_eq!(out.reward, 5);
        let fleet = build_base_fleet(&p);
        let travel = build_travel_set(&p);
        assert!(check_feasibility(&out.solution, &p, &fleet, &travel).is_feasible());
    }

    #[test]
    fn limits_are_enforced() {
        let p = simple_problem(7, 10);
        let limits = OracleLimits { max_tasks: 6, ..Default::default() };
        let err = brute_force(&p, &limits).unwrap_err();
        assert!(matches!(err, OracleError::SizeExceeded { quantity: "tasks", .. }));

        let p = simple_problem(3, 200); // base fleet of 20
        let err = brute_force(&p, &OracleLimits::default()).unwrap_err();
        assert!(matches!(err, OracleError::SizeExceeded { quantity: "base fleet", .. }));
    }

    #[test]
    fn state_guard_aborts() {
        let p = simple_problem(6, 20);
        let limits = OracleLimits { max_states: 10, ..Default::default() };
        let err = brute_force(&p, &limits).unwrap_err();
        assert!(matches!(err, OracleError::SizeExceeded { quantity: "search states", .. }));
    }

    #[test]
    fn fixed_fleet_oracle_respects_the_given_fleet() {
        let p = simple_problem(5, 20);
        let limits = OracleLimits::default();
        let none = brute_force_for_fleet(&p, &[], &limits).unwrap();
        assert_eq!(none.reward, 0);
        let one = brute_force_for_fleet(&p, &[0], &limits).unwrap();
        assert_eq!(one.reward, 4);
        let two = brute_force_for_fleet(&p, &[0, 0], &limits).unwrap();
        assert_eq!(two.reward, 5);
        let err = brute_force_for_fleet(&p, &[0, 0, 0], &limits).unwrap_err();
        assert!(matches!(err, OracleError::FleetBeyondBase { .. }));
    }

    /// Tiny hand-checkable knapsack: items (weight, profit) with capacity 5.
    /// Best is items {2, 3}: weight 2+3, profit 2+3 = 5.
    #[test]
    fn knapsack_reduction_recovers_knapsack_optimum() {
        let items = [(2u64, 2u64), (3, 3), (4, 4)];
        let p = knapsack_reduction(&items, 5);
        p.validate().unwrap();
        let limits = OracleLimits { max_base_fleet: 16, ..Default::default() };
        let out = brute_force(&p, &limits).unwrap();
        assert_eq!(out.reward, 5);
        let fleet = build_base_fleet(&p);
        let travel = build_travel_set(&p);
        assert!(check_feasibility(&out.solution, &p, &fleet, &travel).is_feasible());
    }

    #[test]
    fn oracle_solution_matches_reported_reward() {
        for budget in [0u64, 10, 15, 30] {
            let p = simple_problem(4, budget);
            let out = brute_force(&p, &OracleLimits::default()).unwrap();
            let fleet = build_base_fleet(&p);
            let travel = build_travel_set(&p);
            assert_eq!(
                evaluate_reward(&out.solution, &p, &fleet, &travel).unwrap(),
                out.reward
            );
        }
    }
}

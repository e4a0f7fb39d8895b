//! Fleet large neighbourhood search.
//!
//! The solver jointly picks which robots to deploy and the tour each robot
//! drives. Every iteration destroys part of the incumbent solution with one
//! of two removal heuristics — dropping whole robots from the fleet, or
//! dropping individual visits from each tour — and rebuilds it with a
//! noisy cheapest-insertion repair. Worse solutions are occasionally kept
//! under a simulated-annealing acceptance rule to escape local optima.

use std::io::{self, Write};

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::model::{build_base_fleet, BaseFleet, Problem, Robot, Solution, TaskId};
use crate::pathing::{build_travel_set, TravelMatrix};
use crate::units::{Money, TimeVal};

/// Which quantity discounts the utility of activating an idle robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscountDenominator {
    /// Deployment cost.
    Cost,
    /// Battery life.
    Battery,
}

/// Tuning knobs of the solver. The defaults are the reference configuration;
/// only `seed` has no meaningful default and should be set per run.
#[derive(Clone, Debug, PartialEq)]
pub struct LnsParams {
    /// Iteration budget K.
    pub iterations: usize,
    /// Upper limit, in percent of active robots, for robot removal.
    pub robot_removal_max_pct: u32,
    /// Upper limit, in percent of each tour's length, for task removal.
    pub task_removal_max_pct: u32,
    /// Probability of choosing robot removal over task removal.
    pub removal_mode_bias: f64,
    /// Probability of discounting the gain when activating an idle robot.
    pub discount_prob: f64,
    /// Upper bound of the multiplicative insertion noise.
    pub noise_max: f64,
    /// Simulated-annealing start temperature, in reward units.
    pub sa_initial_temp: f64,
    /// Multiplicative cooling factor per iteration, in (0, 1).
    pub sa_cooling: f64,
    pub discount_denominator: DiscountDenominator,
    pub seed: u64,
}

impl Default for LnsParams {
    fn default() -> Self {
        LnsParams {
            iterations: 1000,
            robot_removal_max_pct: 25,
            task_removal_max_pct: 50,
            removal_mode_bias: 1.0 / 3.0,
            discount_prob: 0.1,
            noise_max: 0.1,
            sa_initial_temp: 1.0,
            sa_cooling: 0.995,
            discount_denominator: DiscountDenominator::Cost,
            seed: 0,
        }
    }
}

impl LnsParams {
    pub fn validate(&self) -> Result<(), LnsError> {
        if self.iterations == 0 {
            return Err(LnsError::Invalid("iterations must be at least 1"));
        }
        if self.robot_removal_max_pct > 100 || self.task_removal_max_pct > 100 {
            return Err(LnsError::Invalid("removal percentages must lie in 0..=100"));
        }
        for (name, p) in [
            ("removal_mode_bias", self.removal_mode_bias),
            ("discount_prob", self.discount_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(LnsError::InvalidProbability { name });
            }
        }
        if self.noise_max.is_nan() || self.noise_max < 0.0 {
            return Err(LnsError::Invalid("noise_max must be non-negative"));
        }
        if self.sa_initial_temp.is_nan() || self.sa_initial_temp < 0.0 {
            return Err(LnsError::Invalid("sa_initial_temp must be non-negative"));
        }
        if !(self.sa_cooling > 0.0 && self.sa_cooling < 1.0) {
            return Err(LnsError::Invalid("sa_cooling must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LnsError {
    #[error("{0}")]
    Invalid(&'static str),
    #[error("{name} must lie in [0, 1]")]
    InvalidProbability { name: &'static str },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemovalMode {
    Robot,
    Task,
}

impl RemovalMode {
    pub fn label(self) -> &'static str {
        match self {
            RemovalMode::Robot => "robot",
            RemovalMode::Task => "task",
        }
    }
}

/// Result of a removal heuristic: the stripped solution and the visits that
/// now wait for reinsertion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovalOutcome {
    pub partial_solution: Solution,
    pub unassigned: Vec<TaskId>,
}

/// How the fleet is chosen during repair.
enum FleetScope {
    /// Any base-fleet robot may be activated while the budget allows it.
    Budgeted,
    /// Only the flagged slots may carry tours; they count as deployed
    /// regardless of the budget and activation is never discounted.
    Fixed { allowed: Vec<bool> },
}

/// Everything a repair call needs to know about the instance.
pub struct LnsContext<'a> {
    pub problem: &'a Problem,
    pub fleet: &'a BaseFleet,
    pub travel: &'a [TravelMatrix],
    scope: FleetScope,
}

impl<'a> LnsContext<'a> {
    pub fn budgeted(
        problem: &'a Problem,
        fleet: &'a BaseFleet,
        travel: &'a [TravelMatrix],
    ) -> LnsContext<'a> {
        LnsContext { problem, fleet, travel, scope: FleetScope::Budgeted }
    }

    /// Restricts the search to the given base-fleet slots and treats them as
    /// permanently deployed.
    pub(crate) fn fixed(
        problem: &'a Problem,
        fleet: &'a BaseFleet,
        travel: &'a [TravelMatrix],
        allowed: Vec<bool>,
    ) -> LnsContext<'a> {
        debug_assert_eq!(allowed.len(), fleet.len());
        LnsContext { problem, fleet, travel, scope: FleetScope::Fixed { allowed } }
    }

    fn slot_allowed(&self, robot: usize) -> bool {
        match &self.scope {
            FleetScope::Budgeted => true,
            FleetScope::Fixed { allowed } => allowed[robot],
        }
    }

    fn budget_applies(&self) -> bool {
        matches!(self.scope, FleetScope::Budgeted)
    }

    /// Feasibility under this scope: a fixed fleet is taken as given, so
    /// only the per-tour and uniqueness constraints apply to it.
    fn scope_feasible(&self, solution: &Solution) -> bool {
        let verdict =
            crate::model::check_feasibility(solution, self.problem, self.fleet, self.travel);
        if self.budget_applies() {
            verdict.is_feasible()
        } else {
            verdict
                .violations
                .iter()
                .all(|v| matches!(v, crate::model::Violation::BudgetExceeded { .. }))
        }
    }
}

/// Callback receiving each iteration's record and incumbent solution.
pub type IterationObserver<'a> = &'a mut dyn FnMut(&IterationRecord, &Solution);

/// One line of the iteration log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mode: RemovalMode,
    pub current_reward: usize,
    pub best_reward: usize,
    pub accepted: bool,
}

/// Writes the log as CSV: `iteration,mode,current_reward,best_reward,accepted`.
pub fn write_iteration_log<W: Write>(records: &[IterationRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "iteration,mode,current_reward,best_reward,accepted")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration,
            r.mode.label(),
            r.current_reward,
            r.best_reward,
            r.accepted
        )?;
    }
    Ok(())
}

/// Solver result: the best solution found, the robots it deploys, and the
/// per-iteration log.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub best: Solution,
    pub fleet: Vec<Robot>,
    pub log: Vec<IterationRecord>,
}

impl SolveOutcome {
    pub fn best_reward(&self) -> usize {
        self.best.visit_count()
    }
}

/// Picks the removal heuristic for one iteration.
pub fn select_removal_mode<R: Rng>(rng: &mut R, params: &LnsParams) -> RemovalMode {
    if rng.gen_bool(params.removal_mode_bias) {
        RemovalMode::Robot
    } else {
        RemovalMode::Task
    }
}

/// Empties the tours of a random subset of the active robots. The subset
/// size is drawn uniformly from `1..=max(1, ⌊pct% · #active⌋)`; with no
/// active robot the solution is returned unchanged.
pub fn robot_removal<R: Rng>(
    solution: &Solution,
    params: &LnsParams,
    rng: &mut R,
) -> RemovalOutcome {
    let active = solution.active_robots();
    if active.is_empty() {
        return RemovalOutcome { partial_solution: solution.clone(), unassigned: Vec::new() };
    }
    let limit = ((active.len() * params.robot_removal_max_pct as usize) / 100).max(1);
    let m = rng.gen_range(1..=limit);
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, active.len(), m)
        .into_iter()
        .map(|i| active[i])
        .collect();
    chosen.sort_unstable();

    let mut partial = solution.clone();
    let mut unassigned = Vec::new();
    for robot in chosen {
        unassigned.append(&mut partial.tours[robot].visits);
    }
    RemovalOutcome { partial_solution: partial, unassigned }
}

/// Removes, from each nonempty tour independently, `k` visits with `k` drawn
/// uniformly from `0..=⌊pct% · |tour|⌋`. Remaining visits keep their order.
pub fn task_removal<R: Rng>(
    solution: &Solution,
    params: &LnsParams,
    rng: &mut R,
) -> RemovalOutcome {
    let mut partial = solution.clone();
    let mut unassigned = Vec::new();
    for tour in &mut partial.tours {
        let len = tour.visits.len();
        if len == 0 {
            continue;
        }
        let limit = (len * params.task_removal_max_pct as usize) / 100;
        let k = rng.gen_range(0..=limit);
        if k == 0 {
            continue;
        }
        let mut positions: Vec<usize> = rand::seq::index::sample(rng, len, k).into_vec();
        positions.sort_unstable();
        for (shift, pos) in positions.into_iter().enumerate() {
            unassigned.push(tour.visits.remove(pos - shift));
        }
    }
    RemovalOutcome { partial_solution: partial, unassigned }
}

/// Utility of inserting one task into one robot's tour.
///
/// Infeasible insertions are worth exactly zero and consume no randomness.
/// A feasible insertion has marginal gain 1 (a visit is a service), scaled
/// by `1 + η` with `η ~ U[0, noise_max]`, and — when it would activate an
/// idle robot and `discount_enabled` — by `1/cost` (or `1/battery`) with
/// probability `discount_prob`.
pub fn insertion_utility<R: Rng>(
    feasible: bool,
    activates_idle_robot: bool,
    discount_enabled: bool,
    rtype: &crate::model::RobotType,
    params: &LnsParams,
    rng: &mut R,
) -> f64 {
    if !feasible {
        return 0.0;
    }
    let noise = if params.noise_max > 0.0 {
        rng.gen_range(0.0..=params.noise_max)
    } else {
        0.0
    };
    let discount = if activates_idle_robot && discount_enabled && rng.gen_bool(params.discount_prob)
    {
        match params.discount_denominator {
            DiscountDenominator::Cost => 1.0 / rtype.deploy_cost as f64,
            DiscountDenominator::Battery => {
                1.0 / (*rtype.battery.numer() as f64 / *rtype.battery.denom() as f64)
            }
        }
    } else {
        1.0
    };
    (1.0 + noise) * discount
}

/// Simulated-annealing acceptance: improvements and ties always pass, a
/// worse solution passes with probability `exp(Δρ / temp(k))` under the
/// geometric schedule `temp(k) = t0 · cooling^k`.
pub fn accept<R: Rng>(
    new_reward: usize,
    current_reward: usize,
    iteration: usize,
    params: &LnsParams,
    rng: &mut R,
) -> bool {
    if new_reward >= current_reward {
        return true;
    }
    let temp = params.sa_initial_temp * params.sa_cooling.powi(iteration as i32);
    let delta = new_reward as f64 - current_reward as f64;
    let p = (delta / temp).exp(); // temp → 0 drives p → 0
    if p <= 0.0 {
        return false;
    }
    rng.gen_bool(p.min(1.0))
}

/// Cheapest feasible insertion of `task` into `visits`: the position with
/// the smallest duration increase that keeps every deadline, the battery,
/// and — for an idle robot under a budget — the budget. Returns the
/// position and the duration increase.
fn best_feasible_insertion(
    ctx: &LnsContext<'_>,
    robot: usize,
    visits: &[TaskId],
    task: TaskId,
    active_cost: Money,
) -> Option<(usize, Rational64)> {
    let rtype = &ctx.problem.robot_types[ctx.fleet.robots[robot].rtype];
    if !rtype.capabilities.is_superset_of(ctx.problem.tasks[task].requirements) {
        return None;
    }
    if visits.is_empty() && ctx.budget_applies() && active_cost + rtype.deploy_cost > ctx.problem.budget
    {
        return None;
    }
    let travel = &ctx.travel[rtype.index];
    let battery = TimeVal::Finite(rtype.battery);

    let old_duration = match tour_duration(visits, travel) {
        TimeVal::Finite(d) => d,
        TimeVal::Infinite => return None, // existing tour unreachable; nothing to add
    };

    let mut best: Option<(usize, Rational64)> = None;
    for pos in 0..=visits.len() {
        // Walk the tour with `task` spliced in at `pos`.
        let before = visits[..pos].iter();
        let after = visits[pos..].iter();
        let spliced = before.chain(std::iter::once(&task)).chain(after);
        let mut clock = TimeVal::ZERO;
        let mut at = 0usize;
        let mut ok = true;
        for &t in spliced {
            clock = clock + travel.time(at, t + 1);
            at = t + 1;
            if clock > ctx.problem.tasks[t].deadline {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let duration = clock + travel.time(at, 0);
        let new_duration = match duration {
            TimeVal::Finite(d) if duration <= battery => d,
            _ => continue,
        };
        let added = new_duration - old_duration;
        if best.is_none_or(|(_, b)| added < b) {
            best = Some((pos, added));
        }
    }
    best
}

/// Task ids not visited by any tour, ascending.
fn unvisited_tasks(solution: &Solution, task_count: usize) -> Vec<TaskId> {
    let mut visited = vec![false; task_count];
    for tour in &solution.tours {
        for &t in &tour.visits {
            visited[t] = true;
        }
    }
    (0..task_count).filter(|&t| !visited[t]).collect()
}

fn tour_duration(visits: &[TaskId], travel: &TravelMatrix) -> TimeVal {
    let mut clock = TimeVal::ZERO;
    let mut at = 0usize;
    for &t in visits {
        clock = clock + travel.time(at, t + 1);
        at = t + 1;
    }
    clock + travel.time(at, 0)
}

/// Reinserts `unassigned` tasks into `partial`, one at a time in random
/// order. Each task goes to the feasible insertion with the highest utility;
/// utility ties fall to the smaller duration increase, then the lower robot
/// index. Tasks with no positive-utility insertion are dropped for this
/// repair call.
pub fn repair<R: Rng>(
    ctx: &LnsContext<'_>,
    partial: Solution,
    mut unassigned: Vec<TaskId>,
    params: &LnsParams,
    rng: &mut R,
) -> Solution {
    let mut solution = partial;
    let mut active_cost = solution.active_cost(ctx.fleet, ctx.problem);
    let discount_enabled = ctx.budget_applies();

    while !unassigned.is_empty() {
        let pick = rng.gen_range(0..unassigned.len());
        let task = unassigned.swap_remove(pick);

        struct Candidate {
            robot: usize,
            pos: usize,
            added: Rational64,
            utility: f64,
        }
        let mut best: Option<Candidate> = None;
        for robot in 0..ctx.fleet.len() {
            if !ctx.slot_allowed(robot) {
                continue;
            }
            let visits = &solution.tours[robot].visits;
            let insertion = best_feasible_insertion(ctx, robot, visits, task, active_cost);
            let utility = insertion_utility(
                insertion.is_some(),
                visits.is_empty(),
                discount_enabled,
                &ctx.problem.robot_types[ctx.fleet.robots[robot].rtype],
                params,
                rng,
            );
            let Some((pos, added)) = insertion else { continue };
            let better = match &best {
                None => true,
                Some(b) => {
                    utility > b.utility
                        || (utility == b.utility
                            && (added < b.added || (added == b.added && robot < b.robot)))
                }
            };
            if better {
                best = Some(Candidate { robot, pos, added, utility });
            }
        }

        if let Some(c) = best {
            if c.utility > 0.0 {
                if solution.tours[c.robot].visits.is_empty() {
                    let rtype = ctx.fleet.robots[c.robot].rtype;
                    active_cost += ctx.problem.robot_types[rtype].deploy_cost;
                }
                solution.tours[c.robot].visits.insert(c.pos, task);
            }
        }
    }
    solution
}

/// Feasible starting point: shuffle the full task set and repair the empty
/// solution with it.
pub fn initial_solution<R: Rng>(
    ctx: &LnsContext<'_>,
    params: &LnsParams,
    rng: &mut R,
) -> Solution {
    let mut tasks: Vec<TaskId> = (0..ctx.problem.task_count()).collect();
    tasks.shuffle(rng);
    repair(ctx, Solution::empty(ctx.fleet.len()), tasks, params, rng)
}

pub(crate) fn run_scoped(
    ctx: &LnsContext<'_>,
    params: &LnsParams,
    mut observer: Option<IterationObserver<'_>>,
) -> SolveOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut current = initial_solution(ctx, params, &mut rng);
    debug_assert!(ctx.scope_feasible(&current));
    let mut best = current.clone();
    let mut best_reward = best.visit_count();

    let mut log = Vec::with_capacity(params.iterations);
    for k in 1..=params.iterations {
        let mode = select_removal_mode(&mut rng, params);
        let removed = match mode {
            RemovalMode::Robot => robot_removal(&current, params, &mut rng),
            RemovalMode::Task => task_removal(&current, params, &mut rng),
        };
        // Repair gets every task the partial solution does not serve, not
        // just the freshly removed ones. Tasks that found no feasible slot
        // in an earlier repair stay in play this way; with only the removed
        // tasks offered they would be lost for the rest of the run.
        let unassigned = unvisited_tasks(&removed.partial_solution, ctx.problem.task_count());
        let new = repair(ctx, removed.partial_solution, unassigned, params, &mut rng);
        debug_assert!(ctx.scope_feasible(&new));
        let new_reward = new.visit_count();
        if new_reward > best_reward {
            best = new.clone();
            best_reward = new_reward;
        }
        let accepted = accept(new_reward, current.visit_count(), k, params, &mut rng);
        if accepted {
            current = new;
        }
        let record = IterationRecord {
            iteration: k,
            mode,
            current_reward: current.visit_count(),
            best_reward,
            accepted,
        };
        if let Some(obs) = observer.as_deref_mut() {
            obs(&record, &current);
        }
        log.push(record);
    }

    let fleet = best
        .active_robots()
        .into_iter()
        .map(|i| ctx.fleet.robots[i])
        .collect();
    SolveOutcome { best, fleet, log }
}

/// Runs the full fleet search on `problem`: builds the base fleet and the
/// travel matrices, then iterates removal and repair for
/// `params.iterations` rounds.
pub fn solve(problem: &Problem, params: &LnsParams) -> SolveOutcome {
    solve_observed(problem, params, None)
}

/// Like [`solve`] but hands every iteration's record and incumbent solution
/// to `observer` before moving on.
pub fn solve_observed(
    problem: &Problem,
    params: &LnsParams,
    observer: Option<IterationObserver<'_>>,
) -> SolveOutcome {
    let fleet = build_base_fleet(problem);
    let travel = build_travel_set(problem);
    let ctx = LnsContext::budgeted(problem, &fleet, &travel);
    run_scoped(&ctx, params, observer)
}

//! Comparison baselines: greedy fleet construction driven by marginal gain
//! per cost, and picking robots uniformly at random. Both delegate the tour
//! optimisation for a fixed fleet to the same search machinery as the main
//! solver, restricted to task removal.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::lns::{self, LnsContext, LnsParams, SolveOutcome};
use crate::model::{build_base_fleet, Problem, Solution};
use crate::pathing::build_travel_set;
use crate::seeding::derive_seed;
use crate::units::Money;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("fleet wants {requested} robots of type {rtype} but the base fleet caps it at {available}")]
    FleetBeyondBase { rtype: usize, requested: usize, available: usize },
}

/// One candidate evaluated while picking a greedy step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateEval {
    pub rtype: usize,
    pub marginal_gain: usize,
    pub cost: Money,
}

/// One accepted greedy step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyStep {
    pub step: usize,
    pub chosen_type: usize,
    pub marginal_gain: usize,
    pub cost: Money,
    pub reward_after: usize,
    /// Everything that was evaluated this step, the winner included.
    pub candidates: Vec<CandidateEval>,
}

/// Record of a greedy run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
    /// Budget left over when the run stopped.
    pub unspent_budget: Money,
}

/// Writes the trace as CSV:
/// `step,type_id,marginal_gain,cost,ratio,reward_after`.
pub fn write_greedy_trace<W: Write>(
    trace: &GreedyTrace,
    problem: &Problem,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "step,type_id,marginal_gain,cost,ratio,reward_after")?;
    for s in &trace.steps {
        writeln!(
            out,
            "{},{},{},{},{:.6},{}",
            s.step,
            problem.robot_types[s.chosen_type].id,
            s.marginal_gain,
            s.cost,
            s.marginal_gain as f64 / s.cost as f64,
            s.reward_after
        )?;
    }
    Ok(())
}

/// Optimises tours for a fixed multiset of robots (given as type positions).
///
/// Runs the neighbourhood search with robot removal disabled and the given
/// robots treated as permanently deployed: the budget is not consulted and
/// activating one of them is never discounted. The result is expressed over
/// the problem's base fleet, using the first slots of each type.
pub fn fixed_fleet_mrta(
    problem: &Problem,
    fleet_types: &[usize],
    params: &LnsParams,
) -> Result<SolveOutcome, BaselineError> {
    let fleet = build_base_fleet(problem);
    let travel = build_travel_set(problem);

    let mut allowed = vec![false; fleet.len()];
    for rt in 0..problem.robot_types.len() {
        let requested = fleet_types.iter().filter(|&&t| t == rt).count();
        let slots = fleet.slots_of_type(rt);
        if requested > slots.len() {
            return Err(BaselineError::FleetBeyondBase {
                rtype: rt,
                requested,
                available: slots.len(),
            });
        }
        for &slot in slots.iter().take(requested) {
            allowed[slot] = true;
        }
    }

    let params = LnsParams { removal_mode_bias: 0.0, ..params.clone() };
    let ctx = LnsContext::fixed(problem, &fleet, &travel, allowed);
    Ok(lns::run_scoped(&ctx, &params, None))
}

/// Greedy fleet construction: starting from the empty fleet, repeatedly add
/// one robot of the affordable type with the best marginal gain per cost,
/// evaluating each candidate with a full fixed-fleet tour optimisation.
/// Stops when nothing affordable improves the reward.
///
/// Candidate runs get seeds derived from `(params.seed, step, type id)`, so
/// the whole construction is deterministic. Within a step candidates are
/// evaluated concurrently.
pub fn greedy_fleet(
    problem: &Problem,
    params: &LnsParams,
) -> (SolveOutcome, GreedyTrace) {
    use rayon::prelude::*;

    let base = build_base_fleet(problem);
    let mut fleet_types: Vec<usize> = Vec::new();
    let mut spent: Money = 0;
    let mut current: Option<SolveOutcome> = None;
    let mut trace = GreedyTrace::default();

    for step in 1.. {
        let current_reward = current.as_ref().map_or(0, |o| o.best_reward());
        let affordable: Vec<usize> = problem
            .robot_types
            .iter()
            .filter(|rt| {
                spent + rt.deploy_cost <= problem.budget
                    && fleet_types.iter().filter(|&&t| t == rt.index).count()
                        < base.count_of_type(rt.index)
            })
            .map(|rt| rt.index)
            .collect();
        if affordable.is_empty() {
            break;
        }

        let evals: Vec<(usize, SolveOutcome)> = affordable
            .par_iter()
            .map(|&rtype| {
                let mut candidate = fleet_types.clone();
                candidate.push(rtype);
                let candidate_params = LnsParams {
                    seed: derive_seed("greedy-candidate", &[params.seed, step as u64, rtype as u64]),
                    ..params.clone()
                };
                let outcome = fixed_fleet_mrta(problem, &candidate, &candidate_params)
                    .expect("candidate fleets never exceed the base fleet");
                (rtype, outcome)
            })
            .collect();

        // Best ratio of marginal gain to cost; ties to the lower type id.
        // Compared exactly via cross-multiplication.
        let winner = evals
            .iter()
            .max_by(|(ta, a), (tb, b)| {
                let (ga, ca) = (
                    a.best_reward().saturating_sub(current_reward) as u128,
                    problem.robot_types[*ta].deploy_cost as u128,
                );
                let (gb, cb) = (
                    b.best_reward().saturating_sub(current_reward) as u128,
                    problem.robot_types[*tb].deploy_cost as u128,
                );
                (ga * cb).cmp(&(gb * ca)).then(tb.cmp(ta))
            })
            .expect("at least one affordable candidate");
        let (rtype, outcome) = winner;
        let gain = outcome.best_reward().saturating_sub(current_reward);
        if gain == 0 {
            break;
        }

        let candidates = evals
            .iter()
            .map(|(t, o)| CandidateEval {
                rtype: *t,
                marginal_gain: o.best_reward().saturating_sub(current_reward),
                cost: problem.robot_types[*t].deploy_cost,
            })
            .collect();
        let cost = problem.robot_types[*rtype].deploy_cost;
        trace.steps.push(GreedyStep {
            step,
            chosen_type: *rtype,
            marginal_gain: gain,
            cost,
            reward_after: outcome.best_reward(),
            candidates,
        });
        fleet_types.push(*rtype);
        spent += cost;
        current = Some(outcome.clone());
    }

    trace.unspent_budget = problem.budget - spent;
    let outcome = current.unwrap_or_else(|| SolveOutcome {
        best: Solution::empty(base.len()),
        fleet: Vec::new(),
        log: Vec::new(),
    });
    (outcome, trace)
}

/// Random-fleet baseline: add robots of uniformly random affordable types
/// until nothing is affordable, then optimise tours for that fleet.
pub fn random_fleet(problem: &Problem, params: &LnsParams) -> SolveOutcome {
    let base = build_base_fleet(problem);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed("random-fleet", &[params.seed]));
    let mut fleet_types: Vec<usize> = Vec::new();
    let mut spent: Money = 0;
    loop {
        let affordable: Vec<usize> = problem
            .robot_types
            .iter()
            .filter(|rt| {
                spent + rt.deploy_cost <= problem.budget
                    && fleet_types.iter().filter(|&&t| t == rt.index).count()
                        < base.count_of_type(rt.index)
            })
            .map(|rt| rt.index)
            .collect();
        if affordable.is_empty() {
            break;
        }
        let pick = affordable[rng.gen_range(0..affordable.len())];
        fleet_types.push(pick);
        spent += problem.robot_types[pick].deploy_cost;
    }
    fixed_fleet_mrta(problem, &fleet_types, params)
        .expect("random fleets never exceed the base fleet")
}

//! Shared helpers for the cross-checking integration tests: a family of
//! seeded tiny instances, and an independent 0/1 knapsack solver used as the
//! oracle's own oracle.
#![allow(dead_code)] // each test target uses its own subset

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fleet_core::scenarios::{
    AirEdgePolicy, DeadlineField, GraphSource, GridSpec, RequirementChoice, RobotKind,
    RobotTypeSpec, ScenarioSpec, FORMAT_VERSION,
};

/// Desk-scale instance family: a 4×4 grid (16 vertices), up to 5 tasks, two
/// robot types, and budgets that keep the base fleet at four robots or
/// fewer.
pub fn tiny_spec(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let task_count = rng.gen_range(3..=5);
    let budget = *[20u64, 25, 40].get(rng.gen_range(0..3)).unwrap();
    let deadline = rng.gen_range(35..=60);
    let battery_small = rng.gen_range(60..=90);
    let battery_large = rng.gen_range(100..=160);
    ScenarioSpec {
        format_version: FORMAT_VERSION,
        name: format!("tiny-{seed}"),
        seed,
        task_count,
        deadline: DeadlineField::Finite(deadline),
        budget,
        depot: None,
        graph: GraphSource::Generator(GridSpec {
            width: 4,
            height: 4,
            edge_length: 5,
            obstacle_density: 0.1,
            air_edges: AirEdgePolicy::None,
        }),
        task_requirements: vec![
            RequirementChoice { labels: vec![1], weight: 2.0 },
            RequirementChoice { labels: vec![2], weight: 1.0 },
        ],
        robot_types: vec![
            RobotTypeSpec {
                id: 1,
                capabilities: vec![1],
                speed_percent: 100,
                battery: battery_small,
                cost: 20,
                kind: RobotKind::Agv,
                allowed_edge_classes: None,
            },
            RobotTypeSpec {
                id: 2,
                capabilities: vec![1, 2],
                speed_percent: 150,
                battery: battery_large,
                cost: 25,
                kind: RobotKind::Agv,
                allowed_edge_classes: None,
            },
        ],
    }
}

/// Classic 0/1 knapsack table over capacities. Independent of the routing
/// oracle: it never sees a graph, only weights and profits.
pub fn knapsack_dp(items: &[(u64, u64)], capacity: u64) -> u64 {
    let cap = capacity as usize;
    let mut best = vec![0u64; cap + 1];
    for &(weight, profit) in items {
        let w = weight as usize;
        for c in (w..=cap).rev() {
            best[c] = best[c].max(best[c - w] + profit);
        }
    }
    best[cap]
}

/// Random knapsack instance sized for the reduction cross-check: up to six
/// items with small profits, so the reduced routing instance stays within
/// oracle limits.
pub fn random_knapsack(seed: u64) -> (Vec<(u64, u64)>, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=6);
    let items: Vec<(u64, u64)> = (0..n)
        .map(|_| (rng.gen_range(2..=9), rng.gen_range(1..=2)))
        .collect();
    let capacity = rng.gen_range(6..=12);
    (items, capacity)
}

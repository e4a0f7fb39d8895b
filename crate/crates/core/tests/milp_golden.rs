//! Golden-file stability of the LP emission: the exact bytes the exporter
//! writes for a pinned instance are frozen in `tests/data/golden.lp`; any
//! unintended drift in formatting or formulation shows up as a diff here.

use std::collections::BTreeSet;

use num_rational::Rational64;

use fleet_core::exact::{export_milp, parse_lp, write_lp};
use fleet_core::model::{LabelSet, Problem, RobotType, Task};
use fleet_core::pathing::{Edge, EnvironmentGraph};
use fleet_core::units::TimeVal;

/// Pinned instance touching the interesting fringes: a deadline-free task,
/// a capability mismatch, a robot type locked out of one edge, and a
/// fractional speed factor.
fn golden_problem() -> Problem {
    let label = |ls: &[u32]| LabelSet::from_labels(ls).unwrap();
    Problem {
        name: "golden".into(),
        graph: EnvironmentGraph {
            vertex_count: 3,
            edges: vec![
                Edge { u: 0, v: 1, length: 9, class: "ground".into() },
                Edge { u: 1, v: 2, length: 6, class: "ground".into() },
                Edge { u: 0, v: 2, length: 7, class: "air".into() },
            ],
        },
        depot: 0,
        tasks: vec![
            Task { id: 0, vertex: 1, deadline: TimeVal::from_int(40), requirements: label(&[1]) },
            Task { id: 1, vertex: 2, deadline: TimeVal::Infinite, requirements: label(&[2]) },
        ],
        robot_types: vec![
            RobotType {
                index: 0,
                id: 1,
                capabilities: label(&[1]),
                deploy_cost: 20,
                battery: Rational64::from_integer(90),
                speed_factor: Rational64::new(3, 2),
                allowed_edge_classes: BTreeSet::from(["ground".to_string()]),
                kind: "agv".into(),
            },
            RobotType {
                index: 1,
                id: 2,
                capabilities: label(&[1, 2]),
                deploy_cost: 30,
                battery: Rational64::from_integer(120),
                speed_factor: Rational64::from_integer(1),
                allowed_edge_classes: BTreeSet::from(["ground".to_string(), "air".to_string()]),
                kind: "uav".into(),
            },
        ],
        budget: 50,
    }
}

#[test]
fn lp_emission_matches_the_golden_file() {
    let model = export_milp(&golden_problem());
    let text = write_lp(&model);
    if std::env::var("BLESS_GOLDEN").is_ok() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden.lp"), &text).unwrap();
    }
    let golden = include_str!("data/golden.lp");
    assert_eq!(text, golden, "LP emission drifted from the golden file");
    let parsed = parse_lp(&text).unwrap();
    assert_eq!(parsed, model);
}

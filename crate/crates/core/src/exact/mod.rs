//! Ground truth at desk scale.
//!
//! [`brute_force`] searches every budget-feasible fleet and every feasible
//! assignment-plus-ordering of tasks exhaustively, so its reward is the true
//! optimum — for instances small enough to enumerate. [`export_milp`] emits
//! the full mixed-integer formulation as an LP file for external solvers.

mod milp;
mod oracle;

pub use milp::{
    export_milp, parse_lp, write_lp, BoundKind, BoundLine, Cmp, MilpModel, MilpParseError, Row,
    Term,
};
pub use oracle::{
    brute_force, brute_force_for_fleet, knapsack_reduction, OracleError, OracleLimits,
    OracleOutcome,
};

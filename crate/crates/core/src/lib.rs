//! Budgeted heterogeneous fleet design.
//!
//! Given a set of available robot types (capabilities, deployment cost,
//! battery life, travel speed), a graph environment with tasks that carry
//! requirement labels and deadlines, and a deployment budget, select a fleet
//! and a depot-to-depot tour per robot so that as many tasks as possible are
//! serviced on time.
//!
//! The crate is organised around the solver pipeline:
//!
//! * [`model`] — problem and solution types, feasibility checks, reward.
//! * [`pathing`] — environment graph and per-type shortest-path travel matrices.
//! * [`lns`] — the fleet large-neighbourhood-search solver.
//! * [`baselines`] — greedy fleet construction and the random-fleet baseline.
//! * [`exact`] — brute-force oracle for desk-scale instances and MILP export.
//! * [`scenarios`] — scenario schema, random generation and file I/O.
//! * [`harness`] — seeded experiment sweeps and result aggregation.

pub mod baselines;
pub mod exact;
pub mod harness;
pub mod lns;
pub mod model;
pub mod pathing;
pub mod scenarios;
pub mod seeding;
pub mod units;

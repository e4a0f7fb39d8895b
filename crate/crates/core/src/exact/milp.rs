//! Mixed-integer formulation of the fleet design problem, emitted as an LP
//! text file for external solvers, plus a reader for the emitted subset of
//! the format.
//!
//! Formulation layout over meta-graph vertices `0..=N+1` (0 = depot,
//! `1..=N` = tasks, `N+1` = a copy of the depot where tours end) and robots
//! `k = 1..=K` of the base fleet:
//!
//! * binaries `x_i_j_k` (robot k drives arc i→j), `y_i_k` (robot k services
//!   task i), `z_k` (robot k is deployed); continuous `s_i_k` (arrival times).
//! * `c3b_out_k`/`c3b_ret_k`: deployed robots leave the depot and reach its
//!   copy exactly once.
//! * `c3c_in_l_k`/`c3c_out_l_k`: arc flow through a task equals its service.
//! * `c3d_i_j_k`: big-M time propagation along used arcs. Emitted for the
//!   usable arcs only: `i ∈ {0} ∪ tasks`, `j ∈ tasks ∪ {N+1}`, `i ≠ j`,
//!   not the direct depot–copy arc, finite travel time.
//! * `c3e_i`: at most one robot services a task.
//! * `c3f_i_k`: service only with matching capabilities (precomputed 0/1).
//! * `c3g_i_k`: arrival before the deadline (omitted for deadline-free tasks).
//! * `c3h_k`: battery over all used arcs. `c3i`: fleet budget.
//! * Bounds fix `x` to zero on unusable arcs and keep arrival times
//!   non-negative; the Binaries section declares all integer variables.

use std::fmt::Write as _;

use crate::model::{build_base_fleet, Problem};
use crate::pathing::{build_travel_set, TravelMatrix};
use crate::units::TimeVal;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub var: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<Term>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// `var = value`
    Fixed,
    /// `var >= value`
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundLine {
    pub var: String,
    pub kind: BoundKind,
    pub value: f64,
}

/// An in-memory MILP: objective, named constraint rows, bounds and variable
/// declarations. `write_lp` and `parse_lp` round-trip this exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub big_m: f64,
    pub objective: Vec<Term>,
    pub constraints: Vec<Row>,
    pub bounds: Vec<BoundLine>,
    pub binaries: Vec<String>,
    pub continuous: Vec<String>,
}

impl MilpModel {
    /// Every constraint, objective and bound references a declared variable.
    pub fn references_are_declared(&self) -> bool {
        let declared: std::collections::BTreeSet<&str> = self
            .binaries
            .iter()
            .chain(self.continuous.iter())
            .map(String::as_str)
            .collect();
        self.objective.iter().all(|t| declared.contains(t.var.as_str()))
            && self
                .constraints
                .iter()
                .all(|r| r.terms.iter().all(|t| declared.contains(t.var.as_str())))
            && self.bounds.iter().all(|b| declared.contains(b.var.as_str()))
    }
}

fn x_name(i: usize, j: usize, k: usize) -> String {
    format!("x_{i}_{j}_{k}")
}

fn y_name(i: usize, k: usize) -> String {
    format!("y_{i}_{k}")
}

fn z_name(k: usize) -> String {
    format!("z_{k}")
}

fn s_name(i: usize, k: usize) -> String {
    format!("s_{i}_{k}")
}

/// Travel time between formulation vertices for one type's matrix; vertex
/// `N+1` is the depot copy.
fn arc_time(travel: &TravelMatrix, n: usize, i: usize, j: usize) -> TimeVal {
    let map = |v: usize| if v == n + 1 { 0 } else { v };
    travel.time(map(i), map(j))
}

/// The usable arcs for one robot type: out of the depot or a task, into a
/// task or the depot copy, no self-loops, no direct depot–copy hop, and
/// finite travel time.
fn arcs(travel: &TravelMatrix, n: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 1..=n + 1 {
            if i == j || (i == 0 && j == n + 1) {
                continue;
            }
            if let TimeVal::Finite(_) = arc_time(travel, n, i, j) {
                out.push((i, j, arc_time(travel, n, i, j).to_f64()));
            }
        }
    }
    out
}

/// Builds the full model for `problem` over its base fleet.
///
/// The big-M constant is the largest finite deadline plus the largest finite
/// travel time plus one; with no finite deadline the largest battery stands
/// in for the deadline term.
pub fn export_milp(problem: &Problem) -> MilpModel {
    let fleet = build_base_fleet(problem);
    let travel = build_travel_set(problem);
    let n = problem.task_count();
    let robot_count = fleet.len();

    let max_deadline = problem
        .tasks
        .iter()
        .filter_map(|t| t.deadline.finite())
        .max()
        .unwrap_or_else(|| {
            problem
                .robot_types
                .iter()
                .map(|rt| rt.battery)
                .max()
                .expect("a validated problem has robot types")
        });
    let max_travel = travel
        .iter()
        .flat_map(|m| {
            (0..m.dim()).flat_map(move |a| (0..m.dim()).filter_map(move |b| m.time(a, b).finite()))
        })
        .max()
        .unwrap_or_default();
    let big_m = (TimeVal::Finite(max_deadline) + TimeVal::Finite(max_travel) + TimeVal::from_int(1))
        .to_f64();

    let mut model = MilpModel {
        name: problem.name.clone(),
        big_m,
        objective: Vec::new(),
        constraints: Vec::new(),
        bounds: Vec::new(),
        binaries: Vec::new(),
        continuous: Vec::new(),
    };

    // Declarations, in a fixed order: x, y, z, then s.
    for k in 1..=robot_count {
        for i in 0..=n + 1 {
            for j in 0..=n + 1 {
                model.binaries.push(x_name(i, j, k));
            }
        }
    }
    for k in 1..=robot_count {
        for i in 1..=n {
            model.binaries.push(y_name(i, k));
        }
    }
    for k in 1..=robot_count {
        model.binaries.push(z_name(k));
    }
    for k in 1..=robot_count {
        for i in 0..=n + 1 {
            model.continuous.push(s_name(i, k));
        }
    }

    for k in 1..=robot_count {
        for i in 1..=n {
            model.objective.push(Term { coef: 1.0, var: y_name(i, k) });
        }
    }

    let per_robot_arcs: Vec<Vec<(usize, usize, f64)>> = fleet
        .robots
        .iter()
        .map(|r| arcs(&travel[r.rtype], n))
        .collect();

    // Depot flow: a deployed robot leaves the depot and enters its copy.
    for k in 1..=robot_count {
        let mut out_terms: Vec<Term> =
            (1..=n).map(|j| Term { coef: 1.0, var: x_name(0, j, k) }).collect();
        out_terms.push(Term { coef: -1.0, var: z_name(k) });
        model.constraints.push(Row {
            name: format!("c3b_out_{k}"),
            terms: out_terms,
            cmp: Cmp::Eq,
            rhs: 0.0,
        });
        let mut ret_terms: Vec<Term> =
            (1..=n).map(|j| Term { coef: 1.0, var: x_name(j, n + 1, k) }).collect();
        ret_terms.push(Term { coef: -1.0, var: z_name(k) });
        model.constraints.push(Row {
            name: format!("c3b_ret_{k}"),
            terms: ret_terms,
            cmp: Cmp::Eq,
            rhs: 0.0,
        });
    }

    // Degree coupling: inflow and outflow of a task equal its service flag.
    for k in 1..=robot_count {
        for l in 1..=n {
            let mut in_terms: Vec<Term> = (0..=n + 1)
                .filter(|&i| i != l)
                .map(|i| Term { coef: 1.0, var: x_name(i, l, k) })
                .collect();
            in_terms.push(Term { coef: -1.0, var: y_name(l, k) });
            model.constraints.push(Row {
                name: format!("c3c_in_{l}_{k}"),
                terms: in_terms,
                cmp: Cmp::Eq,
                rhs: 0.0,
            });
            let mut out_terms: Vec<Term> = (0..=n + 1)
                .filter(|&j| j != l)
                .map(|j| Term { coef: 1.0, var: x_name(l, j, k) })
                .collect();
            out_terms.push(Term { coef: -1.0, var: y_name(l, k) });
            model.constraints.push(Row {
                name: format!("c3c_out_{l}_{k}"),
                terms: out_terms,
                cmp: Cmp::Eq,
                rhs: 0.0,
            });
        }
    }

    // Time propagation with big-M on usable arcs.
    for (k, robot_arcs) in per_robot_arcs.iter().enumerate() {
        let k = k + 1;
        for &(i, j, d) in robot_arcs {
            model.constraints.push(Row {
                name: format!("c3d_{i}_{j}_{k}"),
                terms: vec![
                    Term { coef: 1.0, var: s_name(i, k) },
                    Term { coef: -1.0, var: s_name(j, k) },
                    Term { coef: big_m, var: x_name(i, j, k) },
                ],
                cmp: Cmp::Le,
                rhs: big_m - d,
            });
        }
    }

    // Unique service.
    for i in 1..=n {
        model.constraints.push(Row {
            name: format!("c3e_{i}"),
            terms: (1..=robot_count).map(|k| Term { coef: 1.0, var: y_name(i, k) }).collect(),
            cmp: Cmp::Le,
            rhs: 1.0,
        });
    }

    // Capability gating with precomputed 0/1 constants.
    for k in 1..=robot_count {
        let rtype = &problem.robot_types[fleet.robots[k - 1].rtype];
        for i in 1..=n {
            let c = if rtype.capabilities.is_superset_of(problem.tasks[i - 1].requirements) {
                1.0
            } else {
                0.0
            };
            model.constraints.push(Row {
                name: format!("c3f_{i}_{k}"),
                terms: vec![Term { coef: 1.0, var: y_name(i, k) }],
                cmp: Cmp::Le,
                rhs: c,
            });
        }
    }

    // Deadlines; tasks without one get no row.
    for k in 1..=robot_count {
        for i in 1..=n {
            if let Some(deadline) = problem.tasks[i - 1].deadline.finite() {
                let d = TimeVal::Finite(deadline).to_f64();
                model.constraints.push(Row {
                    name: format!("c3g_{i}_{k}"),
                    terms: vec![
                        Term { coef: 1.0, var: s_name(i, k) },
                        Term { coef: -d, var: y_name(i, k) },
                    ],
                    cmp: Cmp::Le,
                    rhs: 0.0,
                });
            }
        }
    }

    // Battery per robot, over the same usable arcs.
    for (k, robot_arcs) in per_robot_arcs.iter().enumerate() {
        let rtype = &problem.robot_types[fleet.robots[k].rtype];
        let k = k + 1;
        model.constraints.push(Row {
            name: format!("c3h_{k}"),
            terms: robot_arcs
                .iter()
                .map(|&(i, j, d)| Term { coef: d, var: x_name(i, j, k) })
                .collect(),
            cmp: Cmp::Le,
            rhs: TimeVal::Finite(rtype.battery).to_f64(),
        });
    }

    // Budget over deployed robots.
    model.constraints.push(Row {
        name: "c3i".into(),
        terms: (1..=robot_count)
            .map(|k| Term {
                coef: problem.robot_types[fleet.robots[k - 1].rtype].deploy_cost as f64,
                var: z_name(k),
            })
            .collect(),
        cmp: Cmp::Le,
        rhs: problem.budget as f64,
    });

    // Bounds: non-negative arrival times, unusable arcs pinned to zero.
    for k in 1..=robot_count {
        for i in 0..=n + 1 {
            model.bounds.push(BoundLine { var: s_name(i, k), kind: BoundKind::Lower, value: 0.0 });
        }
    }
    for (k, robot_arcs) in per_robot_arcs.iter().enumerate() {
        let usable: std::collections::BTreeSet<(usize, usize)> =
            robot_arcs.iter().map(|&(i, j, _)| (i, j)).collect();
        let k = k + 1;
        for i in 0..=n + 1 {
            for j in 0..=n + 1 {
                if !usable.contains(&(i, j)) {
                    model.bounds.push(BoundLine {
                        var: x_name(i, j, k),
                        kind: BoundKind::Fixed,
                        value: 0.0,
                    });
                }
            }
        }
    }

    debug_assert!(model.references_are_declared());
    model
}

fn push_term(out: &mut String, line_len: &mut usize, term: &Term) {
    let sign = if term.coef < 0.0 { '-' } else { '+' };
    let piece = format!(" {sign} {} {}", fmt_num(term.coef.abs()), term.var);
    if *line_len + piece.len() > 76 {
        out.push_str("\n     ");
        *line_len = 5;
    }
    out.push_str(&piece);
    *line_len += piece.len();
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Serialises the model in LP format. Output is deterministic.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    writeln!(out, "\\ problem: {}", model.name).unwrap();
    writeln!(out, "\\ big_m: {}", fmt_num(model.big_m)).unwrap();
    out.push_str("Maximize\n obj:");
    let mut len = 5;
    for t in &model.objective {
        push_term(&mut out, &mut len, t);
    }
    out.push_str("\nSubject To\n");
    for row in &model.constraints {
        let head = format!(" {}:", row.name);
        let mut len = head.len();
        out.push_str(&head);
        for t in &row.terms {
            push_term(&mut out, &mut len, t);
        }
        let op = match row.cmp {
            Cmp::Le => "<=",
            Cmp::Eq => "=",
        };
        writeln!(out, " {op} {}", fmt_num(row.rhs)).unwrap();
    }
    out.push_str("Bounds\n");
    for b in &model.bounds {
        let op = match b.kind {
            BoundKind::Fixed => "=",
            BoundKind::Lower => ">=",
        };
        writeln!(out, " {} {op} {}", b.var, fmt_num(b.value)).unwrap();
    }
    out.push_str("Binaries\n");
    for v in &model.binaries {
        writeln!(out, " {v}").unwrap();
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MilpParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing section: {0}")]
    MissingSection(&'static str),
}

fn syntax(line: usize, message: impl Into<String>) -> MilpParseError {
    MilpParseError::Syntax { line, message: message.into() }
}

/// Parses LP text produced by [`write_lp`] back into a [`MilpModel`].
/// Covers the emitted subset of the format: a maximisation objective,
/// named `<=`/`=` rows, simple bounds, and a Binaries section.
pub fn parse_lp(text: &str) -> Result<MilpModel, MilpParseError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Header,
        Objective,
        Constraints,
        Bounds,
        Binaries,
        Done,
    }

    let mut model = MilpModel {
        name: String::new(),
        big_m: 0.0,
        objective: Vec::new(),
        constraints: Vec::new(),
        bounds: Vec::new(),
        binaries: Vec::new(),
        continuous: Vec::new(),
    };
    let mut section = Section::Header;
    let mut seen = (false, false, false, false); // maximize, subject-to, bounds, binaries
    let mut expr_tokens: Vec<(usize, String)> = Vec::new();

    type ParsedRow = (Option<String>, Vec<Term>, Option<(Cmp, f64)>);

    // Flushes the token buffer of one logical row (objective or constraint).
    fn flush_row(tokens: &[(usize, String)], named: bool) -> Result<ParsedRow, MilpParseError> {
        let mut idx = 0;
        let name = if named {
            let (line, head) = &tokens[0];
            let Some(stripped) = head.strip_suffix(':') else {
                return Err(syntax(*line, format!("expected a row name, found {head}")));
            };
            idx = 1;
            Some(stripped.to_string())
        } else {
            None
        };
        let mut terms = Vec::new();
        let mut tail = None;
        while idx < tokens.len() {
            let (line, tok) = &tokens[idx];
            match tok.as_str() {
                "+" | "-" => {
                    let sign = if tok == "-" { -1.0 } else { 1.0 };
                    let coef: f64 = tokens
                        .get(idx + 1)
                        .ok_or_else(|| syntax(*line, "dangling sign"))?
                        .1
                        .parse()
                        .map_err(|_| syntax(*line, "expected a coefficient"))?;
                    let var = tokens
                        .get(idx + 2)
                        .ok_or_else(|| syntax(*line, "term without a variable"))?
                        .1
                        .clone();
                    terms.push(Term { coef: sign * coef, var });
                    idx += 3;
                }
                "<=" | "=" => {
                    let cmp = if tok == "<=" { Cmp::Le } else { Cmp::Eq };
                    let rhs: f64 = tokens
                        .get(idx + 1)
                        .ok_or_else(|| syntax(*line, "relation without a right-hand side"))?
                        .1
                        .parse()
                        .map_err(|_| syntax(*line, "expected a numeric right-hand side"))?;
                    if idx + 2 != tokens.len() {
                        return Err(syntax(*line, "trailing tokens after the right-hand side"));
                    }
                    tail = Some((cmp, rhs));
                    break;
                }
                other => return Err(syntax(*line, format!("unexpected token {other}"))),
            }
        }
        Ok((name, terms, tail))
    }

    let finish_constraint =
        |tokens: &mut Vec<(usize, String)>, model: &mut MilpModel| -> Result<(), MilpParseError> {
            if tokens.is_empty() {
                return Ok(());
            }
            let line = tokens[0].0;
            let (name, terms, tail) = flush_row(tokens, true)?;
            let (cmp, rhs) =
                tail.ok_or_else(|| syntax(line, "constraint without a relation"))?;
            model.constraints.push(Row { name: name.unwrap(), terms, cmp, rhs });
            tokens.clear();
            Ok(())
        };

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('\\') {
            let comment = comment.trim();
            if let Some(name) = comment.strip_prefix("problem:") {
                model.name = name.trim().to_string();
            } else if let Some(m) = comment.strip_prefix("big_m:") {
                model.big_m = m
                    .trim()
                    .parse()
                    .map_err(|_| syntax(lineno, "big_m comment is not numeric"))?;
            }
            continue;
        }
        let keyword = line.trim();
        let new_section = match keyword {
            "Maximize" => Some(Section::Objective),
            "Subject To" => Some(Section::Constraints),
            "Bounds" => Some(Section::Bounds),
            "Binaries" => Some(Section::Binaries),
            "End" => Some(Section::Done),
            _ => None,
        };
        if let Some(next) = new_section {
            if section == Section::Objective && !expr_tokens.is_empty() {
                let (_, terms, tail) = flush_row(&expr_tokens, true)?;
                if tail.is_some() {
                    return Err(syntax(lineno, "objective must not carry a relation"));
                }
                model.objective = terms;
                expr_tokens.clear();
            }
            match next {
                Section::Objective => seen.0 = true,
                Section::Constraints => seen.1 = true,
                Section::Bounds => seen.2 = true,
                Section::Binaries => seen.3 = true,
                _ => {}
            }
            section = next;
            continue;
        }
        match section {
            Section::Header => return Err(syntax(lineno, "content before the Maximize section")),
            Section::Objective => {
                expr_tokens
                    .extend(line.split_whitespace().map(|t| (lineno, t.to_string())));
            }
            Section::Constraints => {
                for tok in line.split_whitespace() {
                    if tok.ends_with(':') && !expr_tokens.is_empty() {
                        finish_constraint(&mut expr_tokens, &mut model)?;
                    }
                    expr_tokens.push((lineno, tok.to_string()));
                }
                // A completed relation ends the row; rows can wrap lines.
                if expr_tokens.iter().rev().nth(1).is_some_and(|(_, t)| t == "<=" || t == "=") {
                    finish_constraint(&mut expr_tokens, &mut model)?;
                }
            }
            Section::Bounds => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                let [var, op, value] = tokens.as_slice() else {
                    return Err(syntax(lineno, "bound lines read `var op value`"));
                };
                let kind = match *op {
                    "=" => BoundKind::Fixed,
                    ">=" => BoundKind::Lower,
                    other => return Err(syntax(lineno, format!("unsupported bound op {other}"))),
                };
                let value: f64 =
                    value.parse().map_err(|_| syntax(lineno, "bound value is not numeric"))?;
                let var = var.to_string();
                if kind == BoundKind::Lower {
                    // In the emitted subset only continuous variables carry
                    // explicit lower bounds; binaries are fixed or implied.
                    model.continuous.push(var.clone());
                }
                model.bounds.push(BoundLine { var, kind, value });
            }
            Section::Binaries => {
                for tok in line.split_whitespace() {
                    model.binaries.push(tok.to_string());
                }
            }
            Section::Done => return Err(syntax(lineno, "content after End")),
        }
    }

    if !seen.0 {
        return Err(MilpParseError::MissingSection("Maximize"));
    }
    if !seen.1 {
        return Err(MilpParseError::MissingSection("Subject To"));
    }
    if !seen.2 {
        return Err(MilpParseError::MissingSection("Bounds"));
    }
    if !seen.3 {
        return Err(MilpParseError::MissingSection("Binaries"));
    }
    if section != Section::Done {
        return Err(MilpParseError::MissingSection("End"));
    }
    Ok(model)
}

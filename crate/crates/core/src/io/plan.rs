//! Delivery plans as text or CSV, plus the one-row summary used by reports.
//!
//! Text plans name replicas as `customer feed k`, where `k` numbers the
//! replicas of that order from 1:
//!
//! ```text
//! summary objective=182.26 fixed=166.00 expected=182.26 load=11.71 routes=1 occupancy=99.24
//! route 0
//! stop 2 0 1
//! load 2 2 0 1 3.77
//! unserved 4 0 2
//! ```
//!
//! `route` takes the truck index; `stop` lines give the visiting order and
//! `load compartment customer feed k amount` the initial loads. Summary and
//! `unserved` lines are informational and ignored when reading.

use std::fmt::Write as _;

use super::{index, number, ParseError};
use crate::evaluation::{occupancy_rate, Evaluation};
use crate::model::{Assignment, Problem, Route, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanFormat {
    Text,
    Csv,
}

pub const SUMMARY_HEADER: &str =
    "instance,objective,fixed_distance,expected_distance,load,routes,occupancy,seconds";

/// One report row; `seconds` is left empty when not given so that output
/// stays byte-stable.
pub fn summary_row(
    name: &str,
    problem: &Problem,
    solution: &Solution,
    e: &Evaluation,
    seconds: Option<f64>,
) -> String {
    format!(
        "{},{:.2},{:.2},{:.2},{:.2},{},{:.2},{}",
        name,
        e.weighted_objective,
        e.fixed_distance,
        e.expected_distance(),
        e.total_load,
        solution.routes.len(),
        occupancy_rate(problem, solution),
        seconds.map(|s| format!("{s:.2}")).unwrap_or_default(),
    )
}

fn label(problem: &Problem, replica: usize) -> String {
    let r = problem.replica(replica);
    format!("{} {} {}", problem.origin(replica), r.feed, r.index)
}

pub fn write_solution(
    problem: &Problem,
    solution: &Solution,
    e: &Evaluation,
    seconds: Option<f64>,
    format: PlanFormat,
) -> String {
    let mut s = String::new();
    match format {
        PlanFormat::Text => {
            let _ = write!(
                s,
                "summary objective={:.2} fixed={:.2} expected={:.2} load={:.2} routes={} occupancy={:.2}",
                e.weighted_objective,
                e.fixed_distance,
                e.expected_distance(),
                e.total_load,
                solution.routes.len(),
                occupancy_rate(problem, solution),
            );
            if let Some(t) = seconds {
                let _ = write!(s, " seconds={t:.2}");
            }
            s.push('\n');
            for r in &solution.routes {
                let _ = writeln!(s, "route {}", r.truck);
                for &v in &r.visits {
                    let _ = writeln!(s, "stop {}", label(problem, v));
                }
                for a in &r.assignments {
                    let _ = writeln!(
                        s,
                        "load {} {} {}",
                        a.compartment,
                        label(problem, a.replica),
                        a.load
                    );
                }
            }
            for &v in &solution.unserved {
                let _ = writeln!(s, "unserved {}", label(problem, v));
            }
        }
        PlanFormat::Csv => {
            s.push_str("route,truck,position,customer,feed,replica,compartment,load\n");
            for (ri, r) in solution.routes.iter().enumerate() {
                for a in &r.assignments {
                    let rep = problem.replica(a.replica);
                    let pos = r
                        .visits
                        .iter()
                        .position(|&v| v == a.replica)
                        .map_or(String::new(), |p| p.to_string());
                    let _ = writeln!(
                        s,
                        "{ri},{},{pos},{},{},{},{},{}",
                        r.truck,
                        problem.origin(a.replica),
                        rep.feed,
                        rep.index,
                        a.compartment,
                        a.load
                    );
                }
            }
        }
    }
    s
}

fn replica_id(problem: &Problem, t: &[&str], ln: usize) -> Result<usize, ParseError> {
    let c = index(t[0], ln, "customer")?;
    let f = index(t[1], ln, "feed")?;
    let k = index(t[2], ln, "replica index")?;
    let pair = problem
        .replicas
        .pairs
        .iter()
        .find(|p| p.customer == c && p.feed == f)
        .ok_or_else(|| ParseError::at(ln, format!("customer {c} has no order for feed {f}")))?;
    if k == 0 || k > pair.replica_count() {
        return Err(ParseError::at(
            ln,
            format!("order {c}/{f} has only {} replicas", pair.replica_count()),
        ));
    }
    Ok(pair.replicas.start + k - 1)
}

/// Read a text plan back against the problem it was written for. The result
/// is structurally checked only; use `check_feasibility` for the rest.
pub fn parse_plan(problem: &Problem, text: &str) -> Result<Solution, ParseError> {
    let mut routes: Vec<Route> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let t: Vec<&str> = line
            .split('#')
            .next()
            .unwrap_or("")
            .split_whitespace()
            .collect();
        let Some(&key) = t.first() else { continue };
        match key {
            "summary" | "unserved" => {}
            "route" => {
                if t.len() != 2 {
                    return Err(ParseError::at(ln, "route needs a truck index"));
                }
                let k = index(t[1], ln, "truck")?;
                if k >= problem.instance.trucks.len() {
                    return Err(ParseError::at(ln, format!("no truck {k}")));
                }
                routes.push(Route::new(k));
            }
            "stop" | "load" => {
                let route = routes
                    .last_mut()
                    .ok_or_else(|| ParseError::at(ln, format!("`{key}` before any route")))?;
                if key == "stop" {
                    if t.len() != 4 {
                        return Err(ParseError::at(ln, "stop needs `customer feed k`"));
                    }
                    route.visits.push(replica_id(problem, &t[1..], ln)?);
                } else {
                    if t.len() != 6 {
                        return Err(ParseError::at(
                            ln,
                            "load needs `compartment customer feed k amount`",
                        ));
                    }
                    let compartment = index(t[1], ln, "compartment")?;
                    if compartment >= problem.truck(route.truck).compartments.len() {
                        return Err(ParseError::at(ln, format!("no compartment {compartment}")));
                    }
                    let replica = replica_id(problem, &t[2..5], ln)?;
                    let load = number(t[5], ln, "load")?;
                    route.assignments.push(Assignment {
                        replica,
                        compartment,
                        load,
                    });
                }
            }
            other => return Err(ParseError::at(ln, format!("unknown keyword `{other}`"))),
        }
    }
    let mut seen = vec![false; problem.n_replicas()];
    for r in &routes {
        for &v in &r.visits {
            seen[v] = true;
        }
    }
    let unserved = (0..problem.n_replicas()).filter(|&v| !seen[v]).collect();
    Ok(Solution { routes, unserved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructive::construct;
    use crate::datasets;
    use crate::evaluation::evaluate;

    #[test]
    fn text_round_trip() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let sol = construct(&p, 1.0);
        let e = evaluate(&p, &sol);
        let text = write_solution(&p, &sol, &e, None, PlanFormat::Text);
        assert!(text.starts_with("summary objective=182.26"), "{text}");
        let back = parse_plan(&p, &text).unwrap();
        assert_eq!(evaluate(&p, &back), e);
        assert_eq!(text, write_solution(&p, &back, &e, None, PlanFormat::Text));
    }

    #[test]
    fn empty_plans() {
        let p = Problem::new(datasets::numerical(0.5)).unwrap();
        let sol = Solution {
            routes: vec![],
            unserved: (0..p.n_replicas()).collect(),
        };
        let e = evaluate(&p, &sol);
        let csv = write_solution(&p, &sol, &e, None, PlanFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
        assert!(parse_plan(&p, "").unwrap().routes.is_empty());
    }

    #[test]
    fn plan_errors() {
        let p = Problem::new(datasets::numerical(0.5)).unwrap();
        assert_eq!(
            parse_plan(&p, "stop 1 0 1"),
            Err(ParseError::at(1, "`stop` before any route"))
        );
        assert!(parse_plan(&p, "route 0\nstop 9 0 1").is_err());
        assert!(parse_plan(&p, "route 3").is_err());
        assert!(parse_plan(&p, "route 0\nload 9 1 0 1 1").is_err());
    }
}

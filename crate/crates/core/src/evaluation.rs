//! Distances, expected recourse, durations and the weighted objective.
//!
//! Recourse is charged per urgent order: if the total mass delivered to an
//! urgent (customer, feed) pair, summed over all of its replicas and routes,
//! falls short of the realized demand, the truck pays one extra round trip
//! from the depot to that customer.

use std::cmp::Ordering;

use thiserror::Error;

use crate::model::{Fleet, Problem, Route, Solution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("omega {0} is outside [0, 1]")]
    BadOmega(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RouteEval {
    pub fixed: f64,
    pub recourse: f64,
    pub load: f64,
}

impl RouteEval {
    pub fn duration(&self) -> f64 {
        self.fixed + self.recourse
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub fixed_distance: f64,
    pub expected_recourse: f64,
    pub total_load: f64,
    pub weighted_objective: f64,
    pub per_route: Vec<RouteEval>,
    /// Orders the search must not leave out: every replica for an unbounded
    /// fleet, every urgent pair otherwise.
    pub missing_mandatory: usize,
}

impl Evaluation {
    pub fn expected_distance(&self) -> f64 {
        self.fixed_distance + self.expected_recourse
    }

    pub fn key(&self) -> SearchKey {
        SearchKey {
            missing: self.missing_mandatory,
            value: self.weighted_objective,
        }
    }
}

/// Lexicographic search criterion: coverage of mandatory orders first, then
/// the weighted objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchKey {
    pub missing: usize,
    pub value: f64,
}

impl SearchKey {
    pub const WORST: SearchKey = SearchKey {
        missing: usize::MAX,
        value: f64::INFINITY,
    };

    /// Strict improvement with a relative tolerance against float noise.
    pub fn better_than(&self, other: &SearchKey) -> bool {
        match self.missing.cmp(&other.missing) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.value < other.value - 1e-9 * other.value.abs().max(1.0),
        }
    }

    pub fn cmp_total(&self, other: &SearchKey) -> Ordering {
        self.missing
            .cmp(&other.missing)
            .then(self.value.total_cmp(&other.value))
    }
}

pub fn weighted(omega: f64, distance: f64, load: f64) -> f64 {
    omega * distance - (1.0 - omega) * load
}

/// Depot, the visits in order, depot.
pub fn visits_fixed_distance(problem: &Problem, visits: &[usize]) -> f64 {
    let inst = &problem.instance;
    let mut prev = 0;
    let mut total = 0.0;
    for &v in visits {
        let o = problem.origin(v);
        total += inst.d(prev, o);
        prev = o;
    }
    total + inst.d(prev, 0)
}

pub fn route_fixed_distance(problem: &Problem, route: &Route) -> f64 {
    visits_fixed_distance(problem, &route.visits)
}

/// Cost of one urgent pair receiving `delivered` in total.
pub fn pair_recourse(problem: &Problem, pair: usize, delivered: f64) -> f64 {
    let p = &problem.replicas.pairs[pair];
    if !p.urgent {
        return 0.0;
    }
    let round_trip = problem.instance.d(0, p.customer) + problem.instance.d(p.customer, 0);
    round_trip * p.demand.exceedance(delivered)
}

/// Mass delivered to every pair by the whole solution.
pub fn delivered_per_pair(problem: &Problem, solution: &Solution) -> Vec<f64> {
    let mut out = vec![0.0; problem.n_pairs()];
    for r in &solution.routes {
        for a in &r.assignments {
            out[problem.replica(a.replica).pair] += a.load;
        }
    }
    out
}

/// Recourse probability of the pair behind `replica` given the solution's
/// deliveries; zero for non-urgent orders.
pub fn recourse_probability(problem: &Problem, solution: &Solution, replica: usize) -> f64 {
    let pair = problem.replica(replica).pair;
    let p = &problem.replicas.pairs[pair];
    if !p.urgent {
        return 0.0;
    }
    let delivered = delivered_per_pair(problem, solution)[pair];
    p.demand.exceedance(delivered)
}

/// Expected recourse of a route considered on its own.
pub fn route_expected_recourse(problem: &Problem, route: &Route) -> f64 {
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for &v in &route.visits {
        let pair = problem.replica(v).pair;
        if !pairs.iter().any(|(p, _)| *p == pair) {
            pairs.push((pair, 0.0));
        }
    }
    for a in &route.assignments {
        let pair = problem.replica(a.replica).pair;
        if let Some(slot) = pairs.iter_mut().find(|(p, _)| *p == pair) {
            slot.1 += a.load;
        }
    }
    pairs
        .iter()
        .map(|&(p, d)| pair_recourse(problem, p, d))
        .sum()
}

pub fn missing_mandatory(problem: &Problem, solution: &Solution) -> usize {
    match problem.instance.fleet {
        Fleet::Unbounded => solution.unserved.len(),
        Fleet::Limited { .. } => {
            let served = solution.served_per_pair(problem);
            problem
                .replicas
                .pairs
                .iter()
                .zip(&served)
                .filter(|(p, &s)| p.urgent && s == 0)
                .count()
        }
    }
}

/// Full evaluation with the instance's omega.
///
/// A pair's recourse is attributed to the routes visiting it in proportion
/// to the mass each of them delivers (equally if nothing is delivered).
pub fn evaluate(problem: &Problem, solution: &Solution) -> Evaluation {
    let omega = problem.instance.omega;
    let n_pairs = problem.n_pairs();
    let mut delivered = vec![0.0; n_pairs];
    let mut visitors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_pairs];
    let mut per_route = Vec::with_capacity(solution.routes.len());
    for (ri, r) in solution.routes.iter().enumerate() {
        let mut re = RouteEval {
            fixed: route_fixed_distance(problem, r),
            ..RouteEval::default()
        };
        for &v in &r.visits {
            let pair = problem.replica(v).pair;
            if !visitors[pair].iter().any(|(x, _)| *x == ri) {
                visitors[pair].push((ri, 0.0));
            }
        }
        for a in &r.assignments {
            let pair = problem.replica(a.replica).pair;
            delivered[pair] += a.load;
            re.load += a.load;
            if let Some(slot) = visitors[pair].iter_mut().find(|(x, _)| *x == ri) {
                slot.1 += a.load;
            }
        }
        per_route.push(re);
    }
    let mut recourse = 0.0;
    for pair in 0..n_pairs {
        if visitors[pair].is_empty() {
            continue;
        }
        let cost = pair_recourse(problem, pair, delivered[pair]);
        if cost == 0.0 {
            continue;
        }
        recourse += cost;
        let k = visitors[pair].len() as f64;
        for &(ri, mass) in &visitors[pair] {
            let share = if delivered[pair] > 0.0 {
                mass / delivered[pair]
            } else {
                1.0 / k
            };
            per_route[ri].recourse += cost * share;
        }
    }
    let fixed: f64 = per_route.iter().map(|r| r.fixed).sum();
    let load: f64 = per_route.iter().map(|r| r.load).sum();
    Evaluation {
        fixed_distance: fixed,
        expected_recourse: recourse,
        total_load: load,
        weighted_objective: weighted(omega, fixed + recourse, load),
        per_route,
        missing_mandatory: missing_mandatory(problem, solution),
    }
}

pub fn weighted_objective(
    problem: &Problem,
    solution: &Solution,
    omega: f64,
) -> Result<f64, EvalError> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(EvalError::BadOmega(omega));
    }
    let e = evaluate(problem, solution);
    Ok(weighted(omega, e.expected_distance(), e.total_load))
}

/// Time used per truck (limited fleet) or per route (unbounded fleet, where
/// each route is its own vehicle). Pairs are `(truck index, minutes)`.
pub fn truck_durations(
    problem: &Problem,
    solution: &Solution,
    eval: &Evaluation,
) -> Vec<(usize, f64)> {
    match problem.instance.fleet {
        Fleet::Unbounded => solution
            .routes
            .iter()
            .zip(&eval.per_route)
            .map(|(r, e)| (r.truck, e.duration()))
            .collect(),
        Fleet::Limited { .. } => {
            let mut totals = vec![0.0; problem.instance.trucks.len()];
            let mut used = vec![false; totals.len()];
            for (r, e) in solution.routes.iter().zip(&eval.per_route) {
                if r.truck < totals.len() {
                    totals[r.truck] += e.duration();
                    used[r.truck] = true;
                }
            }
            totals
                .into_iter()
                .enumerate()
                .filter(|(t, _)| used[*t])
                .collect()
        }
    }
}

/// Mean route load over effective capacity, in percent.
pub fn occupancy_rate(problem: &Problem, solution: &Solution) -> f64 {
    if solution.routes.is_empty() {
        return 0.0;
    }
    let sum: f64 = solution
        .routes
        .iter()
        .map(|r| r.load() / problem.truck(r.truck).effective_capacity())
        .sum();
    100.0 * sum / solution.routes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{Assignment, Route};

    fn fictitious_solution(_p: &Problem) -> Solution {
        // replicas: 0,1 -> customer 1; 2 -> customer 2; 3,4 -> customer 3
        let asg = |replica, compartment, load| Assignment {
            replica,
            compartment,
            load,
        };
        Solution {
            routes: vec![Route {
                truck: 0,
                visits: vec![2, 3, 4, 0, 1],
                assignments: vec![
                    asg(2, 2, 3.77),
                    asg(3, 1, 1.91),
                    asg(4, 3, 1.91),
                    asg(0, 0, 2.06),
                    asg(1, 4, 2.06),
                ],
            }],
            unserved: vec![],
        }
    }

    #[test]
    fn fictitious_route_values() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let s = fictitious_solution(&p);
        let e = evaluate(&p, &s);
        assert_eq!(e.fixed_distance, 166.0);
        assert!((e.total_load - 11.71).abs() < 1e-9);
        assert!(
            (e.expected_recourse - 16.26).abs() < 0.01,
            "{}",
            e.expected_recourse
        );
        assert!((route_expected_recourse(&p, &s.routes[0]) - e.expected_recourse).abs() < 1e-12);
        assert!((occupancy_rate(&p, &s) - 100.0 * 11.71 / 11.8).abs() < 1e-9);
    }

    #[test]
    fn single_visit_recourse() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let r = Route {
            truck: 0,
            visits: vec![2],
            assignments: vec![Assignment {
                replica: 2,
                compartment: 2,
                load: 3.77,
            }],
        };
        assert_eq!(route_fixed_distance(&p, &r), 138.0);
        let expected = 2.0 * 69.0 * crate::stochastics::normal_sf((3.77 - 2.95) / 0.5);
        assert!((route_expected_recourse(&p, &r) - expected).abs() < 1e-12);
        assert!((route_expected_recourse(&p, &r) - 6.97).abs() < 0.01);
    }

    #[test]
    fn empty_route_is_free() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let r = Route::new(0);
        assert_eq!(route_fixed_distance(&p, &r), 0.0);
        assert_eq!(route_expected_recourse(&p, &r), 0.0);
    }

    #[test]
    fn objective_is_linear_in_omega() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let s = fictitious_solution(&p);
        let f = |w| weighted_objective(&p, &s, w).unwrap();
        assert!((f(0.5) - 0.5 * (f(0.0) + f(1.0))).abs() < 1e-9);
        assert!((f(0.25) - (0.75 * f(0.0) + 0.25 * f(1.0))).abs() < 1e-9);
        assert!(weighted_objective(&p, &s, -0.1).is_err());
    }

    #[test]
    fn search_key_order() {
        let a = SearchKey {
            missing: 0,
            value: 10.0,
        };
        let b = SearchKey {
            missing: 1,
            value: -100.0,
        };
        assert!(a.better_than(&b));
        assert!(!a.better_than(&a));
        assert!(SearchKey {
            missing: 0,
            value: 9.0
        }
        .better_than(&a));
    }
}

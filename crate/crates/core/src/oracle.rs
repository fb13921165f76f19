//! Ground truth for small instances: exhaustive optimisation and Monte Carlo
//! simulation of recourse.
//!
//! The exact solver enumerates, for every truck, which orders it carries and
//! how its compartments are split among them; the visiting order is an
//! exact TSP over the customers involved. Given those choices the best loads
//! follow from the demand supports, because the expected recourse of a
//! discrete order only changes at support points while the load term is
//! linear. Each truck drives at most one route.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::evaluation::{evaluate, pair_recourse, weighted, SearchKey};
use crate::model::{Assignment, CompartmentPolicy, Fleet, ModelError, Problem, Route, Solution};
use crate::stochastics::DemandModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("exact search supports at most {max} customers, instance has {got}")]
    TooManyCustomers { max: usize, got: usize },
    #[error("exact search supports at most {max} trucks, instance has {got}")]
    TooManyTrucks { max: usize, got: usize },
    #[error("exact search supports at most {max} compartments per truck")]
    TooManyCompartments { max: usize },
    #[error("exact search supports at most {max} orders")]
    TooManyOrders { max: usize },
    #[error("customer {0} has a continuous demand; exact search needs discrete or fixed demands")]
    ContinuousDemand(usize),
    #[error("exact search needs a limited fleet")]
    UnboundedFleet,
    #[error("exact search needs exclusive compartments")]
    SharedCompartments,
    #[error("at least one sample is required")]
    NoSamples,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub customers: usize,
    pub trucks: usize,
    pub compartments: usize,
    pub orders: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            customers: 6,
            trucks: 2,
            compartments: 6,
            orders: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub solution: Solution,
    pub key: SearchKey,
    pub objective: f64,
    pub expected_distance: f64,
    pub total_load: f64,
    pub nodes_explored: u64,
}

/// One truck's share of the plan: the orders it carries, how much room
/// each gets, and the visiting order.
#[derive(Debug, Clone)]
struct Profile {
    pairs: Vec<usize>,
    room: Vec<f64>,
    owner: Vec<Option<usize>>,
    tsp: f64,
    order: Vec<usize>,
}

fn check_limits(problem: &Problem, limits: &Limits) -> Result<(), OracleError> {
    let inst = &problem.instance;
    inst.validate()?;
    let customers = inst
        .customers
        .iter()
        .filter(|c| !c.orders.is_empty())
        .count();
    if customers > limits.customers {
        return Err(OracleError::TooManyCustomers {
            max: limits.customers,
            got: customers,
        });
    }
    if inst.trucks.len() > limits.trucks {
        return Err(OracleError::TooManyTrucks {
            max: limits.trucks,
            got: inst.trucks.len(),
        });
    }
    if inst
        .trucks
        .iter()
        .any(|t| t.compartments.len() > limits.compartments)
    {
        return Err(OracleError::TooManyCompartments {
            max: limits.compartments,
        });
    }
    if problem.n_pairs() > limits.orders {
        return Err(OracleError::TooManyOrders { max: limits.orders });
    }
    if inst.fleet == Fleet::Unbounded {
        return Err(OracleError::UnboundedFleet);
    }
    if inst.policy != CompartmentPolicy::Exclusive {
        return Err(OracleError::SharedCompartments);
    }
    for p in &problem.replicas.pairs {
        if matches!(p.demand, DemandModel::Normal { .. }) {
            return Err(OracleError::ContinuousDemand(p.customer));
        }
    }
    Ok(())
}

/// Shortest depot tour through `customers`, by brute force.
fn tsp(problem: &Problem, customers: &[usize]) -> (f64, Vec<usize>) {
    let d = |a: usize, b: usize| problem.instance.d(a, b);
    let mut perm = customers.to_vec();
    perm.sort_unstable();
    let cost = |p: &[usize]| {
        let mut prev = 0;
        let mut c = 0.0;
        for &x in p {
            c += d(prev, x);
            prev = x;
        }
        c + d(prev, 0)
    };
    let mut best = (cost(&perm), perm.clone());
    // Heap's algorithm over the remaining orders.
    let n = perm.len();
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = cost(&perm);
            if v < best.0 - 1e-12 {
                best = (v, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

fn profiles_for_truck(
    problem: &Problem,
    k: usize,
    tsp_cache: &mut HashMap<Vec<usize>, (f64, Vec<usize>)>,
) -> Vec<Profile> {
    let truck = problem.truck(k);
    let caps = &truck.compartments;
    let h = caps.len();
    let n_pairs = problem.n_pairs();
    let allowed: Vec<usize> = (0..n_pairs)
        .filter(|&p| truck.can_serve(problem.replicas.pairs[p].customer))
        .collect();
    let mut out = vec![Profile {
        pairs: Vec::new(),
        room: vec![0.0; n_pairs],
        owner: vec![None; h],
        tsp: 0.0,
        order: Vec::new(),
    }];
    for mask in 1u32..(1 << allowed.len()) {
        let q: Vec<usize> = (0..allowed.len())
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| allowed[i])
            .collect();
        if q.len() > h {
            continue;
        }
        let mut customers: Vec<usize> = q
            .iter()
            .map(|&p| problem.replicas.pairs[p].customer)
            .collect();
        customers.sort_unstable();
        customers.dedup();
        let (tour, order) = tsp_cache
            .entry(customers.clone())
            .or_insert_with(|| tsp(problem, &customers))
            .clone();
        // Every compartment goes to some order of q, each order gets one.
        let mut seen: Vec<Vec<u64>> = Vec::new();
        let m = q.len();
        let mut f = vec![0usize; h];
        loop {
            let mut hit = vec![false; m];
            for &x in &f {
                hit[x] = true;
            }
            if hit.iter().all(|&b| b) {
                let mut room = vec![0.0; n_pairs];
                for c in 0..h {
                    room[q[f[c]]] += caps[c];
                }
                let sig: Vec<u64> = q.iter().map(|&p| room[p].to_bits()).collect();
                if !seen.contains(&sig) {
                    seen.push(sig);
                    out.push(Profile {
                        pairs: q.clone(),
                        room,
                        owner: f.iter().map(|&x| Some(q[x])).collect(),
                        tsp: tour,
                        order: order.clone(),
                    });
                }
            }
            let mut i = 0;
            loop {
                if i == h {
                    break;
                }
                f[i] += 1;
                if f[i] < m {
                    break;
                }
                f[i] = 0;
                i += 1;
            }
            if i == h {
                break;
            }
        }
    }
    out
}

fn max_support(model: &DemandModel) -> f64 {
    model
        .support()
        .map(|s| s.iter().copied().fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY)
}

/// Largest value for coordinate `p` keeping the loads routable; two trucks
/// at most (`rooms[k][p]`, `limits[k]`).
fn coordinate_max(t: &[f64], p: usize, rooms: &[&[f64]], limits: &[f64], hi: f64) -> f64 {
    let pairs = t.len();
    let mut best = hi.min(rooms.iter().map(|r| r[p]).sum());
    let nk = rooms.len();
    for r_mask in 1u32..(1 << nk) {
        // Loads not fitting outside R must fit inside R's legal load.
        let outside = |q: usize| -> f64 {
            (0..nk)
                .filter(|&k| r_mask & (1 << k) == 0)
                .map(|k| rooms[k][q])
                .sum()
        };
        let cap: f64 = (0..nk)
            .filter(|&k| r_mask & (1 << k) != 0)
            .map(|k| limits[k])
            .sum();
        let used: f64 = (0..pairs)
            .filter(|&q| q != p)
            .map(|q| (t[q] - outside(q)).max(0.0))
            .sum();
        best = best.min(outside(p) + (cap - used));
    }
    best
}

fn routable(t: &[f64], rooms: &[&[f64]], limits: &[f64]) -> bool {
    let nk = rooms.len();
    for r_mask in 0u32..(1 << nk) {
        let outside = |q: usize| -> f64 {
            (0..nk)
                .filter(|&k| r_mask & (1 << k) == 0)
                .map(|k| rooms[k][q])
                .sum()
        };
        let cap: f64 = (0..nk)
            .filter(|&k| r_mask & (1 << k) != 0)
            .map(|k| limits[k])
            .sum();
        if r_mask == 0 {
            if (0..t.len()).any(|q| t[q] > outside(q) + 1e-9) {
                return false;
            }
            continue;
        }
        let need: f64 = (0..t.len()).map(|q| (t[q] - outside(q)).max(0.0)).sum();
        if need > cap + 1e-9 {
            return false;
        }
    }
    true
}

/// Exhaustive optimum of the instance's weighted objective (after covering
/// as many urgent orders as possible).
pub fn enumerate_exact(problem: &Problem, limits: &Limits) -> Result<ExactResult, OracleError> {
    check_limits(problem, limits)?;
    let inst = &problem.instance;
    let omega = inst.omega;
    let n_pairs = problem.n_pairs();
    let pairs = &problem.replicas.pairs;
    let mut cache = HashMap::new();
    let per_truck: Vec<Vec<Profile>> = (0..inst.trucks.len())
        .map(|k| profiles_for_truck(problem, k, &mut cache))
        .collect();
    let hi: Vec<f64> = pairs.iter().map(|p| max_support(&p.demand)).collect();
    let levels_of = |p: usize, room: f64| -> Vec<f64> {
        let mut l = vec![0.0];
        if pairs[p].urgent {
            if let Some(s) = pairs[p].demand.support() {
                l.extend(
                    s.into_iter()
                        .filter(|&v| v > 0.0 && v <= room.min(hi[p]) + 1e-12),
                );
            }
        }
        l
    };

    let mut nodes: u64 = 0;
    let mut best_key = SearchKey::WORST;
    let mut best_plan: Option<(Vec<usize>, Vec<f64>)> = None;
    let nk = per_truck.len();
    let mut idx = vec![0usize; nk];
    'combos: loop {
        let chosen: Vec<&Profile> = (0..nk).map(|k| &per_truck[k][idx[k]]).collect();
        nodes += 1;
        let mut on_trucks = vec![0usize; n_pairs];
        for pr in &chosen {
            for &p in &pr.pairs {
                on_trucks[p] += 1;
            }
        }
        let usable = (0..n_pairs).all(|p| on_trucks[p] <= pairs[p].replica_count());
        let missing = (0..n_pairs)
            .filter(|&p| pairs[p].urgent && on_trucks[p] == 0)
            .count();
        let tsp_sum: f64 = chosen.iter().map(|p| p.tsp).sum();
        let rooms: Vec<&[f64]> = chosen.iter().map(|p| p.room.as_slice()).collect();
        let lims: Vec<f64> = (0..nk).map(|k| inst.trucks[k].max_load).collect();
        let load_bound: f64 = (0..nk)
            .map(|k| lims[k].min((0..n_pairs).map(|p| rooms[k][p].min(hi[p])).sum()))
            .sum();
        let bound = SearchKey {
            missing,
            value: weighted(omega, tsp_sum, load_bound),
        };
        let promising = usable
            && (bound.missing < best_key.missing
                || (bound.missing == best_key.missing && bound.value < best_key.value - 1e-9));
        if promising {
            let active: Vec<usize> = (0..n_pairs).filter(|&p| on_trucks[p] > 0).collect();
            let levels: Vec<Vec<f64>> = active
                .iter()
                .map(|&p| levels_of(p, rooms.iter().map(|r| r[p]).sum()))
                .collect();
            let mut li = vec![0usize; active.len()];
            loop {
                nodes += 1;
                let mut t = vec![0.0; n_pairs];
                for (j, &p) in active.iter().enumerate() {
                    t[p] = levels[j][li[j]];
                }
                if routable(&t, &rooms, &lims) {
                    for &p in &active {
                        let m = coordinate_max(&t, p, &rooms, &lims, hi[p]);
                        if m > t[p] {
                            t[p] = m;
                        }
                    }
                    let recourse: f64 = active
                        .iter()
                        .map(|&p| pair_recourse(problem, p, t[p]))
                        .sum();
                    let load: f64 = t.iter().sum();
                    let key = SearchKey {
                        missing,
                        value: weighted(omega, tsp_sum + recourse, load),
                    };
                    if key.better_than(&best_key) {
                        let plan = (idx.clone(), t.clone());
                        let ok = match inst.max_route_minutes {
                            None => true,
                            Some(_) => {
                                let sol = build_solution(problem, &per_truck, &plan.0, &plan.1);
                                crate::model::check_feasibility(problem, &sol).is_feasible()
                            }
                        };
                        if ok {
                            best_key = key;
                            best_plan = Some(plan);
                        }
                    }
                }
                let mut j = 0;
                loop {
                    if j == li.len() {
                        break;
                    }
                    li[j] += 1;
                    if li[j] < levels[j].len() {
                        break;
                    }
                    li[j] = 0;
                    j += 1;
                }
                if j == li.len() {
                    break;
                }
            }
        }
        let mut k = 0;
        loop {
            if k == nk {
                break 'combos;
            }
            idx[k] += 1;
            if idx[k] < per_truck[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }

    let (plan_idx, t) = best_plan.expect("the empty plan is always feasible");
    let solution = build_solution(problem, &per_truck, &plan_idx, &t);
    let e = evaluate(problem, &solution);
    Ok(ExactResult {
        key: SearchKey {
            missing: best_key.missing,
            value: e.weighted_objective,
        },
        objective: e.weighted_objective,
        expected_distance: e.expected_distance(),
        total_load: e.total_load,
        nodes_explored: nodes,
        solution,
    })
}

fn build_solution(
    problem: &Problem,
    per_truck: &[Vec<Profile>],
    idx: &[usize],
    t: &[f64],
) -> Solution {
    let inst = &problem.instance;
    let n_pairs = problem.n_pairs();
    let nk = idx.len();
    // Split each pair's total over trucks: the first truck takes what the
    // others cannot, then as much as its legal load allows.
    let mut split = vec![vec![0.0; n_pairs]; nk];
    let chosen: Vec<&Profile> = (0..nk).map(|k| &per_truck[k][idx[k]]).collect();
    let mut left = t.to_vec();
    for k in 0..nk {
        let later = |p: usize| -> f64 { (k + 1..nk).map(|j| chosen[j].room[p]).sum() };
        let mut budget = inst.trucks[k].max_load;
        for p in 0..n_pairs {
            let forced = (left[p] - later(p)).max(0.0).min(chosen[k].room[p]);
            split[k][p] = forced;
            budget -= forced;
        }
        for p in 0..n_pairs {
            let extra = (left[p] - split[k][p])
                .min(chosen[k].room[p] - split[k][p])
                .min(budget.max(0.0))
                .max(0.0);
            split[k][p] += extra;
            budget -= extra;
        }
        for p in 0..n_pairs {
            left[p] -= split[k][p];
        }
    }
    let mut next_replica: Vec<usize> = problem
        .replicas
        .pairs
        .iter()
        .map(|p| p.replicas.start)
        .collect();
    let mut routes = Vec::new();
    for k in 0..nk {
        let prof = chosen[k];
        if prof.pairs.is_empty() {
            continue;
        }
        let mut rep_of = vec![usize::MAX; n_pairs];
        for &p in &prof.pairs {
            rep_of[p] = next_replica[p];
            next_replica[p] += 1;
        }
        let mut visits = Vec::new();
        for &c in &prof.order {
            for &p in &prof.pairs {
                if problem.replicas.pairs[p].customer == c {
                    visits.push(rep_of[p]);
                }
            }
        }
        let caps = &inst.trucks[k].compartments;
        let mut remaining = split[k].clone();
        let mut assignments = Vec::new();
        for (c, owner) in prof.owner.iter().enumerate() {
            if let Some(p) = *owner {
                let load = remaining[p].min(caps[c]).max(0.0);
                remaining[p] -= load;
                assignments.push(Assignment {
                    replica: rep_of[p],
                    compartment: c,
                    load,
                });
            }
        }
        routes.push(Route {
            truck: k,
            visits,
            assignments,
        });
    }
    let served: Vec<usize> = routes
        .iter()
        .flat_map(|r| r.visits.iter().copied())
        .collect();
    Solution {
        unserved: (0..problem.n_replicas())
            .filter(|v| !served.contains(v))
            .collect(),
        routes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub mean_extra_distance: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample demands and count the depot round trips caused by shortfalls of
/// urgent orders. One draw per order per sample, shared by all its replicas.
pub fn simulate<R: Rng>(
    problem: &Problem,
    solution: &Solution,
    samples: usize,
    rng: &mut R,
) -> Result<SimulationResult, OracleError> {
    if samples < 1 {
        return Err(OracleError::NoSamples);
    }
    let n_pairs = problem.n_pairs();
    let mut delivered = vec![0.0; n_pairs];
    let mut visited = vec![false; n_pairs];
    for r in &solution.routes {
        for &v in &r.visits {
            visited[problem.replica(v).pair] = true;
        }
        for a in &r.assignments {
            delivered[problem.replica(a.replica).pair] += a.load;
        }
    }
    let watched: Vec<(usize, f64, f64)> = (0..n_pairs)
        .filter(|&p| visited[p] && problem.replicas.pairs[p].urgent)
        .map(|p| {
            let c = problem.replicas.pairs[p].customer;
            let trip = problem.instance.d(0, c) + problem.instance.d(c, 0);
            (p, delivered[p], trip)
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut extra = 0.0;
        for &(p, mass, trip) in &watched {
            if problem.replicas.pairs[p].demand.sample(rng) > mass {
                extra += trip;
            }
        }
        sum += extra;
        sum_sq += extra * extra;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        (sum_sq - n * mean * mean).max(0.0) / (n - 1.0)
    } else {
        0.0
    };
    Ok(SimulationResult {
        mean_extra_distance: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tsp_small() {
        let p = Problem::new(datasets::cooperative(true, 1)).unwrap();
        let (c, order) = tsp(&p, &[1, 2, 3, 4, 5]);
        assert_eq!(c, 151.0);
        assert_eq!(order.len(), 5);
        assert_eq!(tsp(&p, &[]).0, 0.0);
    }

    #[test]
    fn routability_conditions() {
        let r1 = [5.0, 0.0];
        let r2 = [0.0, 5.0];
        assert!(routable(&[5.0, 5.0], &[&r1, &r2], &[5.0, 5.0]));
        assert!(!routable(&[5.0, 5.0], &[&r1, &r2], &[4.0, 5.0]));
        assert_eq!(
            coordinate_max(&[0.0, 5.0], 0, &[&r1, &r2], &[4.0, 5.0], 10.0),
            4.0
        );
    }

    #[test]
    fn numerical_example_optima() {
        for (omega, obj, dist, load) in [
            (0.2, -9.6, 52.0, 25.0),
            (0.3, -2.0, 40.0, 20.0),
            (0.8, 21.2, 30.0, 14.0),
        ] {
            let p = Problem::new(datasets::numerical(omega)).unwrap();
            let r = enumerate_exact(&p, &Limits::default()).unwrap();
            assert!(
                (r.objective - obj).abs() < 1e-9,
                "omega {omega}: {}",
                r.objective
            );
            assert!((r.expected_distance - dist).abs() < 1e-9);
            assert!((r.total_load - load).abs() < 1e-9);
            assert!(crate::model::check_feasibility(&p, &r.solution).is_feasible());
            assert!(r.nodes_explored > 0);
        }
    }

    #[test]
    fn rejects_out_of_scope() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        assert_eq!(
            enumerate_exact(&p, &Limits::default()),
            Err(OracleError::ContinuousDemand(1))
        );
        let p = Problem::new(datasets::cooperative(true, 1)).unwrap();
        assert!(matches!(
            enumerate_exact(&p, &Limits::default()),
            Err(OracleError::TooManyCustomers { .. })
        ));
    }

    #[test]
    fn simulate_deterministic_shortfall() {
        let p = Problem::new(datasets::numerical(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sol = Solution {
            routes: vec![Route {
                truck: 0,
                visits: vec![0],
                assignments: vec![Assignment {
                    replica: 0,
                    compartment: 0,
                    load: 0.0,
                }],
            }],
            unserved: vec![1, 2, 3],
        };
        let r = simulate(&p, &sol, 1000, &mut rng).unwrap();
        assert_eq!(r.mean_extra_distance, 20.0);
        assert!(simulate(&p, &sol, 0, &mut rng).is_err());
    }
}

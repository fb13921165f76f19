//! Sequential savings construction.
//!
//! Routes are built one at a time. Each starts from the unserved replica
//! with the highest `dif` score (urgent, far away, and sensitive to which
//! compartment it gets), placed in the compartment that leaves the smallest
//! shortfall probability. The route then grows at either end with the
//! replica of largest saving, a remaining replica of the customer just
//! inserted taking precedence, until nothing more fits.

use crate::evaluation::{route_expected_recourse, visits_fixed_distance};
use crate::loading::{derive_loads, reoptimize_compartments};
use crate::model::{Assignment, CompartmentPolicy, Fleet, Problem, Route, Solution};
use crate::stochastics::{DemandModel, StochasticsError};

/// `min(quantile(p), capacity)`.
pub fn allocate_load(model: &DemandModel, capacity: f64, p: f64) -> Result<f64, StochasticsError> {
    Ok(model.quantile(p)?.min(capacity))
}

/// Seed priority of `replica` over the compartments of `trucks`.
pub fn dif_score(problem: &Problem, replica: usize, trucks: &[usize]) -> f64 {
    let rep = problem.replica(replica);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &k in trucks {
        if !problem.can_serve(k, replica) {
            continue;
        }
        for &c in &problem.truck(k).compartments {
            let p = rep.demand.exceedance(c);
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    if !lo.is_finite() {
        return 0.0;
    }
    2.0 * problem.depot_to(replica) * (hi - lo) * rep.urgency
}

/// Interest of serving `candidate` with the current truck's free
/// compartments rather than with another truck. Zero without alternatives.
pub fn insertion_interest(
    problem: &Problem,
    free_caps: &[f64],
    other_trucks: &[usize],
    candidate: usize,
) -> f64 {
    let rep = problem.replica(candidate);
    let alt = other_trucks
        .iter()
        .filter(|&&k| problem.can_serve(k, candidate))
        .flat_map(|&k| problem.truck(k).compartments.iter())
        .map(|&c| rep.demand.exceedance(c))
        .fold(f64::INFINITY, f64::min);
    let own = free_caps
        .iter()
        .map(|&c| rep.demand.exceedance(c))
        .fold(f64::INFINITY, f64::min);
    if !alt.is_finite() || !own.is_finite() {
        return 0.0;
    }
    2.0 * problem.depot_to(candidate) * (alt - own) * rep.urgency
}

/// Saving of serving `candidate` next to route end `end`; `append` puts it
/// after the last visit, otherwise before the first.
pub fn insertion_saving(
    problem: &Problem,
    end: usize,
    candidate: usize,
    append: bool,
    interest: f64,
    lambda: f64,
) -> f64 {
    let inst = &problem.instance;
    let (a, b) = (problem.origin(end), problem.origin(candidate));
    let base = if append {
        inst.d(a, 0) + inst.d(0, b) - inst.d(a, b)
    } else {
        inst.d(0, a) + inst.d(b, 0) - inst.d(b, a)
    };
    base + lambda * interest
}

/// What happened during construction, for inspection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstructTrace {
    /// Seed replica of each route, in creation order.
    pub seeds: Vec<usize>,
    /// Unserved replicas (and the trucks on offer) when each seed was picked.
    pub seed_pools: Vec<(Vec<usize>, Vec<usize>)>,
    /// Every replica in insertion order.
    pub insertions: Vec<usize>,
}

struct Builder<'a> {
    problem: &'a Problem,
    truck: usize,
    visits: Vec<usize>,
    /// Compartment occupant and load (exclusive policy).
    slots: Vec<Option<(usize, f64)>>,
    full_served: &'a [u32],
    time_used: f64,
}

impl<'a> Builder<'a> {
    fn route(&self) -> Route {
        let mut r = Route::new(self.truck);
        r.visits = self.visits.clone();
        r.assignments = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(c, s)| {
                s.map(|(replica, load)| Assignment {
                    replica,
                    compartment: c,
                    load,
                })
            })
            .collect();
        r
    }

    fn load(&self) -> f64 {
        self.slots.iter().flatten().map(|s| s.1).sum()
    }

    fn free_caps(&self) -> Vec<f64> {
        let caps = &self.problem.truck(self.truck).compartments;
        (0..caps.len())
            .filter(|&c| self.slots[c].is_none())
            .map(|c| caps[c])
            .collect()
    }

    fn is_full(&self) -> bool {
        match self.problem.instance.policy {
            CompartmentPolicy::Exclusive => {
                self.slots.iter().all(Option::is_some)
                    || self.load() >= self.problem.truck(self.truck).max_load - 1e-9
            }
            CompartmentPolicy::SharedByFeed => false,
        }
    }

    /// Try to put `replica` at `pos`; returns whether it was kept.
    fn try_insert(&mut self, replica: usize, pos: usize) -> bool {
        let problem = self.problem;
        if !problem.can_serve(self.truck, replica) {
            return false;
        }
        let truck = problem.truck(self.truck);
        let mut visits = self.visits.clone();
        visits.insert(pos, replica);
        let mut route = Route::new(self.truck);
        route.visits = visits.clone();
        let mut slot = None;
        match problem.instance.policy {
            CompartmentPolicy::Exclusive => {
                // Free compartment with the smallest shortfall probability,
                // i.e. the largest one; ties to the lowest index.
                let mut best: Option<usize> = None;
                for c in 0..truck.compartments.len() {
                    if self.slots[c].is_none()
                        && best.map_or(true, |b| truck.compartments[c] > truck.compartments[b])
                    {
                        best = Some(c);
                    }
                }
                let Some(c) = best else { return false };
                let room = truck.max_load - self.load();
                let load = problem
                    .replica(replica)
                    .target
                    .min(truck.compartments[c])
                    .min(room);
                if !(load > 0.0) && problem.replica(replica).target > 0.0 {
                    return false;
                }
                slot = Some((c, load.max(0.0)));
                route.assignments = self.route().assignments;
                route.assignments.push(Assignment {
                    replica,
                    compartment: c,
                    load: load.max(0.0),
                });
            }
            CompartmentPolicy::SharedByFeed => {
                if !reoptimize_compartments(problem, &mut route, self.full_served) {
                    return false;
                }
            }
        }
        if let Some(budget) = problem.instance.max_route_minutes {
            let duration =
                visits_fixed_distance(problem, &visits) + route_expected_recourse(problem, &route);
            if self.time_used + duration > budget + 1e-9 * budget {
                return false;
            }
        }
        self.visits = visits;
        if let Some((c, load)) = slot {
            self.slots[c] = Some((replica, load));
        }
        true
    }
}

/// Build a solution with savings weight `lambda`.
pub fn construct(problem: &Problem, lambda: f64) -> Solution {
    construct_traced(problem, lambda).0
}

pub fn construct_traced(problem: &Problem, lambda: f64) -> (Solution, ConstructTrace) {
    let inst = &problem.instance;
    let n = problem.n_replicas();
    let mut trace = ConstructTrace::default();
    let mut unserved = vec![true; n];
    let mut remaining = n;
    let full_served: Vec<u32> = problem
        .replicas
        .pairs
        .iter()
        .map(|p| p.replica_count() as u32)
        .collect();
    let n_trucks = inst.trucks.len();
    let mut pool: Vec<usize> = (0..n_trucks).collect();
    let mut time_used = vec![0.0; n_trucks];
    let mut routes: Vec<Route> = Vec::new();
    let mut skip_seed = vec![false; n];

    while remaining > 0 && !pool.is_empty() {
        // Seed: highest dif over trucks still on offer, then farthest from
        // the depot, then lowest id.
        let mut seed: Option<(f64, f64, usize)> = None;
        for v in 0..n {
            if !unserved[v] || skip_seed[v] || !pool.iter().any(|&k| problem.can_serve(k, v)) {
                continue;
            }
            let dif = dif_score(problem, v, &pool);
            let far = problem.depot_to(v);
            if seed.map_or(true, |(d, f, _)| dif > d || (dif == d && far > f)) {
                seed = Some((dif, far, v));
            }
        }
        let Some((_, _, seed)) = seed else { break };

        // Truck owning the best compartment for the seed; ties to lowest id.
        let rep = problem.replica(seed);
        let mut best: Option<(f64, usize)> = None;
        for &k in &pool {
            if !problem.can_serve(k, seed) {
                continue;
            }
            let p = problem
                .truck(k)
                .compartments
                .iter()
                .map(|&c| rep.demand.exceedance(c))
                .fold(f64::INFINITY, f64::min);
            let better = match best {
                None => true,
                Some((bp, bk)) => p < bp || (p == bp && problem.truck(k).id < problem.truck(bk).id),
            };
            if better {
                best = Some((p, k));
            }
        }
        let Some((_, truck)) = best else { break };

        let mut b = Builder {
            problem,
            truck,
            visits: Vec::new(),
            slots: vec![None; problem.truck(truck).compartments.len()],
            full_served: &full_served,
            time_used: time_used[truck],
        };
        if !b.try_insert(seed, 0) {
            skip_seed[seed] = true;
            continue;
        }
        trace.seeds.push(seed);
        trace.seed_pools.push((
            (0..n).filter(|&v| unserved[v] && !skip_seed[v]).collect(),
            pool.clone(),
        ));
        trace.insertions.push(seed);
        unserved[seed] = false;
        remaining -= 1;
        let mut last = seed;

        let others: Vec<usize> = match inst.fleet {
            Fleet::Unbounded => (0..n_trucks).collect(),
            Fleet::Limited { .. } => pool.iter().copied().filter(|&k| k != truck).collect(),
        };
        let mut rejected = vec![false; n];
        while remaining > 0 && !b.is_full() {
            // A twin of the replica just inserted goes right next to it.
            let pair = problem.replica(last).pair;
            let twin = problem.replicas.pairs[pair]
                .replicas
                .clone()
                .find(|&v| unserved[v] && !rejected[v]);
            let mut inserted = None;
            if let Some(t) = twin {
                let pos = b
                    .visits
                    .iter()
                    .position(|&v| v == last)
                    .map_or(b.visits.len(), |i| i + 1);
                if b.try_insert(t, pos) {
                    inserted = Some(t);
                } else {
                    rejected[t] = true;
                }
            }
            if inserted.is_none() {
                let free = b.free_caps();
                let first = b.visits[0];
                let tail = *b.visits.last().expect("route has a seed");
                let mut cands: Vec<(f64, usize, bool)> = Vec::new();
                for v in 0..n {
                    if !unserved[v] || rejected[v] || !problem.can_serve(truck, v) {
                        continue;
                    }
                    let interest = if lambda != 0.0 {
                        insertion_interest(problem, &free, &others, v)
                    } else {
                        0.0
                    };
                    let sa = insertion_saving(problem, tail, v, true, interest, lambda);
                    let sp = insertion_saving(problem, first, v, false, interest, lambda);
                    if sa >= sp {
                        cands.push((sa, v, true));
                    } else {
                        cands.push((sp, v, false));
                    }
                }
                // Largest saving, then lowest id; append was preferred above.
                cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                for (_, v, append) in cands {
                    let pos = if append { b.visits.len() } else { 0 };
                    if b.try_insert(v, pos) {
                        inserted = Some(v);
                        break;
                    }
                    rejected[v] = true;
                }
            }
            let Some(v) = inserted else { break };
            trace.insertions.push(v);
            unserved[v] = false;
            remaining -= 1;
            last = v;
        }

        let route = b.route();
        time_used[truck] += visits_fixed_distance(problem, &route.visits)
            + route_expected_recourse(problem, &route);
        routes.push(route);
        if let Fleet::Limited { multi_route } = inst.fleet {
            if !multi_route {
                pool.retain(|&k| k != truck);
            }
        }
    }

    let mut solution = Solution {
        routes,
        unserved: (0..n).filter(|&v| unserved[v]).collect(),
    };
    let served = solution.served_per_pair(problem);
    for r in &mut solution.routes {
        derive_loads(problem, r, &served);
    }
    (solution, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::evaluation::evaluate;

    #[test]
    fn fictitious_trace() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let (s, t) = construct_traced(&p, 1.0);
        assert_eq!(t.seeds, vec![2]);
        assert_eq!(s.routes.len(), 1);
        let customers: Vec<usize> = s.routes[0].visits.iter().map(|&v| p.origin(v)).collect();
        assert_eq!(customers, vec![2, 3, 3, 1, 1]);
        let e = evaluate(&p, &s);
        assert_eq!(e.fixed_distance, 166.0);
        assert!((e.total_load - 11.71).abs() < 1e-9);
        assert!((e.expected_distance() - 182.3).abs() < 0.3);
    }

    #[test]
    fn dif_of_customer_two() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        let d = dif_score(&p, 2, &[0]);
        let lo = crate::stochastics::normal_sf((3.8 - 2.95) / 0.5);
        let hi = crate::stochastics::normal_sf((3.0 - 2.95) / 0.5);
        assert!((d - 2.0 * 69.0 * (hi - lo) * 0.95).abs() < 1e-12);
        assert!((d - 54.5).abs() < 0.1);
        for v in 0..p.n_replicas() {
            assert!(dif_score(&p, v, &[0]) <= d);
        }
    }

    #[test]
    fn allocate_caps() {
        let m = DemandModel::normal(2.95, 0.5).unwrap();
        assert_eq!(allocate_load(&m, 3.8, 0.95).unwrap(), 3.77);
        assert_eq!(
            allocate_load(&DemandModel::Normal { mean: 4.0, sd: 0.3 }, 3.8, 0.95).unwrap(),
            3.8
        );
        assert_eq!(
            allocate_load(&DemandModel::Deterministic(2.0), 3.0, 0.95).unwrap(),
            2.0
        );
    }

    #[test]
    fn saving_values() {
        let p = Problem::new(datasets::fictitious()).unwrap();
        assert_eq!(insertion_saving(&p, 2, 3, true, 0.0, 1.0), 126.0);
        assert_eq!(insertion_saving(&p, 0, 1, true, 0.0, 1.0), 56.0);
        assert_eq!(insertion_interest(&p, &[3.8], &[], 3), 0.0);
    }

    #[test]
    fn one_customer() {
        let mut inst = datasets::fictitious();
        inst.customers.truncate(1);
        inst.customers[0].orders[0].demand = DemandModel::Deterministic(2.0);
        let p = Problem::new(inst).unwrap();
        let s = construct(&p, 1.0);
        assert_eq!(s.routes.len(), 1);
        assert_eq!(s.routes[0].visits, vec![0]);
    }
}

//! Iterated tabu search.
//!
//! Each tabu run explores κ-exchanges between a few routes, always moving to
//! the best admissible neighbour and forbidding moved replicas for `tenure`
//! iterations. A run stops after three iterations that fail to beat its best
//! solution. Between runs the incumbent is partly destroyed and rebuilt by
//! regret insertion; 2-opt polishes the visiting order after each phase.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constructive::construct;
use crate::evaluation::{
    evaluate, pair_recourse, route_expected_recourse, visits_fixed_distance, weighted, SearchKey,
};
use crate::loading::reoptimize_compartments;
use crate::model::{check_feasibility, Fleet, ModelError, Problem, Route, Solution};

const NON_IMPROVING_LIMIT: usize = 3;
/// Greedy regret repair tends to rebuild what a small destroy removed;
/// a fifth of the replicas is enough to move between basins.
const DEFAULT_DESTROY_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search parameter: {0}")]
    BadParam(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub lambda: f64,
    /// Routes taking part in each tabu iteration.
    pub sigma: usize,
    /// Replicas removed per perturbation; `None` means `max(3, ⌈0.2·|N*|⌉)`.
    pub destroy_size: Option<usize>,
    pub kappa: usize,
    pub max_iter: usize,
    pub perturbations: usize,
    pub tenure: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            lambda: 1.0,
            sigma: 3,
            destroy_size: None,
            kappa: 1,
            max_iter: 5000,
            perturbations: 20,
            tenure: 3,
            seed: 0,
            time_limit: None,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.sigma < 2 {
            return Err(SearchError::BadParam("sigma must be at least 2"));
        }
        if self.kappa < 1 {
            return Err(SearchError::BadParam("kappa must be at least 1"));
        }
        if self.max_iter < 1 {
            return Err(SearchError::BadParam("max-iter must be at least 1"));
        }
        if self.tenure < 1 {
            return Err(SearchError::BadParam("tenure must be at least 1"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SearchError::BadParam(
                "lambda must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Replicas removed per perturbation: a fifth of them unless set.
    pub fn destroy_count(&self, replicas: usize) -> usize {
        self.destroy_size
            .unwrap_or_else(|| 3.max((replicas as f64 * DEFAULT_DESTROY_FRACTION).ceil() as usize))
    }
}

/// Callbacks fired while searching; used by tests and verbose front ends.
#[derive(Debug)]
pub enum SearchEvent<'a> {
    TabuStart {
        run: usize,
    },
    Moved {
        run: usize,
        iteration: usize,
        moved: &'a [usize],
        solution: &'a Solution,
    },
    Perturbed {
        round: usize,
        solution: &'a Solution,
    },
    NewBest {
        key: SearchKey,
        solution: &'a Solution,
    },
}

/// Replicas barred from moving until the recorded iteration has passed.
#[derive(Debug, Clone, Default)]
pub struct TabuList {
    until: Vec<(usize, usize)>,
}

impl TabuList {
    pub fn add(&mut self, replica: usize, iteration: usize, tenure: usize) {
        self.until.retain(|&(r, _)| r != replica);
        self.until.push((replica, iteration + tenure));
    }

    pub fn is_tabu(&self, replica: usize, iteration: usize) -> bool {
        self.until
            .iter()
            .any(|&(r, u)| r == replica && iteration <= u)
    }

    /// Drop entries whose tenure has run out, oldest first.
    pub fn expire(&mut self, iteration: usize) {
        while let Some(&(_, u)) = self.until.first() {
            if u < iteration {
                self.until.remove(0);
            } else {
                break;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.until.len()
    }

    pub fn is_empty(&self) -> bool {
        self.until.is_empty()
    }
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn derived_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed) ^ a) ^ b)
}

/// Cached aggregate values of a solution for fast neighbour scoring.
#[derive(Debug, Clone)]
struct State<'a> {
    problem: &'a Problem,
    sol: Solution,
    fixed: Vec<f64>,
    delivered: Vec<f64>,
    served: Vec<u32>,
    total_fixed: f64,
    total_recourse: f64,
    total_load: f64,
    key: SearchKey,
}

impl<'a> State<'a> {
    fn new(problem: &'a Problem, mut sol: Solution) -> Self {
        sol.routes.retain(|r| !r.visits.is_empty());
        let e = evaluate(problem, &sol);
        let mut delivered = vec![0.0; problem.n_pairs()];
        for r in &sol.routes {
            for a in &r.assignments {
                delivered[problem.replica(a.replica).pair] += a.load;
            }
        }
        State {
            problem,
            fixed: e.per_route.iter().map(|r| r.fixed).collect(),
            served: sol.served_per_pair(problem),
            delivered,
            total_fixed: e.fixed_distance,
            total_recourse: e.expected_recourse,
            total_load: e.total_load,
            key: e.key(),
            sol,
        }
    }

    /// Key after replacing the listed routes (same served set).
    fn key_with(&self, changes: &[(usize, &Route)]) -> SearchKey {
        let p = self.problem;
        let mut fixed = self.total_fixed;
        let mut load = self.total_load;
        let mut dpair: Vec<(usize, f64)> = Vec::new();
        let mut bump = |pair: usize, d: f64| match dpair.iter_mut().find(|x| x.0 == pair) {
            Some(s) => s.1 += d,
            None => dpair.push((pair, d)),
        };
        for &(ri, new) in changes {
            let old = &self.sol.routes[ri];
            fixed += visits_fixed_distance(p, &new.visits) - self.fixed[ri];
            for a in &old.assignments {
                load -= a.load;
                bump(p.replica(a.replica).pair, -a.load);
            }
            for a in &new.assignments {
                load += a.load;
                bump(p.replica(a.replica).pair, a.load);
            }
        }
        let mut recourse = self.total_recourse;
        for (pair, d) in dpair {
            let before = self.delivered[pair];
            // A pair nobody visited yet carried no recourse term.
            let old = if self.served[pair] > 0 {
                pair_recourse(p, pair, before)
            } else {
                0.0
            };
            recourse += pair_recourse(p, pair, before + d) - old;
        }
        SearchKey {
            missing: self.key.missing,
            value: weighted(p.instance.omega, fixed + recourse, load),
        }
    }
}

/// Cheapest place to insert `v` into `visits` by fixed distance.
pub fn best_position(problem: &Problem, visits: &[usize], v: usize) -> (usize, f64) {
    let inst = &problem.instance;
    let o = problem.origin(v);
    let mut best = (0, f64::INFINITY);
    for pos in 0..=visits.len() {
        let a = if pos == 0 {
            0
        } else {
            problem.origin(visits[pos - 1])
        };
        let b = if pos == visits.len() {
            0
        } else {
            problem.origin(visits[pos])
        };
        let delta = inst.d(a, o) + inst.d(o, b) - inst.d(a, b);
        if delta < best.1 - 1e-12 {
            best = (pos, delta);
        }
    }
    best
}

/// Route subset selection: uniformly random, or a random route plus the
/// routes holding the nearest outside customers of its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Random,
    Nearest,
}

pub fn select_routes<R: Rng>(
    problem: &Problem,
    solution: &Solution,
    sigma: usize,
    mode: SelectionMode,
    rng: &mut R,
) -> Vec<usize> {
    let n = solution.routes.len();
    if n <= sigma {
        return (0..n).collect();
    }
    match mode {
        SelectionMode::Random => {
            let mut idx = rand::seq::index::sample(rng, n, sigma).into_vec();
            idx.sort_unstable();
            idx
        }
        SelectionMode::Nearest => {
            let base = rng.gen_range(0..n);
            let mut route_of = vec![usize::MAX; problem.n_replicas()];
            for (ri, r) in solution.routes.iter().enumerate() {
                for &v in &r.visits {
                    route_of[v] = ri;
                }
            }
            // (distance, route) of the nearest outside replica per member.
            let mut near: Vec<(f64, usize)> = Vec::new();
            for &m in &solution.routes[base].visits {
                let mut best: Option<(f64, usize)> = None;
                for (w, &ri) in route_of.iter().enumerate() {
                    if ri == usize::MAX || ri == base {
                        continue;
                    }
                    let d = problem.rd(m, w);
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, ri));
                    }
                }
                near.extend(best);
            }
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut out = vec![base];
            for (_, ri) in near {
                if out.len() >= sigma {
                    break;
                }
                if !out.contains(&ri) {
                    out.push(ri);
                }
            }
            out.sort_unstable();
            out
        }
    }
}

/// Index subsets of sizes `0..=k` of `0..n`, in lexicographic order by size.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..k.min(n) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&x| x + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Structural moves between routes of `len_a` and `len_b` visits: position
/// sets leaving each route, at most `kappa` per side, not both empty.
pub fn exchange_moves(len_a: usize, len_b: usize, kappa: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let sa = subsets(len_a, kappa);
    let sb = subsets(len_b, kappa);
    let mut out = Vec::new();
    for a in &sa {
        for b in &sb {
            if !a.is_empty() || !b.is_empty() {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// A feasible neighbour of two routes. An empty route means "delete".
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub route_a: Route,
    pub route_b: Route,
    pub moved: Vec<usize>,
}

fn relocate_random<R: Rng>(problem: &Problem, visits: &mut Vec<usize>, rng: &mut R) {
    if visits.len() < 2 {
        return;
    }
    let moves = rng.gen_range(0..=visits.len());
    for _ in 0..moves {
        let i = rng.gen_range(0..visits.len());
        let v = visits.remove(i);
        let (pos, _) = best_position(problem, visits, v);
        visits.insert(pos, v);
    }
}

fn route_duration_ok(
    problem: &Problem,
    solution: &Solution,
    skip: &[usize],
    route: &Route,
) -> bool {
    let Some(budget) = problem.instance.max_route_minutes else {
        return true;
    };
    let mut used =
        visits_fixed_distance(problem, &route.visits) + route_expected_recourse(problem, route);
    if let Fleet::Limited { multi_route: true } = problem.instance.fleet {
        for (ri, r) in solution.routes.iter().enumerate() {
            if r.truck == route.truck && !skip.contains(&ri) {
                used +=
                    visits_fixed_distance(problem, &r.visits) + route_expected_recourse(problem, r);
            }
        }
    }
    used <= budget + 1e-9 * budget
}

fn finish_route(
    problem: &Problem,
    solution: &Solution,
    skip: &[usize],
    mut route: Route,
    served: &[u32],
) -> Option<Route> {
    if route
        .visits
        .iter()
        .any(|&v| !problem.can_serve(route.truck, v))
    {
        return None;
    }
    if !reoptimize_compartments(problem, &mut route, served) {
        return None;
    }
    if !route.visits.is_empty() && !route_duration_ok(problem, solution, skip, &route) {
        return None;
    }
    Some(route)
}

/// All admissible κ-exchanges between routes `a` and `b`.
pub fn kappa_exchanges(
    problem: &Problem,
    solution: &Solution,
    a: usize,
    b: usize,
    kappa: usize,
    forbidden: &dyn Fn(usize) -> bool,
    seed: u64,
) -> Vec<Exchange> {
    let served = solution.served_per_pair(problem);
    let ra = &solution.routes[a];
    let rb = &solution.routes[b];
    let mut out = Vec::new();
    for (idx, (ma, mb)) in exchange_moves(ra.visits.len(), rb.visits.len(), kappa)
        .into_iter()
        .enumerate()
    {
        let out_a: Vec<usize> = ma.iter().map(|&i| ra.visits[i]).collect();
        let out_b: Vec<usize> = mb.iter().map(|&i| rb.visits[i]).collect();
        if out_a.iter().chain(&out_b).any(|&v| forbidden(v)) {
            continue;
        }
        if out_a.iter().any(|&v| !problem.can_serve(rb.truck, v))
            || out_b.iter().any(|&v| !problem.can_serve(ra.truck, v))
        {
            continue;
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(derived_seed(seed, a as u64 * 7919 + b as u64, idx as u64));
        let build = |base: &Route, leave: &[usize], arrive: &[usize], rng: &mut ChaCha8Rng| {
            let mut visits: Vec<usize> = base
                .visits
                .iter()
                .copied()
                .filter(|v| !leave.contains(v))
                .collect();
            for &v in arrive {
                let (pos, _) = best_position(problem, &visits, v);
                visits.insert(pos, v);
            }
            relocate_random(problem, &mut visits, rng);
            let mut r = Route::new(base.truck);
            r.visits = visits;
            r
        };
        let new_a = build(ra, &out_a, &out_b, &mut rng);
        let new_b = build(rb, &out_b, &out_a, &mut rng);
        let skip = [a, b];
        let Some(new_a) = finish_route(problem, solution, &skip, new_a, &served) else {
            continue;
        };
        let Some(new_b) = finish_route(problem, solution, &skip, new_b, &served) else {
            continue;
        };
        let mut moved = out_a;
        moved.extend(out_b);
        out.push(Exchange {
            route_a: new_a,
            route_b: new_b,
            moved,
        });
    }
    out
}

/// First-improvement 2-opt on the visiting order; compartments are kept.
pub fn two_opt(problem: &Problem, route: &Route) -> Route {
    let mut visits = route.visits.clone();
    let n = visits.len();
    if n < 3 {
        return route.clone();
    }
    let mut current = visits_fixed_distance(problem, &visits);
    'outer: loop {
        for i in 0..n - 1 {
            for j in i + 1..n {
                visits[i..=j].reverse();
                let cost = visits_fixed_distance(problem, &visits);
                if cost < current - 1e-9 * current.max(1.0) {
                    current = cost;
                    continue 'outer;
                }
                visits[i..=j].reverse();
            }
        }
        break;
    }
    Route {
        truck: route.truck,
        visits,
        assignments: route.assignments.clone(),
    }
}

fn two_opt_all(problem: &Problem, solution: &mut Solution) {
    for r in &mut solution.routes {
        *r = two_opt(problem, r);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DestroyOperator {
    Random,
    Shaw,
    Worst,
    Hybrid,
}

impl DestroyOperator {
    pub const ALL: [DestroyOperator; 4] = [
        DestroyOperator::Random,
        DestroyOperator::Shaw,
        DestroyOperator::Worst,
        DestroyOperator::Hybrid,
    ];
}

/// On-route cost of each served replica: its detour plus its share of
/// expected recourse.
fn removal_costs(problem: &Problem, solution: &Solution) -> Vec<(f64, usize)> {
    let inst = &problem.instance;
    let mut delivered = vec![0.0; problem.n_pairs()];
    for r in &solution.routes {
        for a in &r.assignments {
            delivered[problem.replica(a.replica).pair] += a.load;
        }
    }
    let mut out = Vec::new();
    for r in &solution.routes {
        for (i, &v) in r.visits.iter().enumerate() {
            let o = problem.origin(v);
            let pred = if i == 0 {
                0
            } else {
                problem.origin(r.visits[i - 1])
            };
            let succ = r.visits.get(i + 1).map_or(0, |&w| problem.origin(w));
            let pair = problem.replica(v).pair;
            let c =
                inst.d(pred, o) + inst.d(o, succ) + pair_recourse(problem, pair, delivered[pair]);
            out.push((c, v));
        }
    }
    out
}

fn nearest_served(problem: &Problem, served: &[usize], seed: usize, count: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = served
        .iter()
        .filter(|&&v| v != seed)
        .map(|&v| (problem.rd(seed, v), v))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(count).map(|x| x.1).collect()
}

/// Remove `s` served replicas. Returns the partial solution (routes left
/// empty are deleted) and the removed replicas.
pub fn destroy<R: Rng>(
    problem: &Problem,
    solution: &Solution,
    s: usize,
    op: DestroyOperator,
    rng: &mut R,
) -> (Solution, Vec<usize>) {
    let served: Vec<usize> = solution
        .routes
        .iter()
        .flat_map(|r| r.visits.iter().copied())
        .collect();
    let s = s.min(served.len());
    let removed: Vec<usize> = if s == 0 {
        Vec::new()
    } else {
        match op {
            DestroyOperator::Random => served.choose_multiple(rng, s).copied().collect(),
            DestroyOperator::Shaw => {
                let seed = *served.choose(rng).expect("non-empty");
                let mut out = vec![seed];
                out.extend(nearest_served(problem, &served, seed, s - 1));
                out
            }
            DestroyOperator::Worst | DestroyOperator::Hybrid => {
                let mut costs = removal_costs(problem, solution);
                costs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                if op == DestroyOperator::Worst {
                    costs.into_iter().take(s).map(|x| x.1).collect()
                } else {
                    let seed = costs[0].1;
                    let mut out = vec![seed];
                    out.extend(nearest_served(problem, &served, seed, s - 1));
                    out
                }
            }
        }
    };
    let mut partial = solution.clone();
    for r in &mut partial.routes {
        r.visits.retain(|v| !removed.contains(v));
        r.assignments.retain(|a| !removed.contains(&a.replica));
    }
    partial.routes.retain(|r| !r.visits.is_empty());
    (partial, removed)
}

fn fleet_new_route_trucks(problem: &Problem, solution: &Solution) -> Vec<usize> {
    let inst = &problem.instance;
    match inst.fleet {
        Fleet::Unbounded => (0..inst.trucks.len()).collect(),
        Fleet::Limited { multi_route } => (0..inst.trucks.len())
            .filter(|&k| multi_route || !solution.routes.iter().any(|r| r.truck == k))
            .collect(),
    }
}

fn covers_mandatory(problem: &Problem, served: &[u32], v: usize) -> bool {
    match problem.instance.fleet {
        Fleet::Unbounded => true,
        Fleet::Limited { .. } => {
            let pair = problem.replica(v).pair;
            problem.replicas.pairs[pair].urgent && served[pair] == 0
        }
    }
}

/// Regret insertion of `removed` and every replica left unserved.
pub fn repair(problem: &Problem, partial: &Solution, removed: &[usize]) -> Solution {
    let mut sol = partial.clone();
    let mut pool: Vec<usize> = removed.to_vec();
    pool.extend(sol.unserved.iter().copied());
    pool.sort_unstable();
    pool.dedup();
    sol.unserved.clear();
    let omega = problem.instance.omega;

    loop {
        let state = State::new(problem, sol.clone());
        // (mandatory, regret, cost, replica, option)
        let mut choice: Option<(bool, f64, f64, usize, (Option<usize>, Route))> = None;
        for &v in &pool {
            let mut served = state.served.clone();
            served[problem.replica(v).pair] += 1;
            let mandatory = covers_mandatory(problem, &state.served, v);
            let mut options: Vec<(f64, Option<usize>, Route)> = Vec::new();
            for (ri, r) in sol.routes.iter().enumerate() {
                if !problem.can_serve(r.truck, v) {
                    continue;
                }
                let (pos, _) = best_position(problem, &r.visits, v);
                let mut cand = r.clone();
                cand.visits.insert(pos, v);
                let Some(cand) = finish_route(problem, &sol, &[ri], cand, &served) else {
                    continue;
                };
                let key = state.key_with(&[(ri, &cand)]);
                options.push((key.value - state.key.value, Some(ri), cand));
            }
            for k in fleet_new_route_trucks(problem, &sol) {
                if !problem.can_serve(k, v) {
                    continue;
                }
                let mut cand = Route::new(k);
                cand.visits.push(v);
                let Some(cand) = finish_route(problem, &sol, &[], cand, &served) else {
                    continue;
                };
                let fixed = visits_fixed_distance(problem, &cand.visits);
                let pair = problem.replica(v).pair;
                let before = state.delivered[pair];
                let rec = pair_recourse(problem, pair, before + cand.load());
                let rec_before = if state.served[pair] > 0 {
                    pair_recourse(problem, pair, before)
                } else {
                    0.0
                };
                let delta = weighted(omega, fixed + rec - rec_before, cand.load());
                options.push((delta, None, cand));
            }
            if options.is_empty() {
                continue;
            }
            options.sort_by(|a, b| a.0.total_cmp(&b.0));
            let best_cost = options[0].0;
            if !mandatory && best_cost >= 0.0 {
                continue;
            }
            let regret = if options.len() == 1 {
                f64::INFINITY
            } else {
                options[1].0 - best_cost
            };
            let (cost, at, route) = options.swap_remove(0);
            let better = match &choice {
                None => true,
                Some((m, rg, c, id, _)) => {
                    (mandatory && !m)
                        || (mandatory == *m
                            && (regret > *rg
                                || (regret == *rg && (cost < *c || (cost == *c && v < *id)))))
                }
            };
            if better {
                choice = Some((mandatory, regret, cost, v, (at, route)));
            }
        }
        let Some((_, _, _, v, (at, route))) = choice else {
            break;
        };
        match at {
            Some(ri) => sol.routes[ri] = route,
            None => sol.routes.push(route),
        }
        pool.retain(|&w| w != v);
    }
    sol.unserved = pool;
    sol.unserved.sort_unstable();
    let served = sol.served_per_pair(problem);
    for r in &mut sol.routes {
        let mut copy = r.clone();
        if reoptimize_compartments(problem, &mut copy, &served) {
            *r = copy;
        }
    }
    sol
}

/// Result of one tabu run.
#[derive(Debug, Clone)]
pub struct TabuOutcome {
    pub solution: Solution,
    pub key: SearchKey,
    pub iterations: usize,
}

struct Ctx<'p, 'o> {
    problem: &'p Problem,
    params: &'p SearchParams,
    deadline: Option<Instant>,
    observer: &'o mut dyn FnMut(&SearchEvent),
    run: usize,
}

impl Ctx<'_, '_> {
    fn out_of_time(&self) -> bool {
        self.deadline.map_or(false, |d| Instant::now() >= d)
    }
}

fn tabu_run<R: Rng>(ctx: &mut Ctx, start: Solution, rng: &mut R) -> TabuOutcome {
    let problem = ctx.problem;
    let params = ctx.params;
    (ctx.observer)(&SearchEvent::TabuStart { run: ctx.run });
    let mut current = State::new(problem, start);
    let mut best = (current.sol.clone(), current.key);
    let mut tabu = TabuList::default();
    let mut non_improving = 0;
    let mut iterations = 0;
    for it in 1..=params.max_iter {
        if current.sol.routes.len() < 2 || ctx.out_of_time() {
            break;
        }
        iterations = it;
        tabu.expire(it);
        let mode = if rng.gen_bool(0.5) {
            SelectionMode::Random
        } else {
            SelectionMode::Nearest
        };
        let selected = select_routes(problem, &current.sol, params.sigma, mode, rng);
        let seed = rng.gen::<u64>();
        let forbidden = |v: usize| tabu.is_tabu(v, it);
        let mut chosen: Option<(SearchKey, usize, usize, Exchange)> = None;
        for (i, &a) in selected.iter().enumerate() {
            for &b in &selected[i + 1..] {
                for ex in
                    kappa_exchanges(problem, &current.sol, a, b, params.kappa, &forbidden, seed)
                {
                    let key = current.key_with(&[(a, &ex.route_a), (b, &ex.route_b)]);
                    if chosen.as_ref().map_or(true, |c| key.better_than(&c.0)) {
                        chosen = Some((key, a, b, ex));
                    }
                }
            }
        }
        match chosen {
            None => {
                current = State::new(problem, best.0.clone());
                non_improving += 1;
            }
            Some((_, a, b, ex)) => {
                let mut sol = current.sol.clone();
                sol.routes[a] = ex.route_a;
                sol.routes[b] = ex.route_b;
                for &v in &ex.moved {
                    tabu.add(v, it, params.tenure);
                }
                current = State::new(problem, sol);
                (ctx.observer)(&SearchEvent::Moved {
                    run: ctx.run,
                    iteration: it,
                    moved: &ex.moved,
                    solution: &current.sol,
                });
                if current.key.better_than(&best.1) {
                    best = (current.sol.clone(), current.key);
                } else {
                    non_improving += 1;
                }
            }
        }
        if non_improving >= NON_IMPROVING_LIMIT {
            break;
        }
    }
    TabuOutcome {
        solution: best.0,
        key: best.1,
        iterations,
    }
}

/// One tabu run from `start` with its own RNG.
pub fn tabu_search(
    problem: &Problem,
    start: Solution,
    params: &SearchParams,
    seed: u64,
) -> TabuOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noop = |_: &SearchEvent| {};
    let mut ctx = Ctx {
        problem,
        params,
        deadline: None,
        observer: &mut noop,
        run: 0,
    };
    tabu_run(&mut ctx, start, &mut rng)
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub solution: Solution,
    pub key: SearchKey,
    pub construct_key: SearchKey,
    pub tabu_runs: usize,
    pub tabu_iterations: usize,
    pub elapsed: Duration,
}

pub fn its(problem: &Problem, params: &SearchParams) -> Result<SearchOutcome, SearchError> {
    its_observed(problem, params, &mut |_| {})
}

/// Construction, then alternating tabu runs and destroy/repair rounds.
pub fn its_observed(
    problem: &Problem,
    params: &SearchParams,
    observer: &mut dyn FnMut(&SearchEvent),
) -> Result<SearchOutcome, SearchError> {
    params.validate()?;
    problem.instance.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let initial = construct(problem, params.lambda);
    let construct_key = evaluate(problem, &initial).key();
    let mut best = (initial.clone(), construct_key);
    observer(&SearchEvent::NewBest {
        key: best.1,
        solution: &best.0,
    });
    let s = params.destroy_count(problem.n_replicas());
    let mut ctx = Ctx {
        problem,
        params,
        deadline: params.time_limit.map(|t| started + t),
        observer,
        run: 0,
    };
    let mut current = initial;
    let mut total_iterations = 0;
    let mut round = 0;
    loop {
        ctx.run += 1;
        let out = tabu_run(&mut ctx, current, &mut rng);
        total_iterations += out.iterations;
        let mut sol = out.solution;
        two_opt_all(problem, &mut sol);
        let key = evaluate(problem, &sol).key();
        if key.better_than(&best.1) {
            best = (sol.clone(), key);
            (ctx.observer)(&SearchEvent::NewBest {
                key,
                solution: &best.0,
            });
        }
        if round >= params.perturbations || ctx.out_of_time() {
            break;
        }
        round += 1;
        let op = *DestroyOperator::ALL.choose(&mut rng).expect("operators");
        let (partial, removed) = destroy(problem, &sol, s, op, &mut rng);
        let mut next = repair(problem, &partial, &removed);
        two_opt_all(problem, &mut next);
        if !check_feasibility(problem, &next).is_feasible() {
            next = sol;
        }
        (ctx.observer)(&SearchEvent::Perturbed {
            round,
            solution: &next,
        });
        let key = evaluate(problem, &next).key();
        if key.better_than(&best.1) {
            best = (next.clone(), key);
            (ctx.observer)(&SearchEvent::NewBest {
                key,
                solution: &best.0,
            });
        }
        current = next;
    }
    Ok(SearchOutcome {
        solution: best.0,
        key: best.1,
        construct_key,
        tabu_runs: ctx.run,
        tabu_iterations: total_iterations,
        elapsed: started.elapsed(),
    })
}

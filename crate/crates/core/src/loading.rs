//! Compartment assignment and load sizing for a single route.
//!
//! A replica wants its own target when every replica of its pair is on the
//! road; when some are left unserved, the served ones share the pair target.
//! Loads never exceed the compartment, and if the truck's legal load binds,
//! mass is taken away where it raises the expected recourse the least.

use crate::evaluation::pair_recourse;
use crate::model::{Assignment, CompartmentPolicy, Problem, Route};

const EPS: f64 = 1e-9;
/// Above this many compartments the exact enumerations give way to greedy.
const MAX_EXHAUSTIVE_COMPARTMENTS: usize = 7;
const MAX_DP_COMPARTMENTS: usize = 16;

/// Desired load of `replica` when `served` replicas of its pair are routed.
pub fn replica_share(problem: &Problem, replica: usize, served: u32) -> f64 {
    let rep = problem.replica(replica);
    let pair = &problem.replicas.pairs[rep.pair];
    if served as usize >= pair.replica_count() || served == 0 {
        rep.target
    } else {
        // Rounded down so the shares never add up past the pair target.
        (pair.target / served as f64 * 100.0 + 1e-9).floor() / 100.0
    }
}

fn share_of(problem: &Problem, replica: usize, served: &[u32]) -> f64 {
    replica_share(problem, replica, served[problem.replica(replica).pair])
}

/// Recompute loads for the compartments already chosen on `route`.
pub fn derive_loads(problem: &Problem, route: &mut Route, served: &[u32]) -> bool {
    match problem.instance.policy {
        CompartmentPolicy::Exclusive => {
            let caps = &problem.truck(route.truck).compartments;
            let mut order: Vec<usize> = Vec::new();
            for a in &route.assignments {
                if !order.contains(&a.replica) {
                    order.push(a.replica);
                }
            }
            for v in order {
                let mut want = share_of(problem, v, served);
                for a in route.assignments.iter_mut().filter(|a| a.replica == v) {
                    a.load = want.min(caps[a.compartment]).max(0.0);
                    want -= a.load;
                }
            }
            trim_to_max_load(problem, route);
            true
        }
        CompartmentPolicy::SharedByFeed => pack_shared(problem, route, served),
    }
}

/// Route-local mass per pair, as `(pair, delivered)`.
fn route_pairs(problem: &Problem, route: &Route) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for a in &route.assignments {
        let pair = problem.replica(a.replica).pair;
        match out.iter_mut().find(|(p, _)| *p == pair) {
            Some(slot) => slot.1 += a.load,
            None => out.push((pair, a.load)),
        }
    }
    out
}

/// Remove mass until the route respects the truck's maximum load.
pub fn trim_to_max_load(problem: &Problem, route: &mut Route) {
    let max_load = problem.truck(route.truck).max_load;
    let mut excess = route.load() - max_load;
    while excess > EPS * max_load.max(1.0) {
        let pairs = route_pairs(problem, route);
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, a) in route.assignments.iter().enumerate() {
            if a.load <= 0.0 {
                continue;
            }
            let pair = problem.replica(a.replica).pair;
            let d = pairs.iter().find(|(p, _)| *p == pair).map_or(0.0, |x| x.1);
            let cut = excess.min(a.load);
            let cost = pair_recourse(problem, pair, d - cut) - pair_recourse(problem, pair, d);
            let better = match best {
                None => true,
                Some((c, r, _)) => cost < c - 1e-12 || ((cost - c).abs() <= 1e-12 && a.replica < r),
            };
            if better {
                best = Some((cost, a.replica, i));
            }
        }
        let Some((_, _, i)) = best else { break };
        let cut = excess.min(route.assignments[i].load);
        route.assignments[i].load -= cut;
        excess -= cut;
    }
}

/// Choose compartments (and loads) for the replicas visited by `route`.
/// Returns false when the visits cannot be housed; the route is then left
/// untouched.
pub fn reoptimize_compartments(problem: &Problem, route: &mut Route, served: &[u32]) -> bool {
    match problem.instance.policy {
        CompartmentPolicy::Exclusive => reoptimize_exclusive(problem, route, served),
        CompartmentPolicy::SharedByFeed => pack_shared(problem, route, served),
    }
}

struct Ctx<'a> {
    problem: &'a Problem,
    visits: &'a [usize],
    shares: Vec<f64>,
    caps: &'a [f64],
    omega: f64,
}

impl Ctx<'_> {
    /// Exact route-local value of a full map, loads trimmed to the max load.
    fn value(&self, map: &[usize], max_load: f64) -> (f64, f64, Vec<f64>) {
        let mut loads: Vec<f64> = map
            .iter()
            .zip(&self.shares)
            .map(|(&h, &s)| s.min(self.caps[h]))
            .collect();
        let pairs: Vec<usize> = self
            .visits
            .iter()
            .map(|&v| self.problem.replica(v).pair)
            .collect();
        let mut excess = loads.iter().sum::<f64>() - max_load;
        let delivered = |loads: &[f64], pair: usize| -> f64 {
            pairs
                .iter()
                .zip(loads)
                .filter(|(p, _)| **p == pair)
                .map(|(_, l)| l)
                .sum()
        };
        while excess > EPS * max_load.max(1.0) {
            let mut best: Option<(f64, usize)> = None;
            for i in 0..loads.len() {
                if loads[i] <= 0.0 {
                    continue;
                }
                let d = delivered(&loads, pairs[i]);
                let cut = excess.min(loads[i]);
                let cost = pair_recourse(self.problem, pairs[i], d - cut)
                    - pair_recourse(self.problem, pairs[i], d);
                let better = match best {
                    None => true,
                    Some((c, j)) => {
                        cost < c - 1e-12
                            || ((cost - c).abs() <= 1e-12 && self.visits[i] < self.visits[j])
                    }
                };
                if better {
                    best = Some((cost, i));
                }
            }
            let Some((_, i)) = best else { break };
            let cut = excess.min(loads[i]);
            loads[i] -= cut;
            excess -= cut;
        }
        let mut seen: Vec<usize> = Vec::new();
        let mut recourse = 0.0;
        for &p in &pairs {
            if !seen.contains(&p) {
                seen.push(p);
                recourse += pair_recourse(self.problem, p, delivered(&loads, p));
            }
        }
        let load: f64 = loads.iter().sum();
        (
            self.omega * recourse - (1.0 - self.omega) * load,
            load,
            loads,
        )
    }
}

fn better(value: f64, load: f64, best_value: f64, best_load: f64) -> bool {
    let tol = 1e-9 * best_value.abs().max(1.0);
    value < best_value - tol || (value <= best_value + tol && load > best_load + 1e-9)
}

fn reoptimize_exclusive(problem: &Problem, route: &mut Route, served: &[u32]) -> bool {
    let truck = problem.truck(route.truck);
    let caps = &truck.compartments;
    let h = caps.len();
    let n = route.visits.len();
    if n > h {
        return false;
    }
    if n == 0 {
        route.assignments.clear();
        return true;
    }
    let ctx = Ctx {
        problem,
        visits: &route.visits,
        shares: route
            .visits
            .iter()
            .map(|&v| share_of(problem, v, served))
            .collect(),
        caps,
        omega: problem.instance.omega,
    };
    let may_trim = ctx.shares.iter().sum::<f64>() > truck.max_load + EPS
        && truck.capacity_sum() > truck.max_load + EPS;
    let map = if may_trim && h <= MAX_EXHAUSTIVE_COMPARTMENTS {
        exhaustive_map(&ctx, truck.max_load)
    } else if h <= MAX_DP_COMPARTMENTS {
        dp_map(&ctx)
    } else {
        greedy_map(&ctx)
    };
    let (_, _, loads) = ctx.value(&map, truck.max_load);
    route.assignments = route
        .visits
        .iter()
        .zip(map.iter().zip(loads))
        .map(|(&replica, (&compartment, load))| Assignment {
            replica,
            compartment,
            load,
        })
        .collect();
    true
}

fn exhaustive_map(ctx: &Ctx, max_load: f64) -> Vec<usize> {
    let h = ctx.caps.len();
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut map = Vec::with_capacity(ctx.visits.len());
    let mut used = vec![false; h];
    fn rec(
        ctx: &Ctx,
        max_load: f64,
        map: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<(f64, f64, Vec<usize>)>,
    ) {
        if map.len() == ctx.visits.len() {
            let (v, l, _) = ctx.value(map, max_load);
            let take = match best {
                None => true,
                Some((bv, bl, _)) => better(v, l, *bv, *bl),
            };
            if take {
                *best = Some((v, l, map.clone()));
            }
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                map.push(c);
                rec(ctx, max_load, map, used, best);
                map.pop();
                used[c] = false;
            }
        }
    }
    rec(ctx, max_load, &mut map, &mut used, &mut best);
    best.map(|b| b.2).unwrap_or_default()
}

/// Separable cost of putting visit `i` into a compartment of size `cap`;
/// replicas of one pair on the route are assumed to be loaded alike.
fn separable_cost(ctx: &Ctx, i: usize, cap: f64) -> (f64, f64) {
    let v = ctx.visits[i];
    let pair = ctx.problem.replica(v).pair;
    let k = ctx
        .visits
        .iter()
        .filter(|&&w| ctx.problem.replica(w).pair == pair)
        .count() as f64;
    let load = ctx.shares[i].min(cap);
    let rec = pair_recourse(ctx.problem, pair, k * load) / k;
    (ctx.omega * rec - (1.0 - ctx.omega) * load, load)
}

fn dp_map(ctx: &Ctx) -> Vec<usize> {
    let n = ctx.visits.len();
    let h = ctx.caps.len();
    let cost: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| {
            ctx.caps
                .iter()
                .map(|&c| separable_cost(ctx, i, c))
                .collect()
        })
        .collect();
    let states = 1usize << h;
    // dp[i][mask]: best (value, load) for the first i visits using `mask`.
    let mut dp = vec![vec![(f64::INFINITY, 0.0); states]; n + 1];
    let mut from = vec![vec![usize::MAX; states]; n + 1];
    dp[0][0] = (0.0, 0.0);
    for i in 0..n {
        for mask in 0..states {
            let (v, l) = dp[i][mask];
            if !v.is_finite() {
                continue;
            }
            for c in 0..h {
                if mask & (1 << c) != 0 {
                    continue;
                }
                let next = mask | (1 << c);
                let nv = v + cost[i][c].0;
                let nl = l + cost[i][c].1;
                let (bv, bl) = dp[i + 1][next];
                if !bv.is_finite() || better(nv, nl, bv, bl) {
                    dp[i + 1][next] = (nv, nl);
                    from[i + 1][next] = c;
                }
            }
        }
    }
    let mut best_mask = usize::MAX;
    for mask in 0..states {
        let (v, l) = dp[n][mask];
        if !v.is_finite() {
            continue;
        }
        if best_mask == usize::MAX || better(v, l, dp[n][best_mask].0, dp[n][best_mask].1) {
            best_mask = mask;
        }
    }
    let mut map = vec![0; n];
    let mut mask = best_mask;
    for i in (1..=n).rev() {
        let c = from[i][mask];
        map[i - 1] = c;
        mask &= !(1 << c);
    }
    map
}

/// Urgent visits by descending share into the largest free compartments,
/// then the rest the same way.
fn greedy_map(ctx: &Ctx) -> Vec<usize> {
    let n = ctx.visits.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ua = ctx.problem.pair_of(ctx.visits[a]).urgent;
        let ub = ctx.problem.pair_of(ctx.visits[b]).urgent;
        ub.cmp(&ua)
            .then(ctx.shares[b].total_cmp(&ctx.shares[a]))
            .then(a.cmp(&b))
    });
    let mut comps: Vec<usize> = (0..ctx.caps.len()).collect();
    comps.sort_by(|&a, &b| ctx.caps[b].total_cmp(&ctx.caps[a]).then(a.cmp(&b)));
    let mut map = vec![0; n];
    for (slot, i) in order.into_iter().enumerate() {
        map[i] = comps[slot];
    }
    map
}

/// Shared compartments: each compartment gets one feed and is filled with
/// that feed's replicas in visiting order.
fn pack_shared(problem: &Problem, route: &mut Route, served: &[u32]) -> bool {
    let truck = problem.truck(route.truck);
    let caps = &truck.compartments;
    let mut feeds: Vec<usize> = Vec::new();
    let mut need: Vec<f64> = Vec::new();
    let shares: Vec<f64> = route
        .visits
        .iter()
        .map(|&v| share_of(problem, v, served))
        .collect();
    for (&v, &s) in route.visits.iter().zip(&shares) {
        let f = problem.replica(v).feed;
        match feeds.iter().position(|&x| x == f) {
            Some(i) => need[i] += s,
            None => {
                feeds.push(f);
                need.push(s);
            }
        }
    }
    let total: f64 = need.iter().sum();
    if total > truck.max_load + EPS * truck.max_load.max(1.0) {
        return false;
    }
    let Some(owner) = assign_feeds(caps, &need) else {
        return false;
    };
    let mut assignments = Vec::new();
    for (fi, &f) in feeds.iter().enumerate() {
        let comps: Vec<usize> = (0..caps.len()).filter(|&c| owner[c] == fi).collect();
        let mut ci = 0;
        let mut room = comps.first().map_or(0.0, |&c| caps[c]);
        for (&v, &s) in route.visits.iter().zip(&shares) {
            if problem.replica(v).feed != f {
                continue;
            }
            let mut left = s;
            loop {
                let put = left.min(room).max(0.0);
                if put > 0.0 || left <= EPS {
                    assignments.push(Assignment {
                        replica: v,
                        compartment: comps[ci],
                        load: put,
                    });
                }
                left -= put;
                room -= put;
                if left <= EPS {
                    break;
                }
                ci += 1;
                if ci == comps.len() {
                    // Only float noise can get here: the feed fits by construction.
                    if let Some(a) = assignments.last_mut() {
                        a.load += left;
                    }
                    ci -= 1;
                    break;
                }
                room = caps[comps[ci]];
            }
        }
    }
    route.assignments = assignments;
    true
}

/// Give every compartment to one feed so that each feed's need fits.
fn assign_feeds(caps: &[f64], need: &[f64]) -> Option<Vec<usize>> {
    let h = caps.len();
    let k = need.len();
    if k == 0 {
        return Some(vec![usize::MAX; h]);
    }
    let fits = |total: f64, cap: f64| total <= cap + EPS * cap.max(1.0);
    if k == 1 {
        return fits(need[0], caps.iter().sum()).then(|| vec![0; h]);
    }
    if k > h {
        return None;
    }
    let combos = (k as f64).powi(h as i32);
    if combos <= 200_000.0 {
        let mut owner = vec![0usize; h];
        loop {
            let mut room = vec![0.0; k];
            for c in 0..h {
                room[owner[c]] += caps[c];
            }
            if (0..k).all(|f| fits(need[f], room[f])) {
                return Some(owner);
            }
            let mut i = 0;
            loop {
                if i == h {
                    return None;
                }
                owner[i] += 1;
                if owner[i] < k {
                    break;
                }
                owner[i] = 0;
                i += 1;
            }
        }
    }
    // Largest compartment to the feed with the largest uncovered need.
    let mut comps: Vec<usize> = (0..h).collect();
    comps.sort_by(|&a, &b| caps[b].total_cmp(&caps[a]));
    let mut left = need.to_vec();
    let mut owner = vec![0; h];
    for c in comps {
        let f = (0..k)
            .max_by(|&a, &b| left[a].total_cmp(&left[b]))
            .unwrap_or(0);
        owner[c] = f;
        left[f] -= caps[c];
    }
    left.iter().all(|&l| l <= EPS).then_some(owner)
}

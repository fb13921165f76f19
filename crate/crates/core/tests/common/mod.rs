//! Random instances and an independent savings oracle shared by the
//! integration tests.
#![allow(dead_code)]

use mcvrpsd::model::{
    Assignment, CompartmentPolicy, Customer, Fleet, Instance, Order, Route, Truck, DEFAULT_BETA,
};
use mcvrpsd::stochastics::DemandModel;
use mcvrpsd::{Problem, Solution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn euclid(points: &[(f64, f64)]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect()
}

fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect()
}

fn demand(rng: &mut ChaCha8Rng, scale: f64) -> DemandModel {
    let mean = rng.gen_range(0.2..1.0) * scale;
    match rng.gen_range(0..3) {
        0 => DemandModel::normal(mean, mean * rng.gen_range(0.05..0.3)).unwrap(),
        1 => {
            let lo = (mean * 0.7 * 10.0).round() / 10.0;
            let hi = (mean * 1.3 * 10.0).round() / 10.0 + 0.1;
            let p = rng.gen_range(0.2..0.8);
            DemandModel::discrete(vec![(lo, p), (hi, 1.0 - p)]).unwrap()
        }
        _ => DemandModel::deterministic((mean * 100.0).round() / 100.0).unwrap(),
    }
}

/// Mixed instance: one or two feeds, normal, discrete and fixed orders,
/// some urgent, one or two truck types, unbounded fleet.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=12);
    let feeds = rng.gen_range(1..=2);
    let pts = points(&mut rng, n);
    let trucks: Vec<Truck> = (0..rng.gen_range(1..=2))
        .map(|id| {
            let caps: Vec<f64> = (0..rng.gen_range(2..=4))
                .map(|_| rng.gen_range(4..=12) as f64)
                .collect();
            let sum: f64 = caps.iter().sum();
            Truck::new(
                id,
                caps,
                if rng.gen_bool(0.5) {
                    sum
                } else {
                    (sum * 0.8).round()
                },
            )
        })
        .collect();
    let customers = (1..=n)
        .map(|id| {
            let first = rng.gen_range(0..feeds);
            let feeds_used: Vec<usize> = (0..feeds)
                .filter(|&f| f == first || rng.gen_bool(0.5))
                .collect();
            let orders = feeds_used
                .into_iter()
                .map(|feed| Order {
                    feed,
                    demand: demand(&mut rng, 10.0),
                    urgency: [0.0, 0.5, 0.95][rng.gen_range(0..3)],
                })
                .collect();
            Customer { id, orders }
        })
        .collect();
    Instance {
        name: format!("random-{seed}"),
        distance: euclid(&pts),
        customers,
        trucks,
        fleet: Fleet::Unbounded,
        policy: CompartmentPolicy::Exclusive,
        feeds,
        omega: [1.0, 0.8, 0.5][rng.gen_range(0..3)],
        max_route_minutes: None,
        beta: DEFAULT_BETA,
    }
}

/// Three to five customers with discrete or fixed orders no larger than the
/// biggest compartment, on one or two limited trucks.
pub fn tiny_discrete_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=5);
    let pts = points(&mut rng, n);
    let n_trucks = rng.gen_range(1..=2);
    let trucks: Vec<Truck> = (0..n_trucks)
        .map(|id| {
            let caps: Vec<f64> = (0..rng.gen_range(2..=4 - n_trucks + 1))
                .map(|_| rng.gen_range(4..=8) as f64)
                .collect();
            Truck::full(id, caps)
        })
        .collect();
    let cmax = trucks
        .iter()
        .flat_map(|t| t.compartments.iter().copied())
        .fold(0.0, f64::max);
    let customers = (1..=n)
        .map(|id| {
            let hi = rng.gen_range(2..=cmax as u32) as f64;
            let demand = if rng.gen_bool(0.6) {
                let lo = (hi - rng.gen_range(1..=2) as f64).max(1.0);
                let p = [0.3, 0.5, 0.7][rng.gen_range(0..3)];
                if lo < hi {
                    DemandModel::discrete(vec![(lo, p), (hi, 1.0 - p)]).unwrap()
                } else {
                    DemandModel::deterministic(hi).unwrap()
                }
            } else {
                DemandModel::deterministic(hi).unwrap()
            };
            let urgency = if rng.gen_bool(0.5) { 0.95 } else { 0.0 };
            Customer {
                id,
                orders: vec![Order {
                    feed: 0,
                    demand,
                    urgency,
                }],
            }
        })
        .collect();
    Instance {
        name: format!("tiny-{seed}"),
        distance: euclid(&pts),
        customers,
        trucks,
        fleet: Fleet::Limited { multi_route: false },
        policy: CompartmentPolicy::Exclusive,
        feeds: 1,
        omega: [1.0, 0.8, 0.5, 0.3][rng.gen_range(0..4)],
        max_route_minutes: None,
        beta: DEFAULT_BETA,
    }
}

/// Capacitated single-compartment instance: fixed demands, no urgency,
/// shared compartments, so every route is a plain capacity-bounded tour.
pub fn cvrp_instance(seed: u64) -> (Instance, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(10..=25);
    let q = 100.0;
    let pts = points(&mut rng, n);
    let demands: Vec<f64> = (0..n).map(|_| rng.gen_range(5..=40) as f64).collect();
    let customers = demands
        .iter()
        .enumerate()
        .map(|(i, &d)| Customer {
            id: i + 1,
            orders: vec![Order {
                feed: 0,
                demand: DemandModel::Deterministic(d),
                urgency: 0.0,
            }],
        })
        .collect();
    let inst = Instance {
        name: format!("cvrp-{seed}"),
        distance: euclid(&pts),
        customers,
        trucks: vec![Truck::full(0, vec![q])],
        fleet: Fleet::Unbounded,
        policy: CompartmentPolicy::SharedByFeed,
        feeds: 1,
        omega: 1.0,
        max_route_minutes: None,
        beta: DEFAULT_BETA,
    };
    (inst, demands, q)
}

/// Sequential savings on a plain capacitated instance: seed at the
/// customer farthest from the depot, grow at either end by the largest
/// saving that still fits, close the route when nothing fits.
pub fn savings_oracle(d: &[Vec<f64>], demand: &[f64], q: f64) -> Vec<Vec<usize>> {
    let n = demand.len();
    let mut open: Vec<bool> = vec![true; n + 1];
    open[0] = false;
    let mut routes = Vec::new();
    while let Some(seed) = (1..=n)
        .filter(|&c| open[c])
        .fold(None, |best: Option<usize>, c| match best {
            Some(b) if d[0][b] >= d[0][c] => Some(b),
            _ => Some(c),
        })
    {
        open[seed] = false;
        let mut route = vec![seed];
        let mut load = demand[seed - 1];
        loop {
            let (first, last) = (route[0], *route.last().unwrap());
            let mut best: Option<(f64, usize, bool)> = None;
            for c in (1..=n).filter(|&c| open[c] && load + demand[c - 1] <= q + 1e-9) {
                let app = d[last][0] + d[0][c] - d[last][c];
                let pre = d[0][first] + d[c][0] - d[c][first];
                let (s, back) = if app >= pre {
                    (app, true)
                } else {
                    (pre, false)
                };
                if best.map_or(true, |(bs, _, _)| s > bs) {
                    best = Some((s, c, back));
                }
            }
            let Some((_, c, back)) = best else { break };
            open[c] = false;
            load += demand[c - 1];
            if back {
                route.push(c);
            } else {
                route.insert(0, c);
            }
        }
        routes.push(route);
    }
    routes
}

/// One urgent normal order per customer, loads set near the middle of each
/// distribution so shortfalls are common enough to estimate tightly.
pub fn random_route(seed: u64) -> (Problem, Solution) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    let distance = euclid(&pts);
    let params: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let m = rng.gen_range(3.0..10.0);
            (m, m * rng.gen_range(0.1..0.25))
        })
        .collect();
    let customers = params
        .iter()
        .enumerate()
        .map(|(i, &(mean, sd))| Customer {
            id: i + 1,
            orders: vec![Order {
                feed: 0,
                demand: DemandModel::normal(mean, sd).unwrap(),
                urgency: 0.95,
            }],
        })
        .collect();
    let inst = Instance {
        name: format!("route-{seed}"),
        distance,
        customers,
        trucks: vec![Truck::full(0, vec![20.0; n])],
        fleet: Fleet::Limited { multi_route: false },
        policy: CompartmentPolicy::Exclusive,
        feeds: 1,
        omega: 1.0,
        max_route_minutes: None,
        beta: DEFAULT_BETA,
    };
    let p = Problem::new(inst).unwrap();
    let mut route = Route::new(0);
    for (i, &(mean, sd)) in params.iter().enumerate() {
        let v = p.replicas.pairs[i].replicas.start;
        route.visits.push(v);
        let load = ((mean + sd * rng.gen_range(-0.5..0.8)) * 100.0).round() / 100.0;
        route.assignments.push(Assignment {
            replica: v,
            compartment: i,
            load,
        });
    }
    route.visits.shuffle(&mut rng);
    (
        p,
        Solution {
            routes: vec![route],
            unserved: vec![],
        },
    )
}

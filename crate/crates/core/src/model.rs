//! Problem data, replica expansion and the solution representation.

use std::fmt;

use thiserror::Error;

use crate::stochastics::{replica_count, round2, DemandModel, StochasticsError};

pub const DEFAULT_BETA: f64 = 0.90;
pub const DEFAULT_ROUTE_MINUTES: f64 = 540.0;

/// Quantiles of order 1 do not exist for unbounded models; urgency 1 is
/// read as "as close to certain as representable".
const MAX_QUANTILE_ORDER: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("instance has no trucks")]
    NoTrucks,
    #[error("instance has no positive demand")]
    NoDemands,
    #[error("distance matrix must be square with at least two nodes")]
    BadMatrix,
    #[error("distance[{0}][{1}] = {2} is negative or not finite")]
    BadDistance(usize, usize, f64),
    #[error("distance[{0}][{0}] must be zero")]
    NonzeroDiagonal(usize),
    #[error("customer id {0} is not a node of the distance matrix")]
    UnknownCustomer(usize),
    #[error("customer {0} is listed twice")]
    DuplicateCustomer(usize),
    #[error("customer {0} orders feed {1} twice")]
    DuplicateOrder(usize, usize),
    #[error("customer {0} orders feed {1}, but only {2} feeds exist")]
    UnknownFeed(usize, usize, usize),
    #[error("urgency {0} of customer {1} is outside [0, 1]")]
    BadUrgency(f64, usize),
    #[error("omega {0} is outside [0, 1]")]
    BadOmega(f64),
    #[error("urgency threshold {0} is outside (0, 1)")]
    BadBeta(f64),
    #[error("truck {0} has no compartments or a non-positive capacity")]
    BadCompartments(usize),
    #[error("truck {0} has a non-positive maximum load")]
    BadMaxLoad(usize),
    #[error("route time budget {0} must be positive")]
    BadBudget(f64),
    #[error("feed count must be positive")]
    NoFeeds,
    #[error(transparent)]
    Stochastics(#[from] StochasticsError),
}

/// One customer's order for one feed.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub feed: usize,
    pub demand: DemandModel,
    /// `P[U = 0]`: probability that the order cannot wait.
    pub urgency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Customer {
    pub id: usize,
    pub orders: Vec<Order>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truck {
    pub id: usize,
    pub compartments: Vec<f64>,
    pub max_load: f64,
    /// Customers this truck may not serve, sorted.
    pub restricted: Vec<usize>,
}

impl Truck {
    pub fn new(id: usize, compartments: Vec<f64>, max_load: f64) -> Self {
        Truck {
            id,
            compartments,
            max_load,
            restricted: Vec::new(),
        }
    }

    /// Truck whose legal load is the sum of its compartments.
    pub fn full(id: usize, compartments: Vec<f64>) -> Self {
        let l = compartments.iter().sum();
        Truck::new(id, compartments, l)
    }

    pub fn can_serve(&self, customer: usize) -> bool {
        self.restricted.binary_search(&customer).is_err()
    }

    pub fn capacity_sum(&self) -> f64 {
        self.compartments.iter().sum()
    }

    /// Largest load the truck can carry on one route.
    pub fn effective_capacity(&self) -> f64 {
        self.max_load.min(self.capacity_sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fleet {
    /// Each listed truck exists once. Without `multi_route` it drives at
    /// most one route.
    Limited { multi_route: bool },
    /// Listed trucks are types; any number of copies may be used.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompartmentPolicy {
    /// A compartment carries the load of a single replica.
    Exclusive,
    /// A compartment carries a single feed, possibly for several customers,
    /// and a replica may be spread over several compartments.
    SharedByFeed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    /// Travel times in minutes; node 0 is the depot.
    pub distance: Vec<Vec<f64>>,
    pub customers: Vec<Customer>,
    pub trucks: Vec<Truck>,
    pub fleet: Fleet,
    pub policy: CompartmentPolicy,
    pub feeds: usize,
    pub omega: f64,
    pub max_route_minutes: Option<f64>,
    pub beta: f64,
}

impl Instance {
    pub fn node_count(&self) -> usize {
        self.distance.len()
    }

    pub fn d(&self, a: usize, b: usize) -> f64 {
        self.distance[a][b]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.distance.len();
        (0..n).all(|i| (0..i).all(|j| self.distance[i][j] == self.distance[j][i]))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.distance.len();
        if n < 2 || self.distance.iter().any(|row| row.len() != n) {
            return Err(ModelError::BadMatrix);
        }
        for (i, row) in self.distance.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::BadDistance(i, j, v));
                }
            }
            if row[i] != 0.0 {
                return Err(ModelError::NonzeroDiagonal(i));
            }
        }
        if self.trucks.is_empty() {
            return Err(ModelError::NoTrucks);
        }
        if self.feeds == 0 {
            return Err(ModelError::NoFeeds);
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(ModelError::BadOmega(self.omega));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ModelError::BadBeta(self.beta));
        }
        if let Some(b) = self.max_route_minutes {
            if !(b > 0.0) {
                return Err(ModelError::BadBudget(b));
            }
        }
        for t in &self.trucks {
            if t.compartments.is_empty()
                || t.compartments.iter().any(|&c| !(c > 0.0) || !c.is_finite())
            {
                return Err(ModelError::BadCompartments(t.id));
            }
            if !(t.max_load > 0.0) {
                return Err(ModelError::BadMaxLoad(t.id));
            }
        }
        let mut seen = vec![false; n];
        let mut any_demand = false;
        for c in &self.customers {
            if c.id == 0 || c.id >= n {
                return Err(ModelError::UnknownCustomer(c.id));
            }
            if std::mem::replace(&mut seen[c.id], true) {
                return Err(ModelError::DuplicateCustomer(c.id));
            }
            let mut feeds = Vec::new();
            for o in &c.orders {
                if o.feed >= self.feeds {
                    return Err(ModelError::UnknownFeed(c.id, o.feed, self.feeds));
                }
                if feeds.contains(&o.feed) {
                    return Err(ModelError::DuplicateOrder(c.id, o.feed));
                }
                feeds.push(o.feed);
                if !(0.0..=1.0).contains(&o.urgency) {
                    return Err(ModelError::BadUrgency(o.urgency, c.id));
                }
                any_demand |= o.demand.mean() > 0.0;
            }
        }
        if !any_demand {
            return Err(ModelError::NoDemands);
        }
        Ok(())
    }

    /// Largest single compartment over the fleet.
    pub fn max_compartment(&self) -> f64 {
        self.trucks
            .iter()
            .flat_map(|t| t.compartments.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// A (customer, feed) order after expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub customer: usize,
    pub feed: usize,
    pub demand: DemandModel,
    pub urgency: f64,
    pub urgent: bool,
    /// Quantity the pair should receive in total: the urgency quantile when
    /// urgent, the mean otherwise.
    pub target: f64,
    pub replicas: std::ops::Range<usize>,
}

impl Pair {
    pub fn replica_count(&self) -> usize {
        self.replicas.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub id: usize,
    pub pair: usize,
    pub origin: usize,
    pub feed: usize,
    /// 1-based ordinal within the pair.
    pub index: u32,
    pub demand: DemandModel,
    pub urgency: f64,
    /// Load wanted when every replica of the pair is served.
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSet {
    pub pairs: Vec<Pair>,
    pub replicas: Vec<Replica>,
}

fn target_of(model: &DemandModel, urgency: f64, urgent: bool) -> Result<f64, StochasticsError> {
    if urgent {
        model.quantile(urgency.min(MAX_QUANTILE_ORDER))
    } else {
        Ok(round2(model.mean()))
    }
}

/// Split every order into replicas small enough for the largest compartment
/// (or, for shared compartments, the largest truck).
pub fn expand_replicas(instance: &Instance) -> Result<ReplicaSet, ModelError> {
    instance.validate()?;
    let unit = match instance.policy {
        CompartmentPolicy::Exclusive => instance.max_compartment(),
        CompartmentPolicy::SharedByFeed => instance
            .trucks
            .iter()
            .map(Truck::effective_capacity)
            .fold(0.0, f64::max),
    };
    let mut customers: Vec<&Customer> = instance.customers.iter().collect();
    customers.sort_by_key(|c| c.id);
    let mut pairs = Vec::new();
    let mut replicas = Vec::new();
    for c in customers {
        let mut orders: Vec<&Order> = c.orders.iter().collect();
        orders.sort_by_key(|o| o.feed);
        for o in orders {
            if o.demand.mean() <= 0.0 {
                continue;
            }
            let urgent = o.urgency >= instance.beta;
            let target = target_of(&o.demand, o.urgency, urgent)?;
            let r = replica_count(target, unit)?;
            let split = o.demand.split(r)?;
            let replica_target = target_of(&split, o.urgency, urgent)?;
            let pair = pairs.len();
            let start = replicas.len();
            for index in 1..=r {
                replicas.push(Replica {
                    id: replicas.len(),
                    pair,
                    origin: c.id,
                    feed: o.feed,
                    index,
                    demand: split.clone(),
                    urgency: o.urgency,
                    target: replica_target,
                });
            }
            pairs.push(Pair {
                customer: c.id,
                feed: o.feed,
                demand: o.demand.clone(),
                urgency: o.urgency,
                urgent,
                target,
                replicas: start..replicas.len(),
            });
        }
    }
    if replicas.is_empty() {
        return Err(ModelError::NoDemands);
    }
    Ok(ReplicaSet { pairs, replicas })
}

/// A validated instance bundled with its replica expansion.
#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    pub replicas: ReplicaSet,
}

impl Problem {
    pub fn new(instance: Instance) -> Result<Self, ModelError> {
        let replicas = expand_replicas(&instance)?;
        Ok(Problem { instance, replicas })
    }

    pub fn replica(&self, id: usize) -> &Replica {
        &self.replicas.replicas[id]
    }

    pub fn pair_of(&self, replica: usize) -> &Pair {
        &self.replicas.pairs[self.replicas.replicas[replica].pair]
    }

    pub fn n_replicas(&self) -> usize {
        self.replicas.replicas.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.replicas.pairs.len()
    }

    pub fn origin(&self, replica: usize) -> usize {
        self.replicas.replicas[replica].origin
    }

    /// Distance between two replicas; zero between copies of one customer.
    pub fn rd(&self, a: usize, b: usize) -> f64 {
        self.instance.d(self.origin(a), self.origin(b))
    }

    pub fn depot_to(&self, replica: usize) -> f64 {
        self.instance.d(0, self.origin(replica))
    }

    pub fn to_depot(&self, replica: usize) -> f64 {
        self.instance.d(self.origin(replica), 0)
    }

    pub fn truck(&self, idx: usize) -> &Truck {
        &self.instance.trucks[idx]
    }

    pub fn can_serve(&self, truck: usize, replica: usize) -> bool {
        self.instance.trucks[truck].can_serve(self.origin(replica))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub replica: usize,
    pub compartment: usize,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// Index into the instance's truck list (a truck type for unbounded fleets).
    pub truck: usize,
    pub visits: Vec<usize>,
    pub assignments: Vec<Assignment>,
}

impl Route {
    pub fn new(truck: usize) -> Self {
        Route {
            truck,
            visits: Vec::new(),
            assignments: Vec::new(),
        }
    }

    pub fn load(&self) -> f64 {
        self.assignments.iter().map(|a| a.load).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub unserved: Vec<usize>,
}

impl Solution {
    pub fn served_count(&self) -> usize {
        self.routes.iter().map(|r| r.visits.len()).sum()
    }

    /// Number of served replicas per pair.
    pub fn served_per_pair(&self, problem: &Problem) -> Vec<u32> {
        let mut counts = vec![0u32; problem.n_pairs()];
        for r in &self.routes {
            for &v in &r.visits {
                if let Some(rep) = problem.replicas.replicas.get(v) {
                    counts[rep.pair] += 1;
                }
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownTruck {
        route: usize,
        truck: usize,
    },
    UnknownReplica {
        route: usize,
        replica: usize,
    },
    DuplicateReplica {
        replica: usize,
    },
    MissingReplica {
        replica: usize,
    },
    UnknownCompartment {
        route: usize,
        compartment: usize,
    },
    NegativeLoad {
        route: usize,
        replica: usize,
    },
    CompartmentOverload {
        route: usize,
        compartment: usize,
        load: f64,
        capacity: f64,
    },
    CompartmentShared {
        route: usize,
        compartment: usize,
    },
    MaxLoadExceeded {
        route: usize,
        load: f64,
        max_load: f64,
    },
    Inaccessible {
        route: usize,
        customer: usize,
    },
    VisitWithoutLoad {
        route: usize,
        replica: usize,
    },
    LoadWithoutVisit {
        route: usize,
        replica: usize,
    },
    TooManyRoutes {
        truck: usize,
        routes: usize,
    },
    DurationExceeded {
        truck: usize,
        duration: f64,
        budget: f64,
    },
    EmptyRoute {
        route: usize,
    },
}

impl Violation {
    /// Short identifier of the violated constraint family.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::UnknownTruck { .. }
            | Violation::UnknownReplica { .. }
            | Violation::UnknownCompartment { .. } => "reference",
            Violation::DuplicateReplica { .. } | Violation::MissingReplica { .. } => "coverage",
            Violation::NegativeLoad { .. } | Violation::CompartmentOverload { .. } => {
                "compartment-capacity"
            }
            Violation::CompartmentShared { .. } => "compartment-mixing",
            Violation::MaxLoadExceeded { .. } => "max-load",
            Violation::Inaccessible { .. } => "accessibility",
            Violation::VisitWithoutLoad { .. } | Violation::LoadWithoutVisit { .. } => {
                "visit-load-link"
            }
            Violation::TooManyRoutes { .. } => "fleet",
            Violation::DurationExceeded { .. } => "duration",
            Violation::EmptyRoute { .. } => "empty-route",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}", self.code(), self)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

const LOAD_EPS: f64 = 1e-6;

/// Check every constraint and report all violations found.
pub fn check_feasibility(problem: &Problem, solution: &Solution) -> FeasibilityReport {
    let inst = &problem.instance;
    let n_rep = problem.n_replicas();
    let mut out = Vec::new();
    let mut where_served = vec![0usize; n_rep];
    let mut structurally_ok = true;

    for (ri, route) in solution.routes.iter().enumerate() {
        let Some(truck) = inst.trucks.get(route.truck) else {
            out.push(Violation::UnknownTruck {
                route: ri,
                truck: route.truck,
            });
            structurally_ok = false;
            continue;
        };
        if route.visits.is_empty() {
            out.push(Violation::EmptyRoute { route: ri });
        }
        let mut visited = Vec::new();
        for &v in &route.visits {
            if v >= n_rep {
                out.push(Violation::UnknownReplica {
                    route: ri,
                    replica: v,
                });
                structurally_ok = false;
                continue;
            }
            where_served[v] += 1;
            visited.push(v);
            let customer = problem.origin(v);
            if !truck.can_serve(customer) {
                out.push(Violation::Inaccessible {
                    route: ri,
                    customer,
                });
            }
        }
        let h = truck.compartments.len();
        let mut comp_load = vec![0.0; h];
        let mut comp_users: Vec<Vec<usize>> = vec![Vec::new(); h];
        let mut loaded = Vec::new();
        for a in &route.assignments {
            if a.replica >= n_rep {
                out.push(Violation::UnknownReplica {
                    route: ri,
                    replica: a.replica,
                });
                structurally_ok = false;
                continue;
            }
            if a.compartment >= h {
                out.push(Violation::UnknownCompartment {
                    route: ri,
                    compartment: a.compartment,
                });
                structurally_ok = false;
                continue;
            }
            if !(a.load >= 0.0) {
                out.push(Violation::NegativeLoad {
                    route: ri,
                    replica: a.replica,
                });
            }
            comp_load[a.compartment] += a.load;
            if !comp_users[a.compartment].contains(&a.replica) {
                comp_users[a.compartment].push(a.replica);
            }
            loaded.push(a.replica);
        }
        for c in 0..h {
            let cap = truck.compartments[c];
            if comp_load[c] > cap + LOAD_EPS * cap.max(1.0) {
                out.push(Violation::CompartmentOverload {
                    route: ri,
                    compartment: c,
                    load: comp_load[c],
                    capacity: cap,
                });
            }
            let mixed = match inst.policy {
                CompartmentPolicy::Exclusive => comp_users[c].len() > 1,
                CompartmentPolicy::SharedByFeed => {
                    let feeds: Vec<usize> = comp_users[c]
                        .iter()
                        .map(|&r| problem.replica(r).feed)
                        .collect();
                    feeds.windows(2).any(|w| w[0] != w[1])
                }
            };
            if mixed {
                out.push(Violation::CompartmentShared {
                    route: ri,
                    compartment: c,
                });
            }
        }
        let total: f64 = comp_load.iter().sum();
        if total > truck.max_load + LOAD_EPS * truck.max_load.max(1.0) {
            out.push(Violation::MaxLoadExceeded {
                route: ri,
                load: total,
                max_load: truck.max_load,
            });
        }
        for &v in &visited {
            if !loaded.contains(&v) {
                out.push(Violation::VisitWithoutLoad {
                    route: ri,
                    replica: v,
                });
            }
        }
        for &v in &loaded {
            if !visited.contains(&v) {
                out.push(Violation::LoadWithoutVisit {
                    route: ri,
                    replica: v,
                });
            }
        }
    }
    for &u in &solution.unserved {
        if u >= n_rep {
            out.push(Violation::UnknownReplica {
                route: usize::MAX,
                replica: u,
            });
            structurally_ok = false;
        } else {
            where_served[u] += 1;
        }
    }
    for (v, &count) in where_served.iter().enumerate() {
        if count > 1 {
            out.push(Violation::DuplicateReplica { replica: v });
        } else if count == 0 {
            out.push(Violation::MissingReplica { replica: v });
        }
    }

    if let Fleet::Limited { multi_route } = inst.fleet {
        let mut per_truck = vec![0usize; inst.trucks.len()];
        for r in &solution.routes {
            if r.truck < per_truck.len() {
                per_truck[r.truck] += 1;
            }
        }
        if !multi_route {
            for (t, &k) in per_truck.iter().enumerate() {
                if k > 1 {
                    out.push(Violation::TooManyRoutes {
                        truck: t,
                        routes: k,
                    });
                }
            }
        }
    }

    if structurally_ok {
        if let Some(budget) = inst.max_route_minutes {
            let eval = crate::evaluation::evaluate(problem, solution);
            for (truck, duration) in crate::evaluation::truck_durations(problem, solution, &eval) {
                if duration > budget + 1e-9 * budget {
                    out.push(Violation::DurationExceeded {
                        truck,
                        duration,
                        budget,
                    });
                }
            }
        }
    }
    FeasibilityReport { violations: out }
}

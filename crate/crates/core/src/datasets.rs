//! Bundled instances: the small worked examples, the feed cooperative case
//! and the fourteen CMT files.

use crate::model::{
    CompartmentPolicy, Customer, Fleet, Instance, Order, Truck, DEFAULT_BETA, DEFAULT_ROUTE_MINUTES,
};
use crate::stochastics::{DemandModel, Discrete};

fn order(demand: DemandModel, urgency: f64) -> Vec<Order> {
    vec![Order {
        feed: 0,
        demand,
        urgency,
    }]
}

/// Three customers, one five-compartment truck, normal demands.
pub fn fictitious() -> Instance {
    let distance = vec![
        vec![0.0, 28.0, 69.0, 64.0],
        vec![28.0, 0.0, 67.0, 62.0],
        vec![69.0, 67.0, 0.0, 7.0],
        vec![64.0, 62.0, 7.0, 0.0],
    ];
    let customers = [(1, 3.30), (2, 2.95), (3, 3.0)]
        .into_iter()
        .map(|(id, mean)| Customer {
            id,
            orders: order(DemandModel::Normal { mean, sd: 0.5 }, 0.95),
        })
        .collect();
    Instance {
        name: "fictitious".into(),
        distance,
        customers,
        trucks: vec![Truck::new(0, vec![3.0, 3.7, 3.8, 3.7, 3.0], 11.8)],
        fleet: Fleet::Limited { multi_route: false },
        policy: CompartmentPolicy::Exclusive,
        feeds: 1,
        omega: 1.0,
        max_route_minutes: None,
        beta: DEFAULT_BETA,
    }
}

/// Four customers ten minutes apart; two urgent discrete orders and two
/// fixed ones, one truck with compartments 7, 6, 6, 6.
pub fn numerical(omega: f64) -> Instance {
    let mut distance = vec![vec![10.0; 5]; 5];
    for (i, row) in distance.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let urgent = DemandModel::Discrete(
        Discrete::new(vec![(5.0, 0.5), (6.0, 0.4), (7.0, 0.1)]).expect("valid distribution"),
    );
    let customers = vec![
        Customer {
            id: 1,
            orders: order(urgent.clone(), 0.95),
        },
        Customer {
            id: 2,
            orders: order(urgent, 0.95),
        },
        Customer {
            id: 3,
            orders: order(DemandModel::Deterministic(7.0), 0.0),
        },
        Customer {
            id: 4,
            orders: order(DemandModel::Deterministic(7.0), 0.0),
        },
    ];
    Instance {
        name: "numerical".into(),
        distance,
        customers,
        trucks: vec![Truck::full(0, vec![7.0, 6.0, 6.0, 6.0])],
        fleet: Fleet::Limited { multi_route: false },
        policy: CompartmentPolicy::Exclusive,
        feeds: 1,
        omega,
        max_route_minutes: None,
        beta: DEFAULT_BETA,
    }
}

const COOP_MINUTES: [[f64; 11]; 11] = [
    [0., 21., 20., 17., 65., 63., 60., 19., 22., 24., 60.],
    [21., 0., 4., 6., 60., 58., 55., 15., 18., 20., 55.],
    [20., 4., 0., 4., 59., 56., 53., 13., 8., 12., 53.],
    [17., 6., 4., 0., 57., 54., 52., 11., 13., 16., 52.],
    [65., 60., 59., 57., 0., 3., 7., 66., 69., 71., 6.],
    [63., 58., 56., 54., 3., 0., 4., 64., 66., 69., 3.],
    [60., 55., 53., 52., 7., 4., 0., 61., 64., 66., 2.],
    [19., 15., 13., 11., 66., 64., 61., 0., 3., 5., 61.],
    [22., 18., 8., 13., 69., 66., 64., 3., 0., 7., 64.],
    [24., 20., 12., 16., 71., 69., 66., 5., 7., 0., 66.],
    [60., 55., 53., 52., 6., 3., 2., 61., 64., 66., 0.],
];

const COOP_URGENT_OUTCOMES: [[f64; 3]; 5] = [
    [2990., 3300., 3500.],
    [5250., 5500., 6041.],
    [5560., 5730., 5959.],
    [2680., 2951., 3100.],
    [4320., 4490., 4885.],
];

const COOP_URGENT_FIXED: [f64; 5] = [3300., 6041., 5959., 2951., 4885.];

const COOP_OTHER_DEMANDS: [f64; 5] = [3003., 3016., 4478., 5413., 3490.];

/// Feed cooperative case: ten farms, one or two five-compartment trucks.
/// The first five farms have urgent orders, either as equiprobable
/// three-point distributions or as fixed quantities.
pub fn cooperative(stochastic: bool, trucks: usize) -> Instance {
    let mut customers = Vec::new();
    for (i, outcomes) in COOP_URGENT_OUTCOMES.iter().enumerate() {
        let demand = if stochastic {
            DemandModel::Discrete(Discrete::equiprobable(outcomes).expect("valid outcomes"))
        } else {
            DemandModel::Deterministic(COOP_URGENT_FIXED[i])
        };
        customers.push(Customer {
            id: i + 1,
            orders: order(demand, 0.95),
        });
    }
    for (i, &d) in COOP_OTHER_DEMANDS.iter().enumerate() {
        customers.push(Customer {
            id: i + 6,
            orders: order(DemandModel::Deterministic(d), 0.0),
        });
    }
    let n_trucks = trucks.max(1);
    Instance {
        name: format!(
            "cooperative-{}-{n_trucks}truck",
            if stochastic {
                "stochastic"
            } else {
                "deterministic"
            },
        ),
        distance: COOP_MINUTES.iter().map(|r| r.to_vec()).collect(),
        customers,
        trucks: (0..n_trucks)
            .map(|id| Truck::new(id, vec![4000., 3000., 1700., 4500., 3000.], 15300.))
            .collect(),
        fleet: Fleet::Limited { multi_route: false },
        policy: CompartmentPolicy::Exclusive,
        feeds: 1,
        omega: 0.8,
        max_route_minutes: Some(DEFAULT_ROUTE_MINUTES),
        beta: DEFAULT_BETA,
    }
}

/// Raw text of CMT instance `vrpnc{id}` for `id` in 1..=14.
pub fn cmt_text(id: usize) -> Option<&'static str> {
    Some(match id {
        1 => include_str!("../data/cmt/vrpnc1.txt"),
        2 => include_str!("../data/cmt/vrpnc2.txt"),
        3 => include_str!("../data/cmt/vrpnc3.txt"),
        4 => include_str!("../data/cmt/vrpnc4.txt"),
        5 => include_str!("../data/cmt/vrpnc5.txt"),
        6 => include_str!("../data/cmt/vrpnc6.txt"),
        7 => include_str!("../data/cmt/vrpnc7.txt"),
        8 => include_str!("../data/cmt/vrpnc8.txt"),
        9 => include_str!("../data/cmt/vrpnc9.txt"),
        10 => include_str!("../data/cmt/vrpnc10.txt"),
        11 => include_str!("../data/cmt/vrpnc11.txt"),
        12 => include_str!("../data/cmt/vrpnc12.txt"),
        13 => include_str!("../data/cmt/vrpnc13.txt"),
        14 => include_str!("../data/cmt/vrpnc14.txt"),
        _ => return None,
    })
}

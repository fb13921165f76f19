//! Line-oriented instance files (`.mcv`).
//!
//! ```text
//! # comments start with '#'
//! name cooperative
//! omega 0.8
//! beta 0.9
//! feeds 1
//! fleet limited            # limited | limited-multi | unbounded
//! compartments exclusive   # exclusive | shared
//! route-minutes 540        # or `none`; 540 when the line is absent
//! matrix 3                 # followed by 3 rows; or `coords 3` and `x y` rows
//! 0 21 20
//! 21 0 4
//! 20 4 0
//! truck 0 load 15300 caps 4000 3000 1700 restrict 2
//! order 1 0 0.95 discrete 2990:0.5 3300:0.5
//! order 2 0 0 fixed 3003
//! order 2 1 0.95 normal 3.3 0.5
//! customer 7               # a customer without orders
//! ```

use std::fmt::Write as _;

use super::{index, number, ParseError};
use crate::model::{
    CompartmentPolicy, Customer, Fleet, Instance, Order, Truck, DEFAULT_BETA, DEFAULT_ROUTE_MINUTES,
};
use crate::stochastics::{DemandModel, Discrete};

pub const MAX_NODES: usize = 5_000;
pub const MAX_TRUCKS: usize = 1_000;
pub const MAX_COMPARTMENTS: usize = 64;
pub const MAX_FEEDS: usize = 64;

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut name = String::new();
    let mut omega = 1.0;
    let mut beta = DEFAULT_BETA;
    let mut feeds = 1;
    let mut fleet = Fleet::Limited { multi_route: false };
    let mut policy = CompartmentPolicy::Exclusive;
    let mut route = Some(DEFAULT_ROUTE_MINUTES);
    let mut distance: Option<Vec<Vec<f64>>> = None;
    let mut trucks = Vec::new();
    let mut customers: Vec<Customer> = Vec::new();

    let mut lines = text.lines().enumerate().map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("");
        (i + 1, body.split_whitespace().collect::<Vec<_>>())
    });
    while let Some((ln, t)) = lines.next() {
        let Some(&key) = t.first() else { continue };
        let want = |n: usize| {
            if t.len() == n {
                Ok(())
            } else {
                Err(ParseError::at(
                    ln,
                    format!("`{key}` takes {} value(s)", n - 1),
                ))
            }
        };
        match key {
            "name" => name = t[1..].join(" "),
            "omega" => {
                want(2)?;
                omega = number(t[1], ln, "omega")?;
            }
            "beta" => {
                want(2)?;
                beta = number(t[1], ln, "beta")?;
            }
            "feeds" => {
                want(2)?;
                feeds = index(t[1], ln, "feed count")?;
                if feeds > MAX_FEEDS {
                    return Err(ParseError::at(ln, "too many feeds"));
                }
            }
            "fleet" => {
                want(2)?;
                fleet = match t[1] {
                    "limited" => Fleet::Limited { multi_route: false },
                    "limited-multi" => Fleet::Limited { multi_route: true },
                    "unbounded" => Fleet::Unbounded,
                    other => return Err(ParseError::at(ln, format!("unknown fleet `{other}`"))),
                };
            }
            "compartments" => {
                want(2)?;
                policy = match t[1] {
                    "exclusive" => CompartmentPolicy::Exclusive,
                    "shared" => CompartmentPolicy::SharedByFeed,
                    other => return Err(ParseError::at(ln, format!("unknown policy `{other}`"))),
                };
            }
            "route-minutes" => {
                want(2)?;
                route = match t[1] {
                    "none" => None,
                    v => Some(number(v, ln, "route minutes")?),
                };
            }
            "matrix" | "coords" => {
                want(2)?;
                if distance.is_some() {
                    return Err(ParseError::at(ln, "distances given twice"));
                }
                let n = index(t[1], ln, "node count")?;
                if n < 2 || n > MAX_NODES {
                    return Err(ParseError::at(ln, format!("node count {n} out of range")));
                }
                let width = if key == "matrix" { n } else { 2 };
                let mut rows = Vec::with_capacity(n);
                while rows.len() < n {
                    let (rl, r) = lines
                        .next()
                        .ok_or_else(|| ParseError::Invalid(format!("{key} ends early")))?;
                    if r.is_empty() {
                        continue;
                    }
                    if r.len() != width {
                        return Err(ParseError::at(rl, format!("expected {width} values")));
                    }
                    rows.push(
                        r.iter()
                            .map(|v| number(v, rl, "distance"))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                distance = Some(if key == "matrix" {
                    rows
                } else {
                    rows.iter()
                        .map(|a| {
                            rows.iter()
                                .map(|b| (a[0] - b[0]).hypot(a[1] - b[1]))
                                .collect()
                        })
                        .collect()
                });
            }
            "truck" => trucks.push(parse_truck(&t, ln)?),
            "customer" => {
                want(2)?;
                let id = index(t[1], ln, "customer")?;
                customer_entry(&mut customers, id, ln)?;
            }
            "order" => {
                if t.len() < 6 {
                    return Err(ParseError::at(
                        ln,
                        "order needs `customer feed urgency kind values`",
                    ));
                }
                let id = index(t[1], ln, "customer")?;
                let feed = index(t[2], ln, "feed")?;
                let urgency = number(t[3], ln, "urgency")?;
                let demand = parse_demand(&t[4..], ln)?;
                customer_entry(&mut customers, id, ln)?.orders.push(Order {
                    feed,
                    demand,
                    urgency,
                });
            }
            other => return Err(ParseError::at(ln, format!("unknown keyword `{other}`"))),
        }
    }
    let inst = Instance {
        name,
        distance: distance
            .ok_or_else(|| ParseError::Invalid("missing `matrix` or `coords`".into()))?,
        customers,
        trucks,
        fleet,
        policy,
        feeds,
        omega,
        max_route_minutes: route,
        beta,
    };
    inst.validate()
        .map_err(|e| ParseError::Invalid(e.to_string()))?;
    Ok(inst)
}

fn customer_entry(
    customers: &mut Vec<Customer>,
    id: usize,
    ln: usize,
) -> Result<&mut Customer, ParseError> {
    if id == 0 || id >= MAX_NODES {
        return Err(ParseError::at(ln, format!("customer id {id} out of range")));
    }
    let pos = match customers.iter().position(|c| c.id == id) {
        Some(p) => p,
        None => {
            customers.push(Customer {
                id,
                orders: Vec::new(),
            });
            customers.len() - 1
        }
    };
    Ok(&mut customers[pos])
}

fn parse_truck(t: &[&str], ln: usize) -> Result<Truck, ParseError> {
    if t.len() < 6 || t[2] != "load" || t[4] != "caps" {
        return Err(ParseError::at(
            ln,
            "truck needs `truck id load L caps c1 c2 ...`",
        ));
    }
    let id = index(t[1], ln, "truck id")?;
    let max_load = number(t[3], ln, "load")?;
    let split = t.iter().position(|&w| w == "restrict").unwrap_or(t.len());
    let caps = t[5..split]
        .iter()
        .map(|v| number(v, ln, "capacity"))
        .collect::<Result<Vec<_>, _>>()?;
    if caps.is_empty() || caps.len() > MAX_COMPARTMENTS {
        return Err(ParseError::at(ln, "compartment count out of range"));
    }
    let mut restricted = t[(split + 1).min(t.len())..]
        .iter()
        .map(|v| index(v, ln, "customer"))
        .collect::<Result<Vec<_>, _>>()?;
    restricted.sort_unstable();
    restricted.dedup();
    Ok(Truck {
        id,
        compartments: caps,
        max_load,
        restricted,
    })
}

fn parse_demand(t: &[&str], ln: usize) -> Result<DemandModel, ParseError> {
    let bad = |e: crate::stochastics::StochasticsError| ParseError::at(ln, e.to_string());
    match t[0] {
        "fixed" if t.len() == 2 => {
            DemandModel::deterministic(number(t[1], ln, "demand")?).map_err(bad)
        }
        "normal" if t.len() == 3 => {
            DemandModel::normal(number(t[1], ln, "mean")?, number(t[2], ln, "sd")?).map_err(bad)
        }
        "discrete" if t.len() >= 2 => {
            let mut outcomes = Vec::with_capacity(t.len() - 1);
            for pair in &t[1..] {
                let (v, p) = pair.split_once(':').ok_or_else(|| {
                    ParseError::at(ln, format!("outcome `{pair}` is not value:prob"))
                })?;
                outcomes.push((number(v, ln, "value")?, number(p, ln, "probability")?));
            }
            Ok(DemandModel::Discrete(Discrete::new(outcomes).map_err(bad)?))
        }
        other => Err(ParseError::at(
            ln,
            format!("bad demand `{other}` or wrong arity"),
        )),
    }
}

/// Serialise an instance; `parse_instance` reads it back unchanged.
pub fn write_instance(inst: &Instance) -> String {
    let mut s = String::new();
    if !inst.name.is_empty() {
        let _ = writeln!(s, "name {}", inst.name);
    }
    let _ = writeln!(s, "omega {}", inst.omega);
    let _ = writeln!(s, "beta {}", inst.beta);
    let _ = writeln!(s, "feeds {}", inst.feeds);
    let fleet = match inst.fleet {
        Fleet::Limited { multi_route: false } => "limited",
        Fleet::Limited { multi_route: true } => "limited-multi",
        Fleet::Unbounded => "unbounded",
    };
    let _ = writeln!(s, "fleet {fleet}");
    let policy = match inst.policy {
        CompartmentPolicy::Exclusive => "exclusive",
        CompartmentPolicy::SharedByFeed => "shared",
    };
    let _ = writeln!(s, "compartments {policy}");
    match inst.max_route_minutes {
        Some(m) => {
            let _ = writeln!(s, "route-minutes {m}");
        }
        None => s.push_str("route-minutes none\n"),
    }
    let _ = writeln!(s, "matrix {}", inst.distance.len());
    for row in &inst.distance {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    for t in &inst.trucks {
        let caps: Vec<String> = t.compartments.iter().map(|v| v.to_string()).collect();
        let _ = write!(
            s,
            "truck {} load {} caps {}",
            t.id,
            t.max_load,
            caps.join(" ")
        );
        if !t.restricted.is_empty() {
            let r: Vec<String> = t.restricted.iter().map(|v| v.to_string()).collect();
            let _ = write!(s, " restrict {}", r.join(" "));
        }
        s.push('\n');
    }
    for c in &inst.customers {
        if c.orders.is_empty() {
            let _ = writeln!(s, "customer {}", c.id);
        }
        for o in &c.orders {
            let _ = write!(s, "order {} {} {} ", c.id, o.feed, o.urgency);
            match &o.demand {
                DemandModel::Deterministic(v) => {
                    let _ = write!(s, "fixed {v}");
                }
                DemandModel::Normal { mean, sd } => {
                    let _ = write!(s, "normal {mean} {sd}");
                }
                DemandModel::Discrete(d) => {
                    s.push_str("discrete");
                    for (v, p) in d.outcomes() {
                        let _ = write!(s, " {v}:{p}");
                    }
                }
            }
            s.push('\n');
        }
    }
    s
}

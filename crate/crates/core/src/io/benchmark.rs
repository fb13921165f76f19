//! The 35 generated stochastic benchmark instances and the deterministic
//! multi-compartment variants of the fourteen CMT files.
//!
//! Demands become `Normal(d, 0.3 d)`. Set 1 makes every customer urgent,
//! Sets 2 and 3 only the first half (rounded down). Set 3 adds a
//! six-compartment truck type that may not visit a listed fifth of the
//! customers. Fleets are unbounded and a truck may carry the sum of its
//! compartments.

use super::cmt::{parse_cmt, CmtInstance};
use super::ParseError;
use crate::datasets::cmt_text;
use crate::model::{CompartmentPolicy, Customer, Fleet, Instance, Order, Truck, DEFAULT_BETA};
use crate::stochastics::DemandModel;

pub const DEFAULT_URGENCY: f64 = 0.95;
pub const SD_RATIO: f64 = 0.3;
/// CMT files used by the stochastic sets.
pub const BASES: [usize; 7] = [1, 2, 3, 4, 5, 11, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fleetmix {
    Five,
    Six,
    /// Both types; the six-compartment one carries the restrictions.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub set: u8,
    pub base: usize,
    pub mix: Fleetmix,
    pub restricted: Vec<usize>,
}

impl BenchmarkSpec {
    pub fn name(&self) -> String {
        let suffix = if self.mix == Fleetmix::Six { "b" } else { "" };
        format!("set{}-vrpnc{}{}", self.set, self.base, suffix)
    }
}

/// Compartment rows (five, six) for a CMT base file.
pub fn compartment_rows(base: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let (five, six): (&[f64], &[f64]) = match base {
        1 => (&[45., 35., 30., 30., 20.], &[40., 35., 30., 25., 20., 10.]),
        2 => (&[40., 30., 30., 20., 20.], &[35., 30., 25., 20., 15., 15.]),
        3 | 4 | 5 | 11 | 12 => (&[50., 45., 40., 35., 30.], &[45., 40., 35., 30., 30., 20.]),
        _ => return None,
    };
    Some((five.to_vec(), six.to_vec()))
}

/// Customers the six-compartment trucks of Set 3 may not visit.
pub fn restricted_list(base: usize) -> Option<&'static [usize]> {
    Some(match base {
        1 => &[4, 39, 1, 34, 23, 43, 14, 18, 33, 21],
        2 => &[68, 39, 1, 34, 43, 14, 59, 51, 21, 54, 7, 9, 15, 67, 37],
        3 | 12 => &[
            68, 39, 1, 34, 87, 43, 14, 82, 59, 51, 85, 21, 54, 74, 7, 73, 79, 37, 83, 97,
        ],
        4 => &[
            68, 129, 43, 14, 51, 85, 21, 106, 74, 7, 73, 79, 37, 105, 110, 34, 143, 126, 89, 33,
            84, 70, 142, 42, 38, 11, 20, 28, 124, 44,
        ],
        5 => &[
            68, 87, 1, 67, 129, 162, 43, 14, 187, 51, 85, 21, 106, 182, 74, 7, 73, 79, 37, 105,
            110, 165, 34, 189, 126, 89, 172, 33, 84, 163, 70, 193, 42, 166, 11, 148, 156, 20, 44,
            121,
        ],
        11 => &[
            68, 39, 1, 34, 87, 43, 14, 82, 59, 51, 97, 85, 21, 106, 54, 74, 7, 73, 79, 109, 37, 89,
            100, 117,
        ],
        _ => return None,
    })
}

/// All 35 specs in table order.
pub fn all_specs() -> Vec<BenchmarkSpec> {
    let mut out = Vec::new();
    for set in [1u8, 2] {
        for base in BASES {
            for mix in [Fleetmix::Five, Fleetmix::Six] {
                out.push(BenchmarkSpec {
                    set,
                    base,
                    mix,
                    restricted: Vec::new(),
                });
            }
        }
    }
    for base in BASES {
        let restricted = restricted_list(base).expect("listed base").to_vec();
        out.push(BenchmarkSpec {
            set: 3,
            base,
            mix: Fleetmix::Both,
            restricted,
        });
    }
    out
}

/// Look a spec up by name, e.g. `set2-vrpnc1b`.
pub fn spec_by_name(name: &str) -> Option<BenchmarkSpec> {
    all_specs().into_iter().find(|s| s.name() == name)
}

pub fn load_cmt(base: usize) -> Result<CmtInstance, ParseError> {
    let text =
        cmt_text(base).ok_or_else(|| ParseError::Invalid(format!("no CMT file vrpnc{base}")))?;
    parse_cmt(text)
}

pub fn generate_set(
    cmt: &CmtInstance,
    spec: &BenchmarkSpec,
    urgency: f64,
) -> Result<Instance, ParseError> {
    let (five, six) = compartment_rows(spec.base)
        .ok_or_else(|| ParseError::Invalid(format!("no benchmark based on vrpnc{}", spec.base)))?;
    if !(1..=3).contains(&spec.set) || (spec.set == 3) != (spec.mix == Fleetmix::Both) {
        return Err(ParseError::Invalid(format!("unknown spec {}", spec.name())));
    }
    let n = cmt.customers.len();
    let urgent_upto = if spec.set == 1 { n } else { n / 2 };
    let customers = cmt
        .customers
        .iter()
        .enumerate()
        .map(|(i, &(_, _, d))| {
            let demand = DemandModel::normal(d, SD_RATIO * d)
                .map_err(|e| ParseError::Invalid(e.to_string()))?;
            let p = if i < urgent_upto { urgency } else { 0.0 };
            Ok(Customer {
                id: i + 1,
                orders: vec![Order {
                    feed: 0,
                    demand,
                    urgency: p,
                }],
            })
        })
        .collect::<Result<Vec<_>, ParseError>>()?;
    let trucks = match spec.mix {
        Fleetmix::Five => vec![Truck::full(0, five)],
        Fleetmix::Six => vec![Truck::full(0, six)],
        Fleetmix::Both => {
            let mut t6 = Truck::full(1, six);
            t6.restricted = spec.restricted.clone();
            t6.restricted.sort_unstable();
            vec![Truck::full(0, five), t6]
        }
    };
    let inst = Instance {
        name: spec.name(),
        distance: cmt.distances(),
        customers,
        trucks,
        fleet: Fleet::Unbounded,
        policy: CompartmentPolicy::Exclusive,
        feeds: 1,
        omega: 1.0,
        max_route_minutes: cmt.max_route_time,
        beta: DEFAULT_BETA,
    };
    inst.validate()
        .map_err(|e| ParseError::Invalid(e.to_string()))?;
    Ok(inst)
}

/// CMT file whose compartment row a deterministic variant borrows.
fn mcvrp_row_source(id: usize) -> Option<usize> {
    Some(match id {
        1..=5 | 11 | 12 => id,
        6..=10 => id - 5,
        13 => 11,
        14 => 12,
        _ => return None,
    })
}

/// Deterministic, single-feed, non-urgent variant of `vrpnc{id}`. A
/// compartment holds the single feed for any number of customers, so it
/// behaves like a plain capacitated problem with split-capable loading.
pub fn mcvrp_instance(id: usize) -> Result<Instance, ParseError> {
    let cmt = load_cmt(id)?;
    let (five, _) =
        compartment_rows(mcvrp_row_source(id).expect("id has a CMT file")).expect("listed base");
    let customers = cmt
        .customers
        .iter()
        .enumerate()
        .map(|(i, &(_, _, d))| Customer {
            id: i + 1,
            orders: vec![Order {
                feed: 0,
                demand: DemandModel::Deterministic(d),
                urgency: 0.0,
            }],
        })
        .collect();
    let inst = Instance {
        name: format!("mcvrp-vrpnc{id}"),
        distance: cmt.distances(),
        customers,
        trucks: vec![Truck::full(0, five)],
        fleet: Fleet::Unbounded,
        policy: CompartmentPolicy::SharedByFeed,
        feeds: 1,
        omega: 1.0,
        max_route_minutes: cmt.max_route_time,
        beta: DEFAULT_BETA,
    };
    inst.validate()
        .map_err(|e| ParseError::Invalid(e.to_string()))?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_five_valid_specs() {
        let specs = all_specs();
        assert_eq!(specs.len(), 35);
        for s in &specs {
            let cmt = load_cmt(s.base).unwrap();
            let inst = generate_set(&cmt, s, DEFAULT_URGENCY).unwrap();
            for t in &inst.trucks {
                assert_eq!(t.capacity_sum(), cmt.capacity, "{}", s.name());
            }
            if s.set == 3 {
                let fifth = (cmt.customers.len() as f64 * 0.2).round() as usize;
                assert_eq!(s.restricted.len(), fifth, "{}", s.name());
            }
        }
    }

    #[test]
    fn set_examples() {
        let cmt = load_cmt(1).unwrap();
        let s1 = generate_set(&cmt, &spec_by_name("set1-vrpnc1").unwrap(), 0.95).unwrap();
        assert_eq!(
            s1.customers
                .iter()
                .filter(|c| c.orders[0].urgency >= 0.9)
                .count(),
            50
        );
        assert_eq!(s1.trucks[0].compartments, vec![45., 35., 30., 30., 20.]);
        let s3 = generate_set(&cmt, &spec_by_name("set3-vrpnc1").unwrap(), 0.95).unwrap();
        assert_eq!(
            s3.trucks[1].restricted,
            vec![1, 4, 14, 18, 21, 23, 33, 34, 39, 43]
        );
        let cmt3 = load_cmt(3).unwrap();
        let s2 = generate_set(&cmt3, &spec_by_name("set2-vrpnc3").unwrap(), 0.95).unwrap();
        assert!(s2.customers[..50]
            .iter()
            .all(|c| c.orders[0].urgency == 0.95));
        assert!(s2.customers[50..]
            .iter()
            .all(|c| c.orders[0].urgency == 0.0));
        assert_eq!(
            s1,
            generate_set(&cmt, &spec_by_name("set1-vrpnc1").unwrap(), 0.95).unwrap()
        );
    }

    #[test]
    fn deterministic_variants() {
        for id in 1..=14 {
            let inst = mcvrp_instance(id).unwrap();
            let cmt = load_cmt(id).unwrap();
            assert_eq!(inst.trucks[0].capacity_sum(), cmt.capacity, "vrpnc{id}");
        }
        assert!(mcvrp_instance(15).is_err());
    }
}

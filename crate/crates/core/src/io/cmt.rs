//! Christofides–Mingozzi–Toth instance files.
//!
//! Layout: `n capacity max_route_time drop_time`, the depot `x y`, then one
//! `x y demand` line per customer. Blank lines are skipped.

use super::{index, number, ParseError};

/// Keeps fuzzed headers from asking for absurd allocations.
pub const MAX_CUSTOMERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CmtInstance {
    pub capacity: f64,
    /// `None` when the file gives 0.
    pub max_route_time: Option<f64>,
    pub depot: (f64, f64),
    /// `(x, y, demand)` for customers 1..=n.
    pub customers: Vec<(f64, f64, f64)>,
}

impl CmtInstance {
    /// Euclidean distances at full precision, depot first.
    pub fn distances(&self) -> Vec<Vec<f64>> {
        let pts: Vec<(f64, f64)> = std::iter::once(self.depot)
            .chain(self.customers.iter().map(|&(x, y, _)| (x, y)))
            .collect();
        pts.iter()
            .map(|a| pts.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
            .collect()
    }
}

pub fn parse_cmt(text: &str) -> Result<CmtInstance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty());
    let (ln, head) = lines
        .next()
        .ok_or_else(|| ParseError::Invalid("empty file".into()))?;
    if head.len() < 2 || head.len() > 4 {
        return Err(ParseError::at(
            ln,
            "header needs `n capacity [max_time [drop_time]]`",
        ));
    }
    let n = index(head[0], ln, "customer count")?;
    if n == 0 || n > MAX_CUSTOMERS {
        return Err(ParseError::at(
            ln,
            format!("customer count {n} out of range"),
        ));
    }
    let capacity = number(head[1], ln, "capacity")?;
    if capacity <= 0.0 {
        return Err(ParseError::at(ln, "capacity must be positive"));
    }
    let max_time = match head.get(2) {
        Some(t) => number(t, ln, "max route time")?,
        None => 0.0,
    };
    if max_time < 0.0 {
        return Err(ParseError::at(ln, "max route time must not be negative"));
    }
    // Drop time is read for validation only.
    if let Some(t) = head.get(3) {
        number(t, ln, "drop time")?;
    }

    let (ln, depot) = lines
        .next()
        .ok_or_else(|| ParseError::Invalid("missing depot line".into()))?;
    if depot.len() != 2 {
        return Err(ParseError::at(ln, "depot line needs `x y`"));
    }
    let depot = (number(depot[0], ln, "x")?, number(depot[1], ln, "y")?);

    let mut customers = Vec::with_capacity(n);
    for (ln, t) in lines {
        if customers.len() == n {
            return Err(ParseError::at(ln, format!("more than {n} customer lines")));
        }
        if t.len() != 3 {
            return Err(ParseError::at(ln, "customer line needs `x y demand`"));
        }
        let d = number(t[2], ln, "demand")?;
        if d < 0.0 {
            return Err(ParseError::at(ln, "demand must not be negative"));
        }
        customers.push((number(t[0], ln, "x")?, number(t[1], ln, "y")?, d));
    }
    if customers.len() != n {
        return Err(ParseError::Invalid(format!(
            "expected {n} customers, found {}",
            customers.len()
        )));
    }
    Ok(CmtInstance {
        capacity,
        max_route_time: (max_time > 0.0).then_some(max_time),
        depot,
        customers,
    })
}

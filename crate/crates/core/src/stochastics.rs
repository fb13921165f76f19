//! Demand distributions and the probability arithmetic built on them.
//!
//! Orders are modelled as one of three non-negative random variables:
//! a fixed quantity, a finite discrete distribution, or a normal
//! distribution. Everything downstream only needs tail probabilities
//! `P[O > c]`, quantiles, and the scaling used when an order is split
//! across replicas.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

const DISCRETE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochasticsError {
    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("invalid discrete distribution: {0}")]
    InvalidDiscrete(String),
    #[error("normal standard deviation must be finite and non-negative, got {0}")]
    InvalidSd(f64),
    #[error("demand value must be finite and non-negative, got {0}")]
    InvalidValue(f64),
    #[error("replica count must be at least 1")]
    ZeroSplit,
    #[error("compartment capacity must be positive, got {0}")]
    NonPositiveCapacity(f64),
}

/// Round to two decimals, the precision at which loads are decided.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail of the standard normal, `1 - Φ(x)`, without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Halley step against [`normal_cdf`], which brings the result to full
/// double precision over the whole open interval.
pub fn normal_quantile(p: f64) -> Result<f64, StochasticsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StochasticsError::ProbabilityOutOfRange(p));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement; the residual is taken from whichever tail is smaller
    // so that extreme probabilities keep their relative accuracy.
    let e = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_sf(x)
    };
    let u = e / normal_pdf(x);
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// A finite distribution with strictly increasing values.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    outcomes: Vec<(f64, f64)>,
}

impl Discrete {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self, StochasticsError> {
        if outcomes.is_empty() {
            return Err(StochasticsError::InvalidDiscrete("no outcomes".into()));
        }
        let mut total = 0.0;
        for (i, &(v, p)) in outcomes.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(StochasticsError::InvalidValue(v));
            }
            if !p.is_finite() || p < 0.0 || p > 1.0 {
                return Err(StochasticsError::InvalidDiscrete(format!(
                    "probability {p} out of [0, 1]"
                )));
            }
            if i > 0 && v <= outcomes[i - 1].0 {
                return Err(StochasticsError::InvalidDiscrete(
                    "values must be strictly increasing".into(),
                ));
            }
            total += p;
        }
        if (total - 1.0).abs() > DISCRETE_SUM_TOLERANCE {
            return Err(StochasticsError::InvalidDiscrete(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Discrete { outcomes })
    }

    /// Equally likely values (sorted and validated).
    pub fn equiprobable(values: &[f64]) -> Result<Self, StochasticsError> {
        let p = 1.0 / values.len().max(1) as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Discrete::new(sorted.into_iter().map(|v| (v, p)).collect())
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }
}

/// Random order `O_{n,f}` of one customer for one feed.
#[derive(Debug, Clone, PartialEq)]
pub enum DemandModel {
    Deterministic(f64),
    Discrete(Discrete),
    Normal { mean: f64, sd: f64 },
}

impl DemandModel {
    pub fn deterministic(value: f64) -> Result<Self, StochasticsError> {
        if !value.is_finite() || value < 0.0 {
            return Err(StochasticsError::InvalidValue(value));
        }
        Ok(DemandModel::Deterministic(value))
    }

    /// Normal demand; a zero standard deviation collapses to a fixed value.
    pub fn normal(mean: f64, sd: f64) -> Result<Self, StochasticsError> {
        if !mean.is_finite() || mean < 0.0 {
            return Err(StochasticsError::InvalidValue(mean));
        }
        if !sd.is_finite() || sd < 0.0 {
            return Err(StochasticsError::InvalidSd(sd));
        }
        if sd == 0.0 {
            return Ok(DemandModel::Deterministic(mean));
        }
        Ok(DemandModel::Normal { mean, sd })
    }

    pub fn discrete(outcomes: Vec<(f64, f64)>) -> Result<Self, StochasticsError> {
        Discrete::new(outcomes).map(DemandModel::Discrete)
    }

    pub fn mean(&self) -> f64 {
        match self {
            DemandModel::Deterministic(v) => *v,
            DemandModel::Discrete(d) => d.outcomes.iter().map(|(v, p)| v * p).sum(),
            DemandModel::Normal { mean, .. } => *mean,
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            DemandModel::Deterministic(_) => 0.0,
            DemandModel::Discrete(d) => {
                let m = self.mean();
                d.outcomes
                    .iter()
                    .map(|(v, p)| p * (v - m) * (v - m))
                    .sum::<f64>()
                    .sqrt()
            }
            DemandModel::Normal { sd, .. } => *sd,
        }
    }

    /// Finite support, or `None` for a continuous model.
    pub fn support(&self) -> Option<Vec<f64>> {
        match self {
            DemandModel::Deterministic(v) => Some(vec![*v]),
            DemandModel::Discrete(d) => Some(d.outcomes.iter().map(|o| o.0).collect()),
            DemandModel::Normal { .. } => None,
        }
    }

    /// `P[O > c]`.
    pub fn exceedance(&self, c: f64) -> f64 {
        match self {
            DemandModel::Deterministic(v) => {
                if *v > c + tolerance(c) {
                    1.0
                } else {
                    0.0
                }
            }
            DemandModel::Discrete(d) => {
                let tol = tolerance(c);
                let tail: f64 = d
                    .outcomes
                    .iter()
                    .filter(|(v, _)| *v > c + tol)
                    .map(|(_, p)| p)
                    .sum();
                tail.clamp(0.0, 1.0)
            }
            DemandModel::Normal { mean, sd } => normal_sf((c - mean) / sd),
        }
    }

    /// Smallest `v` with `P[O <= v] >= p`, before rounding.
    pub fn quantile_exact(&self, p: f64) -> Result<f64, StochasticsError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(StochasticsError::ProbabilityOutOfRange(p));
        }
        Ok(match self {
            DemandModel::Deterministic(v) => *v,
            DemandModel::Discrete(d) => {
                let mut cum = 0.0;
                let mut last = d.outcomes[0].0;
                for &(v, q) in &d.outcomes {
                    cum += q;
                    last = v;
                    if cum >= p - 1e-12 {
                        return Ok(v);
                    }
                }
                last
            }
            DemandModel::Normal { mean, sd } => (mean + sd * normal_quantile(p)?).max(0.0),
        })
    }

    /// Quantile of order `p`, rounded to two decimals.
    pub fn quantile(&self, p: f64) -> Result<f64, StochasticsError> {
        self.quantile_exact(p).map(round2)
    }

    /// Demand of one of `r` equal replicas, i.e. the law of `O / r`.
    pub fn split(&self, r: u32) -> Result<DemandModel, StochasticsError> {
        if r == 0 {
            return Err(StochasticsError::ZeroSplit);
        }
        if r == 1 {
            return Ok(self.clone());
        }
        let k = r as f64;
        Ok(match self {
            DemandModel::Deterministic(v) => DemandModel::Deterministic(v / k),
            DemandModel::Discrete(d) => DemandModel::Discrete(Discrete {
                outcomes: d.outcomes.iter().map(|&(v, p)| (v / k, p)).collect(),
            }),
            DemandModel::Normal { mean, sd } => DemandModel::Normal {
                mean: mean / k,
                sd: sd / k,
            },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DemandModel::Deterministic(v) => *v,
            DemandModel::Discrete(d) => {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                for &(v, p) in &d.outcomes {
                    cum += p;
                    if u < cum {
                        return v;
                    }
                }
                d.outcomes[d.outcomes.len() - 1].0
            }
            DemandModel::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

fn tolerance(c: f64) -> f64 {
    1e-9 * c.abs().max(1.0)
}

/// Number of compartments of size `c_max` needed to carry `q`; at least one.
pub fn replica_count(q: f64, c_max: f64) -> Result<u32, StochasticsError> {
    if !(c_max > 0.0) || !c_max.is_finite() {
        return Err(StochasticsError::NonPositiveCapacity(c_max));
    }
    if !q.is_finite() || q < 0.0 {
        return Err(StochasticsError::InvalidValue(q));
    }
    // Guard against 3.8000000001 / 3.8 style noise pushing the ceiling up.
    let ratio = q / c_max;
    let r = (ratio - 1e-9).ceil();
    Ok((r as u32).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cdf_symmetry_and_center() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for x in [0.3, 1.0, 1.6449, 2.5, 5.0] {
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-10, 1e-4, 0.02, 0.3, 0.5, 0.77, 0.95, 0.999, 1.0 - 1e-9] {
            let x = normal_quantile(p).unwrap();
            let back = if p < 0.5 {
                normal_cdf(x)
            } else {
                1.0 - normal_sf(x)
            };
            assert!((back - p).abs() <= 1e-14 * p.max(1e-3), "p={p} x={x}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn worked_example_quantiles() {
        let q = |m, s| DemandModel::normal(m, s).unwrap().quantile(0.95).unwrap();
        assert_eq!(q(2.95, 0.5), 3.77);
        assert_eq!(q(3.30, 0.5), 4.12);
        assert_eq!(q(3.0, 0.5), 3.82);
        assert_eq!(q(1.65, 0.25), 2.06);
        assert_eq!(q(1.5, 0.25), 1.91);
    }

    #[test]
    fn discrete_quantile_and_tail() {
        let d = DemandModel::discrete(vec![(5.0, 0.5), (6.0, 0.4), (7.0, 0.1)]).unwrap();
        assert_eq!(d.quantile(0.95).unwrap(), 7.0);
        assert_eq!(d.quantile(0.5).unwrap(), 5.0);
        assert_eq!(d.quantile(0.9).unwrap(), 6.0);
        assert!((d.exceedance(6.0) - 0.1).abs() < 1e-12);
        assert!((d.exceedance(4.0) - 1.0).abs() < 1e-12);
        assert_eq!(d.exceedance(7.0), 0.0);
    }

    #[test]
    fn deterministic_is_strict() {
        let d = DemandModel::deterministic(7.0).unwrap();
        assert_eq!(d.exceedance(6.0), 1.0);
        assert_eq!(d.exceedance(7.0), 0.0);
        assert_eq!(d.quantile(0.95).unwrap(), 7.0);
    }

    #[test]
    fn normal_tail_example() {
        let d = DemandModel::normal(2.95, 0.5).unwrap();
        assert!((d.exceedance(3.8) - 0.044_565_462_758_543).abs() < 1e-9);
    }

    #[test]
    fn zero_sd_collapses() {
        assert_eq!(
            DemandModel::normal(4.0, 0.0).unwrap(),
            DemandModel::Deterministic(4.0)
        );
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(DemandModel::discrete(vec![(5.0, 0.5), (4.0, 0.5)]).is_err());
        assert!(DemandModel::discrete(vec![(5.0, 0.5), (6.0, 0.4)]).is_err());
        assert!(DemandModel::discrete(vec![]).is_err());
        assert!(DemandModel::normal(1.0, -0.1).is_err());
        assert!(DemandModel::deterministic(f64::NAN).is_err());
        assert!(DemandModel::normal(1.0, 1.0)
            .unwrap()
            .quantile(1.0)
            .is_err());
    }

    #[test]
    fn split_scales() {
        let n = DemandModel::normal(3.30, 0.5).unwrap().split(2).unwrap();
        assert_eq!(
            n,
            DemandModel::Normal {
                mean: 1.65,
                sd: 0.25
            }
        );
        let n = DemandModel::normal(3.0, 0.5).unwrap().split(2).unwrap();
        assert_eq!(
            n,
            DemandModel::Normal {
                mean: 1.5,
                sd: 0.25
            }
        );
        let d = DemandModel::deterministic(9.0).unwrap();
        assert_eq!(d.split(1).unwrap(), d);
        assert_eq!(d.split(3).unwrap(), DemandModel::Deterministic(3.0));
        let x = DemandModel::discrete(vec![(5250.0, 0.5), (6041.0, 0.5)]).unwrap();
        let half = x.split(2).unwrap();
        assert_eq!(half.support().unwrap(), vec![2625.0, 3020.5]);
        assert!(d.split(0).is_err());
    }

    #[test]
    fn replica_counts() {
        assert_eq!(replica_count(4.12, 3.8).unwrap(), 2);
        assert_eq!(replica_count(3.77, 3.8).unwrap(), 1);
        assert_eq!(replica_count(0.0, 5.0).unwrap(), 1);
        assert_eq!(replica_count(7.6, 3.8).unwrap(), 2);
        assert_eq!(replica_count(7.61, 3.8).unwrap(), 3);
        assert!(replica_count(1.0, 0.0).is_err());
        assert!(replica_count(1.0, -2.0).is_err());
    }

    #[test]
    fn sampling_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = DemandModel::discrete(vec![(5.0, 0.5), (6.0, 0.4), (7.0, 0.1)]).unwrap();
        let n = 200_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 5.6).abs() < 0.01);
        let g = DemandModel::normal(10.0, 2.0).unwrap();
        let mean = (0..n).map(|_| g.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 10.0).abs() < 0.02);
    }
}

//! Per-customer demand distributions, realizations, and joint enumeration.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

/// Default cap on the number of joint combinations an exact computation may visit.
pub const DEFAULT_ENUM_LIMIT: u64 = 1_000_000;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DemandError {
    #[error("pmf has no entries")]
    Empty,
    #[error("positive mass {0} at demand 0; every customer must have demand at least 1")]
    MassAtZero(f64),
    #[error("demand value {value} outside 1..={capacity}")]
    OutOfRange { value: i64, capacity: u32 },
    #[error("negative mass {mass} at demand {value}")]
    NegativeMass { value: i64, mass: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("demand {value} listed twice")]
    Duplicate { value: i64 },
    #[error("expected {expected} customer distributions, got {actual}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("pmf built for capacity {pmf} used with capacity {model}")]
    CapacityMismatch { pmf: u32, model: u32 },
}

/// Raised when an exhaustive computation would exceed its combination budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("enumeration needs {required} combinations, limit is {limit}; use Monte Carlo instead")]
pub struct TooLarge {
    pub required: u128,
    pub limit: u64,
}

/// Probability mass function over demands `1..=Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandPmf {
    // Ascending demand value, strictly positive mass.
    support: Vec<(u32, f64)>,
    capacity: u32,
}

impl DemandPmf {
    /// Validates `entries` against capacity `Q`. Zero-mass entries are dropped.
    pub fn new(entries: &[(i64, f64)], capacity: u32) -> Result<Self, DemandError> {
        if entries.is_empty() {
            return Err(DemandError::Empty);
        }
        let mut mass: BTreeMap<u32, f64> = BTreeMap::new();
        let mut total = 0.0;
        for &(k, p) in entries {
            if !p.is_finite() || p < 0.0 {
                return Err(DemandError::NegativeMass { value: k, mass: p });
            }
            if k == 0 {
                if p > 0.0 {
                    return Err(DemandError::MassAtZero(p));
                }
                continue;
            }
            if k < 0 || k > capacity as i64 {
                return Err(DemandError::OutOfRange { value: k, capacity });
            }
            if mass.insert(k as u32, p).is_some() {
                return Err(DemandError::Duplicate { value: k });
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(DemandError::NotNormalized(total));
        }
        let support = mass.into_iter().filter(|&(_, p)| p > 0.0).collect();
        Ok(Self { support, capacity })
    }

    /// Point mass at `k`.
    pub fn point(k: u32, capacity: u32) -> Result<Self, DemandError> {
        Self::new(&[(k as i64, 1.0)], capacity)
    }

    /// Uniform on `lo..=hi`.
    pub fn uniform(lo: u32, hi: u32, capacity: u32) -> Result<Self, DemandError> {
        if lo > hi {
            return Err(DemandError::Empty);
        }
        let p = 1.0 / f64::from(hi - lo + 1);
        let entries: Vec<(i64, f64)> = (lo..=hi).map(|k| (k as i64, p)).collect();
        // 1/m summed m times can drift by a few ulps; that is well inside tolerance.
        Self::new(&entries, capacity)
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// `(demand, probability)` pairs with positive mass, ascending in demand.
    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn probability(&self, k: u32) -> f64 {
        self.support
            .iter()
            .find(|&&(v, _)| v == k)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn expectation(&self) -> f64 {
        self.support.iter().map(|&(k, p)| f64::from(k) * p).sum()
    }

    /// Inverse-CDF draw over ascending demand values.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(k, p) in &self.support {
            acc += p;
            if u < acc {
                return k;
            }
        }
        // u landed in the rounding gap above the accumulated total.
        self.support.last().expect("support is non-empty").0
    }
}

/// One demand distribution per customer, indexed by vertex `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandModel {
    per_customer: Vec<DemandPmf>,
    capacity: u32,
}

impl DemandModel {
    /// `pmfs[i]` is the distribution of customer `i + 1`.
    pub fn new(pmfs: Vec<DemandPmf>, capacity: u32) -> Result<Self, DemandError> {
        if let Some(p) = pmfs.iter().find(|p| p.capacity != capacity) {
            return Err(DemandError::CapacityMismatch {
                pmf: p.capacity,
                model: capacity,
            });
        }
        Ok(Self {
            per_customer: pmfs,
            capacity,
        })
    }

    /// Every customer has a point mass; `demands[i]` belongs to customer `i + 1`.
    pub fn deterministic(demands: &[u32], capacity: u32) -> Result<Self, DemandError> {
        let pmfs = demands
            .iter()
            .map(|&k| DemandPmf::point(k, capacity))
            .collect::<Result<_, _>>()?;
        Self::new(pmfs, capacity)
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn customer_count(&self) -> usize {
        self.per_customer.len()
    }

    /// Distribution of customer `v` (1-based vertex index).
    pub fn pmf(&self, v: usize) -> &DemandPmf {
        &self.per_customer[v - 1]
    }

    pub fn pmfs(&self) -> &[DemandPmf] {
        &self.per_customer
    }

    /// `E[D_v]` for each customer, indexed by `v - 1`.
    pub fn expectations(&self) -> Vec<f64> {
        self.per_customer.iter().map(DemandPmf::expectation).collect()
    }

    /// `Π |support_i|`, saturating in `u128`.
    pub fn joint_size(&self) -> u128 {
        self.per_customer
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.support.len() as u128))
    }

    /// Draws independent demands and a uniform initial load `l` in `1..=Q`.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let demands = self.per_customer.iter().map(|p| p.sample(rng)).collect();
        let initial_load = rng.gen_range(1..=self.capacity);
        Realization {
            demands,
            initial_load,
        }
    }

    /// Streams every joint demand vector with its product probability.
    pub fn enumerate_joint(&self, limit: u64) -> Result<JointIter<'_>, TooLarge> {
        let required = self.joint_size();
        if required > u128::from(limit) {
            return Err(TooLarge { required, limit });
        }
        Ok(JointIter {
            model: self,
            cursor: vec![0; self.per_customer.len()],
            done: false,
        })
    }
}

/// Odometer over the joint support; the last customer varies fastest.
#[derive(Debug, Clone)]
pub struct JointIter<'a> {
    model: &'a DemandModel,
    cursor: Vec<usize>,
    done: bool,
}

impl Iterator for JointIter<'_> {
    type Item = (Vec<u32>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let pmfs = &self.model.per_customer;
        let mut demands = Vec::with_capacity(pmfs.len());
        let mut prob = 1.0;
        for (pmf, &c) in pmfs.iter().zip(&self.cursor) {
            let (k, p) = pmf.support[c];
            demands.push(k);
            prob *= p;
        }
        self.done = true;
        for i in (0..self.cursor.len()).rev() {
            self.cursor[i] += 1;
            if self.cursor[i] < pmfs[i].support.len() {
                self.done = false;
                break;
            }
            self.cursor[i] = 0;
        }
        Some((demands, prob))
    }
}

/// A fixed demand vector together with the initial load.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Realization {
    /// `demands[v - 1]` is the demand of customer `v`.
    pub demands: Vec<u32>,
    pub initial_load: u32,
}

impl Realization {
    pub fn new(demands: Vec<u32>, initial_load: u32) -> Self {
        Self {
            demands,
            initial_load,
        }
    }

    pub fn demand(&self, v: usize) -> u32 {
        self.demands[v - 1]
    }
}

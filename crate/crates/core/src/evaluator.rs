//! Expected policy cost: exact enumeration, Monte Carlo estimation, and reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{bound_set, BoundSet};
use crate::demand::{DemandModel, Realization, TooLarge};
use crate::policy::{run_length, Policy};
use crate::sum::NeumaierSum;
use crate::tree::TreeInstance;

const UB_REL_TOL: f64 = 1e-9;
const MC_CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    TooLarge(#[from] TooLarge),
    #[error("Monte Carlo needs at least 2 samples, got {0}")]
    TooFewSamples(u64),
    #[error("demand model has {model} customers and capacity {model_cap}; tree has {tree} and {tree_cap}")]
    Mismatch {
        model: usize,
        model_cap: u32,
        tree: usize,
        tree_cap: u32,
    },
}

pub(crate) fn check_pair(tree: &TreeInstance, model: &DemandModel) -> Result<(), EvalError> {
    if tree.customer_count() != model.customer_count() || tree.capacity() != model.capacity() {
        return Err(EvalError::Mismatch {
            model: model.customer_count(),
            model_cap: model.capacity(),
            tree: tree.customer_count(),
            tree_cap: tree.capacity(),
        });
    }
    Ok(())
}

/// Exact `E[cost]` over all joint demand vectors and all initial loads `1..=Q`.
///
/// `limit` caps `Π|support_i| · Q`.
pub fn exact_expected_cost(
    tree: &TreeInstance,
    model: &DemandModel,
    policy: Policy,
    limit: u64,
) -> Result<f64, EvalError> {
    check_pair(tree, model)?;
    let cap = tree.capacity();
    let required = model.joint_size().saturating_mul(u128::from(cap));
    if required > u128::from(limit) {
        return Err(TooLarge { required, limit }.into());
    }
    let order = tree.dfs_order();
    let mut total = NeumaierSum::default();
    let per_load = 1.0 / f64::from(cap);
    for (demands, prob) in model.enumerate_joint(limit)? {
        let mut r = Realization::new(demands, 1);
        for l in 1..=cap {
            r.initial_load = l;
            let len = run_length(tree, &order, &r, policy).expect("model matches tree");
            total.add(prob * per_load * len);
        }
    }
    Ok(total.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Generator for replication `r`: ChaCha8 keyed by `master_seed`, stream `r`.
pub fn replication_rng(master_seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }
}

/// Mean cost of `samples` independent replications, each drawing demands and `l`.
///
/// Chunks run in parallel and are merged in chunk order, so the result does
/// not depend on the number of worker threads.
pub fn monte_carlo_cost(
    tree: &TreeInstance,
    model: &DemandModel,
    policy: Policy,
    samples: u64,
    master_seed: u64,
) -> Result<Estimate, EvalError> {
    check_pair(tree, model)?;
    if samples < 2 {
        return Err(EvalError::TooFewSamples(samples));
    }
    let order = tree.dfs_order();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for r in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                let mut rng = replication_rng(master_seed, r);
                let real = model.sample_realization(&mut rng);
                m.push(run_length(tree, &order, &real, policy).expect("model matches tree"));
            }
            m
        })
        .collect();
    let all = partials.into_iter().fold(Moments::default(), Moments::merge);
    let variance = all.m2 / (all.count - 1) as f64;
    let stderr = (variance.max(0.0) / all.count as f64).sqrt();
    Ok(Estimate {
        mean: all.mean,
        stderr,
        ci95_low: all.mean - 1.96 * stderr,
        ci95_high: all.mean + 1.96 * stderr,
        samples,
        seed: master_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Exact,
    MonteCarlo,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Exact => "exact",
            EvalMode::MonteCarlo => "monte_carlo",
        }
    }
}

/// How to compute the expected cost in [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact { limit: u64 },
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub instance_id: String,
    pub policy: Policy,
    pub mode: EvalMode,
    pub expected_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub estimate: Option<Estimate>,
    pub bounds: BoundSet,
    pub ratio_vs_lb: f64,
    pub formula_ub: f64,
    pub ub_respected: bool,
}

/// Cost divided by `lb`, or `1` when there is nothing to route.
pub fn ratio(cost: f64, lb: f64) -> f64 {
    if lb > 0.0 {
        cost / lb
    } else {
        1.0
    }
}

pub fn evaluate(
    instance_id: &str,
    tree: &TreeInstance,
    model: &DemandModel,
    policy: Policy,
    method: Method,
) -> Result<EvalReport, EvalError> {
    let (mode, expected_cost, estimate) = match method {
        Method::Exact { limit } => (
            EvalMode::Exact,
            exact_expected_cost(tree, model, policy, limit)?,
            None,
        ),
        Method::MonteCarlo { samples, seed } => {
            let est = monte_carlo_cost(tree, model, policy, samples, seed)?;
            (EvalMode::MonteCarlo, est.mean, Some(est))
        }
    };
    let bounds = bound_set(tree, model);
    let formula_ub = bounds.formula_ub(policy);
    Ok(EvalReport {
        instance_id: instance_id.to_owned(),
        policy,
        mode,
        expected_cost,
        estimate,
        bounds,
        ratio_vs_lb: ratio(expected_cost, bounds.combined_lb),
        formula_ub,
        ub_respected: expected_cost <= formula_ub + UB_REL_TOL * formula_ub,
    })
}

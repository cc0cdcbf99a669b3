//! Brute-force references for tiny instances.
//!
//! With demands revealed in advance, the cheapest unsplit solution is a
//! partition of the customers into capacity-feasible groups, each served by
//! one depot round trip covering the group's spanning subtree. Enumerating
//! every partition gives the exact clairvoyant optimum, which in expectation
//! lower-bounds any policy that must discover demands on arrival.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::clairvoyant_edge_lb;
use crate::demand::DemandModel;
use crate::evaluator::{check_pair, EvalError};
use crate::sum::NeumaierSum;
use crate::tree::{TreeInstance, Vertex};

/// Largest customer count accepted by the partition search.
pub const MAX_PARTITION_CUSTOMERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("partition search supports at most {max} customers, instance has {n}")]
    TooManyCustomers { n: usize, max: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSolution {
    /// Groups ordered by their smallest customer; customers ascending within a group.
    pub groups: Vec<Vec<Vertex>>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LbMode {
    Edge,
    Partition,
}

/// `2 ×` spanning-subtree length of every customer subset, indexed by bitmask
/// (bit `v - 1` is customer `v`).
fn group_costs(tree: &TreeInstance) -> Vec<f64> {
    let n = tree.customer_count();
    let masks = tree.subtree_masks();
    (0u64..1 << n)
        .map(|group| {
            (1..=n)
                .filter(|&v| masks[v] & group != 0)
                .map(|v| tree.edge_length(v).expect("vertex in range"))
                .sum::<f64>()
                * 2.0
        })
        .collect()
}

struct Search<'a> {
    demands: &'a [u32],
    capacity: u64,
    costs: Vec<f64>,
    // restricted growth string: block index per customer position
    blocks: Vec<u64>,
    loads: Vec<u64>,
    best: Option<(f64, Vec<u64>)>,
}

impl Search<'_> {
    fn partial_cost(&self) -> f64 {
        self.blocks.iter().map(|&b| self.costs[b as usize]).sum()
    }

    fn beats_best(&self, cost: f64) -> bool {
        match &self.best {
            None => true,
            Some((best, _)) => cost < best - 1e-12 * best.abs().max(1.0),
        }
    }

    fn descend(&mut self, k: usize) {
        let cost = self.partial_cost();
        if !self.beats_best(cost) {
            return;
        }
        if k == self.demands.len() {
            self.best = Some((cost, self.blocks.clone()));
            return;
        }
        let q = u64::from(self.demands[k]);
        let bit = 1u64 << k;
        // Existing blocks first, then a fresh one: lexicographic RGS order.
        for b in 0..self.blocks.len() {
            if self.loads[b] + q <= self.capacity {
                self.blocks[b] |= bit;
                self.loads[b] += q;
                self.descend(k + 1);
                self.blocks[b] &= !bit;
                self.loads[b] -= q;
            }
        }
        self.blocks.push(bit);
        self.loads.push(q);
        self.descend(k + 1);
        self.blocks.pop();
        self.loads.pop();
    }
}

/// Minimum-cost capacity-feasible partition of the customers for fixed demands.
///
/// `demands[v - 1]` is the demand of customer `v`; each must be at most `Q`.
/// Among optimal partitions the lexicographically smallest restricted growth
/// string wins.
pub fn optimal_unsplit_partition(
    tree: &TreeInstance,
    demands: &[u32],
) -> Result<PartitionSolution, OracleError> {
    let n = tree.customer_count();
    if n > MAX_PARTITION_CUSTOMERS {
        return Err(OracleError::TooManyCustomers {
            n,
            max: MAX_PARTITION_CUSTOMERS,
        });
    }
    assert_eq!(demands.len(), n, "one demand per customer");
    search(tree, demands, group_costs(tree))
}

fn search(
    tree: &TreeInstance,
    demands: &[u32],
    costs: Vec<f64>,
) -> Result<PartitionSolution, OracleError> {
    let mut s = Search {
        demands,
        capacity: u64::from(tree.capacity()),
        costs,
        blocks: Vec::new(),
        loads: Vec::new(),
        best: None,
    };
    s.descend(0);
    let (cost, blocks) = s.best.expect("singleton partition is always feasible");
    let groups = blocks
        .iter()
        .map(|&mask| {
            (1..=demands.len())
                .filter(|&v| mask & (1u64 << (v - 1)) != 0)
                .collect()
        })
        .collect();
    Ok(PartitionSolution { groups, cost })
}

/// `Σ_q Pr(q) · LB(q)` over the joint demand distribution.
///
/// Edge mode lower-bounds every policy; partition mode lower-bounds unsplit
/// policies only.
pub fn expected_clairvoyant_lb(
    tree: &TreeInstance,
    model: &DemandModel,
    mode: LbMode,
    limit: u64,
) -> Result<f64, OracleError> {
    check_pair(tree, model)?;
    let n = tree.customer_count();
    if mode == LbMode::Partition && n > MAX_PARTITION_CUSTOMERS {
        return Err(OracleError::TooManyCustomers {
            n,
            max: MAX_PARTITION_CUSTOMERS,
        });
    }
    let costs = match mode {
        LbMode::Partition => group_costs(tree),
        LbMode::Edge => Vec::new(),
    };
    let joint = model.enumerate_joint(limit).map_err(EvalError::from)?;
    let mut total = NeumaierSum::default();
    for (demands, prob) in joint {
        let lb = match mode {
            LbMode::Edge => clairvoyant_edge_lb(tree, &demands),
            LbMode::Partition => search(tree, &demands, costs.clone())?.cost,
        };
        total.add(prob * lb);
    }
    Ok(total.value())
}

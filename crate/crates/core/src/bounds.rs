//! Lower bounds on the optimum and closed-form upper bounds on the policies.

use serde::{Deserialize, Serialize};

use crate::demand::DemandModel;
use crate::policy::{Policy, RunTrace};
use crate::tree::{TreeInstance, DEPOT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    /// `2S`, the refill-free depth-first walk.
    pub tour_floor: f64,
    /// `(2/Q) Σ d(0,i) E[D_i]`.
    pub bertsimas: f64,
    /// `max(tour_floor, bertsimas)`; the denominator of every reported ratio.
    pub combined_lb: f64,
    /// Expected split cost bound, `tour_floor + bertsimas`.
    pub split_ub: f64,
    /// Expected unsplit cost bound, `tour_floor + 2 * bertsimas`.
    pub unsplit_ub: f64,
}

impl BoundSet {
    pub fn formula_ub(&self, policy: Policy) -> f64 {
        match policy {
            Policy::Split => self.split_ub,
            Policy::Unsplit => self.unsplit_ub,
        }
    }
}

/// `(2/Q) Σ_i d(0,i) E[D_i]`.
pub fn bertsimas_lb(tree: &TreeInstance, model: &DemandModel) -> f64 {
    let weighted: f64 = model
        .expectations()
        .iter()
        .enumerate()
        .map(|(i, e)| tree.depot_dist_unchecked(i + 1) * e)
        .sum();
    2.0 / f64::from(tree.capacity()) * weighted
}

pub fn tour_floor(tree: &TreeInstance) -> f64 {
    2.0 * tree.total_length()
}

pub fn bound_set(tree: &TreeInstance, model: &DemandModel) -> BoundSet {
    let tour_floor = tour_floor(tree);
    let bertsimas = bertsimas_lb(tree, model);
    BoundSet {
        tour_floor,
        bertsimas,
        combined_lb: tour_floor.max(bertsimas),
        split_ub: tour_floor + bertsimas,
        unsplit_ub: tour_floor + 2.0 * bertsimas,
    }
}

/// `(2/Q) Σ_j d(0, w_j) · units_j` over the tours of a run. Never exceeds the
/// run's length: each tour is a closed walk through `w_j` carrying at most `Q`.
pub fn trace_certificate(trace: &RunTrace, tree: &TreeInstance) -> f64 {
    let sum: f64 = trace
        .tours
        .iter()
        .filter(|t| t.farthest != DEPOT)
        .map(|t| tree.depot_dist_unchecked(t.farthest) * f64::from(t.load_dispatched))
        .sum();
    2.0 / f64::from(tree.capacity()) * sum
}

/// `Σ_e 2·max(1, ⌈D_e/Q⌉)·len(e)`, where `D_e` is the demand in the subtree
/// below edge `e`. Bounds every solution for these demands, clairvoyant or not.
///
/// `demands[v - 1]` is the demand of customer `v`.
pub fn clairvoyant_edge_lb(tree: &TreeInstance, demands: &[u32]) -> f64 {
    let below = subtree_demands(tree, demands);
    let cap = u64::from(tree.capacity());
    (1..tree.vertex_count())
        .map(|v| {
            let crossings = below[v].div_ceil(cap).max(1);
            2.0 * crossings as f64 * tree.edge_length(v).expect("vertex in range")
        })
        .sum()
}

/// Total demand in each vertex's subtree, itself included.
fn subtree_demands(tree: &TreeInstance, demands: &[u32]) -> Vec<u64> {
    let mut below = vec![0u64; tree.vertex_count()];
    // Reverse preorder visits every child before its parent.
    for &v in tree.dfs_order().as_slice().iter().rev() {
        below[v] += u64::from(demands[v - 1]);
        let p = tree.parent(v).expect("vertex in range");
        below[p] += below[v];
    }
    below
}

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use treevrpsd::{DemandModel, DemandPmf, TreeInstance};

/// Edge lengths that are exact in binary, so path sums carry no rounding.
pub const DYADIC_LENGTHS: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0];

/// Random-attachment tree on `n` customers with dyadic lengths.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, capacity: u32) -> TreeInstance {
    let edges: Vec<_> = (1..=n)
        .map(|v| (rng.gen_range(0..v), v, *DYADIC_LENGTHS.choose(rng).unwrap()))
        .collect();
    TreeInstance::build(&edges, i64::from(capacity)).unwrap()
}

/// Tree with arbitrary real lengths in `[0.01, 10)`.
pub fn random_real_tree<R: Rng>(rng: &mut R, n: usize, capacity: u32) -> TreeInstance {
    let edges: Vec<_> = (1..=n)
        .map(|v| (rng.gen_range(0..v), v, rng.gen_range(0.01..10.0)))
        .collect();
    TreeInstance::build(&edges, i64::from(capacity)).unwrap()
}

/// Random pmf on a random subset of `1..=Q` of size at most `max_support`.
pub fn random_pmf<R: Rng>(rng: &mut R, capacity: u32, max_support: usize) -> DemandPmf {
    let mut values: Vec<u32> = (1..=capacity).collect();
    values.shuffle(rng);
    let k = rng.gen_range(1..=max_support.min(values.len()));
    let weights: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=8)).collect();
    let total: u32 = weights.iter().sum();
    let entries: Vec<(i64, f64)> = values[..k]
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| (i64::from(v), f64::from(w) / f64::from(total)))
        .collect();
    DemandPmf::new(&entries, capacity).unwrap()
}

pub fn random_model<R: Rng>(rng: &mut R, n: usize, capacity: u32, max_support: usize) -> DemandModel {
    let pmfs = (0..n).map(|_| random_pmf(rng, capacity, max_support)).collect();
    DemandModel::new(pmfs, capacity).unwrap()
}

/// Every vector in `1..=Q` to the `n`.
pub fn all_demand_vectors(n: usize, capacity: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=capacity).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out
}

/// Tree distance by walking an undirected adjacency list; shares no code
/// with the library's ancestor-based metric.
pub fn brute_distance(tree: &TreeInstance, a: usize, b: usize) -> f64 {
    let n = tree.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for (p, c, len) in tree.edges() {
        adj[p].push((c, len));
        adj[c].push((p, len));
    }
    let mut dist = vec![f64::NAN; n];
    dist[a] = 0.0;
    let mut stack = vec![a];
    while let Some(u) = stack.pop() {
        for &(w, len) in &adj[u] {
            if dist[w].is_nan() {
                dist[w] = dist[u] + len;
                stack.push(w);
            }
        }
    }
    dist[b]
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

//! Rooted, edge-weighted tree networks with the depot at vertex 0.
//!
//! A [`TreeInstance`] is immutable once built. It caches depot distances,
//! depths and the total edge length `S`, so every metric query is a walk up
//! the parent chain at worst.

use thiserror::Error;

/// Vertex index. The depot is always `0`, customers are `1..=n`.
pub type Vertex = usize;

/// The depot vertex.
pub const DEPOT: Vertex = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("edges do not form a single tree rooted at 0: {0}")]
    CycleOrForest(String),
    #[error("edge ({parent}, {child}) has non-positive length {length}")]
    NonpositiveLength {
        parent: Vertex,
        child: Vertex,
        length: f64,
    },
    #[error("capacity must be at least 1, got {0}")]
    BadCapacity(i64),
    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),
    #[error("not a depth-first preorder of this tree: {0}")]
    InvalidOrder(String),
}

/// A tree edge as it appears in input: `(parent, child, length)`.
pub type Edge = (Vertex, Vertex, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct TreeInstance {
    parent: Vec<Vertex>,
    edge_length: Vec<f64>,
    children: Vec<Vec<Vertex>>,
    depth: Vec<usize>,
    depot_dist: Vec<f64>,
    total_length: f64,
    capacity: u32,
}

impl TreeInstance {
    /// Validates `edges` and precomputes depot distances and `S`.
    ///
    /// Vertices must be named `0..=n` where `n = edges.len()`; every vertex
    /// except the depot appears exactly once as a child.
    pub fn build(edges: &[Edge], capacity: i64) -> Result<Self, TreeError> {
        if capacity < 1 || capacity > u32::MAX as i64 {
            return Err(TreeError::BadCapacity(capacity));
        }
        let vertex_count = edges.len() + 1;
        let mut parent: Vec<Option<Vertex>> = vec![None; vertex_count];
        let mut edge_length = vec![0.0; vertex_count];
        for &(p, c, len) in edges {
            if c == DEPOT {
                return Err(TreeError::CycleOrForest(
                    "the depot cannot be a child".into(),
                ));
            }
            if p >= vertex_count || c >= vertex_count {
                return Err(TreeError::CycleOrForest(format!(
                    "edge ({p}, {c}) names a vertex outside 0..={}",
                    vertex_count - 1
                )));
            }
            if p == c {
                return Err(TreeError::CycleOrForest(format!("self-loop at {c}")));
            }
            if !len.is_finite() || len <= 0.0 {
                return Err(TreeError::NonpositiveLength {
                    parent: p,
                    child: c,
                    length: len,
                });
            }
            if parent[c].is_some() {
                return Err(TreeError::CycleOrForest(format!(
                    "vertex {c} has more than one parent"
                )));
            }
            parent[c] = Some(p);
            edge_length[c] = len;
        }

        let parent: Vec<Vertex> = parent
            .into_iter()
            .enumerate()
            .map(|(v, p)| if v == DEPOT { DEPOT } else { p.expect("n edges, n distinct children") })
            .collect();

        let mut children = vec![Vec::new(); vertex_count];
        for v in 1..vertex_count {
            children[parent[v]].push(v);
        }
        for list in &mut children {
            list.sort_unstable();
        }

        // Breadth-first from the depot; anything unreached sits on a cycle.
        let mut depth = vec![usize::MAX; vertex_count];
        let mut depot_dist = vec![0.0; vertex_count];
        depth[DEPOT] = 0;
        let mut queue = std::collections::VecDeque::from([DEPOT]);
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                depth[c] = depth[u] + 1;
                depot_dist[c] = depot_dist[u] + edge_length[c];
                reached += 1;
                queue.push_back(c);
            }
        }
        if reached != vertex_count {
            return Err(TreeError::CycleOrForest(format!(
                "{} vertices are not connected to the depot",
                vertex_count - reached
            )));
        }

        let total_length = edge_length.iter().sum();
        Ok(Self {
            parent,
            edge_length,
            children,
            depth,
            depot_dist,
            total_length,
            capacity: capacity as u32,
        })
    }

    /// Number of vertices including the depot (`n + 1`).
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    /// Number of customers `n`.
    pub fn customer_count(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// `S`, the sum of all edge lengths.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn parent(&self, v: Vertex) -> Result<Vertex, TreeError> {
        self.check(v)?;
        Ok(self.parent[v])
    }

    /// Length of the edge from `v` to its parent; `0` for the depot.
    pub fn edge_length(&self, v: Vertex) -> Result<f64, TreeError> {
        self.check(v)?;
        Ok(self.edge_length[v])
    }

    /// Children of `v` in ascending index order.
    pub fn children(&self, v: Vertex) -> Result<&[Vertex], TreeError> {
        self.check(v)?;
        Ok(&self.children[v])
    }

    /// Edges as `(parent, child, length)`, sorted by child.
    pub fn edges(&self) -> Vec<Edge> {
        (1..self.vertex_count())
            .map(|c| (self.parent[c], c, self.edge_length[c]))
            .collect()
    }

    pub fn depot_distance(&self, v: Vertex) -> Result<f64, TreeError> {
        self.check(v)?;
        Ok(self.depot_dist[v])
    }

    pub fn lca(&self, a: Vertex, b: Vertex) -> Result<Vertex, TreeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lca_unchecked(a, b))
    }

    pub fn path_distance(&self, a: Vertex, b: Vertex) -> Result<f64, TreeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.dist(a, b))
    }

    /// `true` if `a` lies on the depot path of `b` (a vertex is its own ancestor).
    pub fn is_ancestor(&self, a: Vertex, b: Vertex) -> Result<bool, TreeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.is_ancestor_unchecked(a, b))
    }

    /// Depth-first preorder with children explored in ascending index order.
    pub fn dfs_order(&self) -> VisitOrder {
        let mut sequence = Vec::with_capacity(self.customer_count());
        let mut stack: Vec<Vertex> = self.children[DEPOT].iter().rev().copied().collect();
        while let Some(v) = stack.pop() {
            sequence.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        VisitOrder { sequence }
    }

    /// Length of the closed walk `0, order..., 0` under the tree metric.
    pub fn closed_walk_length(&self, order: &VisitOrder) -> Result<f64, TreeError> {
        self.validate_order(&order.sequence)?;
        let mut prev = DEPOT;
        let mut total = 0.0;
        for &v in order.sequence.iter().chain(std::iter::once(&DEPOT)) {
            total += self.dist(prev, v);
            prev = v;
        }
        Ok(total)
    }

    /// Checks that `sequence` is a permutation of the customers and a
    /// depth-first preorder: each vertex's parent lies on the depot path of
    /// the vertex visited just before it.
    pub fn validate_order(&self, sequence: &[Vertex]) -> Result<(), TreeError> {
        let n = self.customer_count();
        if sequence.len() != n {
            return Err(TreeError::InvalidOrder(format!(
                "expected {n} customers, got {}",
                sequence.len()
            )));
        }
        let mut seen = vec![false; n + 1];
        let mut prev = DEPOT;
        for &v in sequence {
            if v == DEPOT || v > n {
                return Err(TreeError::InvalidOrder(format!("{v} is not a customer")));
            }
            if seen[v] {
                return Err(TreeError::InvalidOrder(format!("{v} appears twice")));
            }
            seen[v] = true;
            if !self.is_ancestor_unchecked(self.parent[v], prev) {
                return Err(TreeError::InvalidOrder(format!(
                    "{v} visited before its parent {} or after leaving its subtree",
                    self.parent[v]
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// Wraps `sequence` as a [`VisitOrder`] after validation.
    pub fn visit_order(&self, sequence: Vec<Vertex>) -> Result<VisitOrder, TreeError> {
        self.validate_order(&sequence)?;
        Ok(VisitOrder { sequence })
    }

    /// Bitmask per vertex of the customers in its subtree (itself included).
    /// Only meaningful for trees with at most 64 customers.
    pub(crate) fn subtree_masks(&self) -> Vec<u64> {
        let mut masks = vec![0u64; self.vertex_count()];
        let mut by_depth: Vec<Vertex> = (0..self.vertex_count()).collect();
        by_depth.sort_by_key(|&v| std::cmp::Reverse(self.depth[v]));
        for v in by_depth {
            if v != DEPOT {
                masks[v] |= 1u64 << (v - 1);
                let p = self.parent[v];
                masks[p] |= masks[v];
            }
        }
        masks
    }

    pub(crate) fn dist(&self, a: Vertex, b: Vertex) -> f64 {
        if a == b {
            return 0.0;
        }
        let m = self.lca_unchecked(a, b);
        self.depot_dist[a] + self.depot_dist[b] - 2.0 * self.depot_dist[m]
    }

    pub(crate) fn depot_dist_unchecked(&self, v: Vertex) -> f64 {
        self.depot_dist[v]
    }

    fn lca_unchecked(&self, mut a: Vertex, mut b: Vertex) -> Vertex {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    fn is_ancestor_unchecked(&self, a: Vertex, mut b: Vertex) -> bool {
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        a == b
    }

    fn check(&self, v: Vertex) -> Result<(), TreeError> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(TreeError::UnknownVertex(v))
        }
    }
}

/// The a priori visiting sequence of customers (depot implicit at both ends).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitOrder {
    sequence: Vec<Vertex>,
}

impl VisitOrder {
    pub fn as_slice(&self) -> &[Vertex] {
        &self.sequence
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Position (0-based) of each customer in the sequence, indexed by vertex.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![usize::MAX; self.sequence.len() + 1];
        for (i, &v) in self.sequence.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> TreeInstance {
        TreeInstance::build(&[(0, 1, 1.0), (1, 2, 1.0)], 2).unwrap()
    }

    #[test]
    fn single_edge() {
        let t = TreeInstance::build(&[(0, 1, 1.0)], 2).unwrap();
        assert_eq!(t.total_length(), 1.0);
        assert_eq!(t.depot_distance(1).unwrap(), 1.0);
        assert_eq!(t.closed_walk_length(&t.dfs_order()).unwrap(), 2.0);
    }

    #[test]
    fn path_sums() {
        let t = path2();
        assert_eq!(t.total_length(), 2.0);
        assert_eq!(t.depot_distance(2).unwrap(), 2.0);
        assert_eq!(t.depot_distance(0).unwrap(), 0.0);
        assert_eq!(t.path_distance(1, 2).unwrap(), 1.0);
        assert_eq!(t.path_distance(2, 2).unwrap(), 0.0);
        assert_eq!(t.dfs_order().as_slice(), &[1, 2]);
        assert_eq!(t.closed_walk_length(&t.dfs_order()).unwrap(), 4.0);
    }

    #[test]
    fn duplicate_child_is_rejected() {
        let err = TreeInstance::build(&[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], 2);
        assert!(matches!(err, Err(TreeError::CycleOrForest(_))));
    }

    #[test]
    fn cycle_is_rejected() {
        // 1 and 2 parent each other; 3 hangs off the depot.
        let err = TreeInstance::build(&[(2, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0)], 2);
        assert!(matches!(err, Err(TreeError::CycleOrForest(_))));
    }

    #[test]
    fn depot_as_child_is_rejected() {
        let err = TreeInstance::build(&[(1, 0, 1.0)], 2);
        assert!(matches!(err, Err(TreeError::CycleOrForest(_))));
    }

    #[test]
    fn bad_length_and_capacity() {
        assert!(matches!(
            TreeInstance::build(&[(0, 1, 0.0)], 2),
            Err(TreeError::NonpositiveLength { .. })
        ));
        assert!(matches!(
            TreeInstance::build(&[(0, 1, f64::NAN)], 2),
            Err(TreeError::NonpositiveLength { .. })
        ));
        assert_eq!(
            TreeInstance::build(&[(0, 1, 1.0)], 0),
            Err(TreeError::BadCapacity(0))
        );
    }

    #[test]
    fn star_distances() {
        let t = TreeInstance::build(&[(0, 1, 1.0), (0, 2, 2.0), (0, 3, 2.5)], 1).unwrap();
        assert_eq!(t.depot_distance(3).unwrap(), 2.5);
        assert_eq!(t.path_distance(1, 2).unwrap(), 3.0);
        assert_eq!(t.depot_distance(4), Err(TreeError::UnknownVertex(4)));
        assert_eq!(t.path_distance(0, 9), Err(TreeError::UnknownVertex(9)));
    }

    #[test]
    fn dfs_ascending_children() {
        let t = TreeInstance::build(&[(0, 2, 1.0), (0, 1, 1.0), (1, 3, 1.0)], 2).unwrap();
        assert_eq!(t.dfs_order().as_slice(), &[1, 3, 2]);
    }

    #[test]
    fn depot_only() {
        let t = TreeInstance::build(&[], 3).unwrap();
        assert!(t.dfs_order().is_empty());
        assert_eq!(t.total_length(), 0.0);
        assert_eq!(t.closed_walk_length(&t.dfs_order()).unwrap(), 0.0);
    }

    #[test]
    fn closed_walk_branching() {
        let t = TreeInstance::build(&[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0)], 2).unwrap();
        let order = t.visit_order(vec![1, 2, 3]).unwrap();
        // 0->1, 1->2, 2->3 via the depot, 3->0.
        let brute: f64 = [(0, 1), (1, 2), (2, 3), (3, 0)]
            .iter()
            .map(|&(a, b)| t.path_distance(a, b).unwrap())
            .sum();
        assert_eq!(brute, 6.0);
        assert_eq!(t.closed_walk_length(&order).unwrap(), 6.0);
    }

    #[test]
    fn invalid_orders() {
        let t = TreeInstance::build(&[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0)], 2).unwrap();
        // child before parent
        assert!(t.visit_order(vec![2, 1, 3]).is_err());
        // leaves 1's subtree and comes back
        assert!(t.visit_order(vec![1, 3, 2]).is_err());
        assert!(t.visit_order(vec![1, 2]).is_err());
        assert!(t.visit_order(vec![1, 1, 3]).is_err());
        assert!(t.visit_order(vec![3, 1, 2]).is_ok());
    }
}

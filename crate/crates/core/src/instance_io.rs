//! JSON instance documents and seeded instance generation.
//!
//! ```json
//! {
//!   "name": "e1",
//!   "capacity": 2,
//!   "edges": [[0, 1, 1.0], [1, 2, 1.0]],
//!   "demands": [{"node": 1, "pmf": {"1": 1.0}}, {"node": 2, "pmf": {"1": 1.0}}]
//! }
//! ```
//!
//! Serialization is canonical: fixed key order, edges sorted by child,
//! demands sorted by node, pmf keys ascending.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{DemandError, DemandModel, DemandPmf};
use crate::tree::{TreeError, TreeInstance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("edges: {0}")]
    Tree(#[from] TreeError),
    #[error("{field}: {source}")]
    Demand {
        field: String,
        #[source]
        source: DemandError,
    },
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

/// A named, validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub tree: TreeInstance,
    pub model: DemandModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: String,
    capacity: i64,
    edges: Vec<(i64, i64, f64)>,
    demands: Vec<DemandEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandEntry {
    node: i64,
    pmf: BTreeMap<i64, f64>,
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => InstanceError::Schema(e.to_string()),
            _ => InstanceError::Syntax(e.to_string()),
        }
    })?;

    let mut edges = Vec::with_capacity(doc.edges.len());
    for (i, &(p, c, len)) in doc.edges.iter().enumerate() {
        if p < 0 || c < 0 {
            return Err(InstanceError::Schema(format!(
                "edges[{i}]: vertex indices must be non-negative"
            )));
        }
        edges.push((p as usize, c as usize, len));
    }
    let tree = TreeInstance::build(&edges, doc.capacity)?;
    let cap = tree.capacity();
    let n = tree.customer_count();

    let mut pmfs: Vec<Option<DemandPmf>> = vec![None; n];
    for (i, entry) in doc.demands.iter().enumerate() {
        if entry.node < 1 || entry.node as usize > n {
            return Err(InstanceError::Schema(format!(
                "demands[{i}].node: {} is not a customer in 1..={n}",
                entry.node
            )));
        }
        let slot = &mut pmfs[entry.node as usize - 1];
        if slot.is_some() {
            return Err(InstanceError::Schema(format!(
                "demands[{i}].node: customer {} listed twice",
                entry.node
            )));
        }
        let mass: Vec<(i64, f64)> = entry.pmf.iter().map(|(&k, &p)| (k, p)).collect();
        *slot = Some(
            DemandPmf::new(&mass, cap).map_err(|source| InstanceError::Demand {
                field: format!("demands[{i}].pmf"),
                source,
            })?,
        );
    }
    let pmfs = pmfs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| InstanceError::Schema(format!("no demand given for customer {}", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let model = DemandModel::new(pmfs, cap).expect("pmfs built with the tree capacity");
    Ok(Instance {
        name: doc.name,
        tree,
        model,
    })
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn serialize_instance(tree: &TreeInstance, model: &DemandModel, name: &str) -> String {
    let doc = Document {
        name: name.to_owned(),
        capacity: i64::from(tree.capacity()),
        edges: tree
            .edges()
            .into_iter()
            .map(|(p, c, l)| (p as i64, c as i64, l))
            .collect(),
        demands: model
            .pmfs()
            .iter()
            .enumerate()
            .map(|(i, pmf)| DemandEntry {
                node: i as i64 + 1,
                pmf: pmf.support().iter().map(|&(k, p)| (i64::from(k), p)).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document is always serializable");
    out.push('\n');
    out
}

impl Instance {
    pub fn to_json(&self) -> String {
        serialize_instance(&self.tree, &self.model, &self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Path,
    Star,
    RandomAttachment,
    /// Spine path of `ceil(n/2)` vertices with the rest hung off random spine vertices.
    Caterpillar,
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Topology::Path),
            "star" => Ok(Topology::Star),
            "random-attachment" | "random" => Ok(Topology::RandomAttachment),
            "caterpillar" => Ok(Topology::Caterpillar),
            other => Err(format!(
                "unknown topology `{other}` (path, star, random-attachment, caterpillar)"
            )),
        }
    }
}

/// Demand family shared by all generated customers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PmfFamily {
    Deterministic(u32),
    UniformRange(u32, u32),
    /// `k1` with probability `p1`, otherwise `k2`.
    TwoPoint(u32, f64, u32),
}

impl PmfFamily {
    pub fn pmf(&self, capacity: u32) -> Result<DemandPmf, DemandError> {
        match *self {
            PmfFamily::Deterministic(k) => DemandPmf::point(k, capacity),
            PmfFamily::UniformRange(lo, hi) => DemandPmf::uniform(lo, hi, capacity),
            PmfFamily::TwoPoint(k1, _, k2) if k1 == k2 => DemandPmf::point(k1, capacity),
            PmfFamily::TwoPoint(k1, p1, k2) => {
                DemandPmf::new(&[(i64::from(k1), p1), (i64::from(k2), 1.0 - p1)], capacity)
            }
        }
    }
}

/// Parses `det:<k>`, `unif:<lo>-<hi>` or `two:<k1>,<p1>,<k2>`.
impl FromStr for PmfFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad pmf family `{s}` (det:<k>, unif:<lo>-<hi>, two:<k1>,<p1>,<k2>)");
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let int = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
        match kind {
            "det" => Ok(PmfFamily::Deterministic(int(args)?)),
            "unif" => {
                let (lo, hi) = args.split_once('-').ok_or_else(bad)?;
                Ok(PmfFamily::UniformRange(int(lo)?, int(hi)?))
            }
            "two" => {
                let parts: Vec<&str> = args.split(',').collect();
                let [k1, p1, k2] = parts[..] else {
                    return Err(bad());
                };
                let p1 = p1.trim().parse::<f64>().map_err(|_| bad())?;
                Ok(PmfFamily::TwoPoint(int(k1)?, p1, int(k2)?))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PmfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmfFamily::Deterministic(k) => write!(f, "det:{k}"),
            PmfFamily::UniformRange(lo, hi) => write!(f, "unif:{lo}-{hi}"),
            PmfFamily::TwoPoint(k1, p1, k2) => write!(f, "two:{k1},{p1},{k2}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub name: String,
    pub n: i64,
    pub capacity: i64,
    pub topology: Topology,
    /// Edge lengths are uniform on `[low, high)`, or exactly `low` when equal.
    pub length_range: (f64, f64),
    pub pmf: PmfFamily,
    pub seed: u64,
}

pub fn generate(params: &GeneratorParams) -> Result<Instance, InstanceError> {
    let bad = |m: String| InstanceError::BadParams(m);
    if params.n < 0 {
        return Err(bad(format!("n must be non-negative, got {}", params.n)));
    }
    if params.capacity < 1 || params.capacity > i64::from(u32::MAX) {
        return Err(bad(format!("capacity must be at least 1, got {}", params.capacity)));
    }
    let (low, high) = params.length_range;
    if !low.is_finite() || low <= 0.0 || !high.is_finite() || high < low {
        return Err(bad(format!("length range [{low}, {high}] must satisfy 0 < low <= high")));
    }
    let cap = params.capacity as u32;
    let pmf = params
        .pmf
        .pmf(cap)
        .map_err(|e| bad(format!("pmf {}: {e}", params.pmf)))?;

    let n = params.n as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let spine = n.div_ceil(2);
    let mut edges = Vec::with_capacity(n);
    for v in 1..=n {
        let parent = match params.topology {
            Topology::Path => v - 1,
            Topology::Star => 0,
            Topology::RandomAttachment => rng.gen_range(0..v),
            Topology::Caterpillar if v <= spine => v - 1,
            Topology::Caterpillar => rng.gen_range(1..=spine),
        };
        let length = if low == high {
            low
        } else {
            rng.gen_range(low..high)
        };
        edges.push((parent, v, length));
    }
    let tree = TreeInstance::build(&edges, params.capacity)?;
    let model = DemandModel::new(vec![pmf; n], cap).expect("pmf built with capacity");
    Ok(Instance {
        name: params.name.clone(),
        tree,
        model,
    })
}

//! Vehicle routing with stochastic demands on tree networks.
//!
//! The vehicle follows a fixed depth-first visiting order and starts with a
//! uniformly random initial load `l ∈ {1..Q}`. Refills happen only when the
//! load runs out (exactly or with a shortfall), which makes every customer a
//! refill point with probability `q_i / Q`. The crate runs the split and
//! unsplit variants of this policy, evaluates their expected cost exactly or
//! by Monte Carlo, and checks them against lower bounds and brute-force
//! clairvoyant optima.

pub mod bounds;
pub mod demand;
pub mod evaluator;
pub mod instance_io;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod sum;
pub mod tree;

pub use bounds::{bertsimas_lb, bound_set, clairvoyant_edge_lb, tour_floor, trace_certificate, BoundSet};
pub use demand::{DemandError, DemandModel, DemandPmf, Realization, TooLarge, DEFAULT_ENUM_LIMIT};
pub use evaluator::{
    evaluate, exact_expected_cost, monte_carlo_cost, EvalError, EvalMode, EvalReport, Estimate, Method,
};
pub use instance_io::{
    generate, parse_instance, serialize_instance, GeneratorParams, Instance, InstanceError, PmfFamily,
    Topology,
};
pub use oracle::{expected_clairvoyant_lb, optimal_unsplit_partition, LbMode, OracleError, PartitionSolution};
pub use policy::{
    arithmetic_breakpoints, breakpoint_probability_exact, run, run_length, run_split, run_unsplit, Policy,
    RunTrace, ServiceEvent, Tour,
};
pub use tree::{TreeError, TreeInstance, Vertex, VisitOrder, DEPOT};

/// Environment variable overriding [`DEFAULT_ENUM_LIMIT`].
pub const ENUM_LIMIT_VAR: &str = "TREEVRPSD_ENUM_LIMIT";

/// Enumeration cap from `TREEVRPSD_ENUM_LIMIT`, or the default when unset.
pub fn enum_limit_from_env() -> Result<u64, String> {
    match std::env::var(ENUM_LIMIT_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{ENUM_LIMIT_VAR}={v} is not a non-negative integer")),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_ENUM_LIMIT),
        Err(e) => Err(format!("{ENUM_LIMIT_VAR}: {e}")),
    }
}

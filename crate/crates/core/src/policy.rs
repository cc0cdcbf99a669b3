//! Execution of the randomized-initial-load a priori policies on one realization.
//!
//! Both policies walk the customers in a fixed depth-first order starting
//! with `l` units on board. At customer `i` holding `U` units with demand `q`:
//!
//! * `q < U`: serve and continue.
//! * `q == U`: serve, then refill at the depot before the next customer.
//! * `q > U`: a breakpoint with a shortfall. The split policy serves `U`,
//!   fetches a full load and serves the remaining `q - U`. The unsplit policy
//!   fetches exactly `q`, serves it in one delivery, and makes a second depot
//!   trip to come back with `Q + U - q`.
//!
//! Either way the vehicle leaves a shortfall customer carrying `Q - (q - U)`,
//! so the two policies hit identical breakpoints. No refill is fetched after
//! the last customer.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::Realization;
use crate::tree::{TreeInstance, Vertex, VisitOrder, DEPOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Split,
    Unsplit,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::Split, Policy::Unsplit];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Split => "split",
            Policy::Unsplit => "unsplit",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "split" => Ok(Policy::Split),
            "unsplit" => Ok(Policy::Unsplit),
            other => Err(format!("unknown policy `{other}` (expected split or unsplit)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("realization inconsistent with instance: {0}")]
pub struct InconsistentRealization(pub String);

/// Which refill rule fired at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakpointCase {
    /// Demand used up the load exactly.
    Exhausted,
    /// Demand exceeded the load.
    Shortfall,
}

impl BreakpointCase {
    fn code(self) -> char {
        match self {
            BreakpointCase::Exhausted => 'c',
            BreakpointCase::Shortfall => 'd',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceEvent {
    pub customer: Vertex,
    pub delivered: u32,
    pub load_before: u32,
    pub load_after: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Movement {
    pub from: Vertex,
    pub to: Vertex,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    Move(Movement),
    Serve(ServiceEvent),
    Breakpoint {
        customer: Vertex,
        case: BreakpointCase,
    },
}

/// Segment of the walk between a depot departure and the next depot arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub customers_served: Vec<(Vertex, u32)>,
    pub load_dispatched: u32,
    /// Customer of maximal depot distance among those served (first on ties).
    pub farthest: Vertex,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub policy: Policy,
    pub events: Vec<TraceEvent>,
    pub breakpoints: BTreeSet<Vertex>,
    pub tours: Vec<Tour>,
    /// Load on board when arriving at each customer, in visiting order.
    pub arrival_loads: Vec<u32>,
    pub total_length: f64,
}

impl RunTrace {
    pub fn movements(&self) -> impl Iterator<Item = &Movement> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Move(m) => Some(m),
            _ => None,
        })
    }

    pub fn services(&self) -> impl Iterator<Item = &ServiceEvent> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Serve(s) => Some(s),
            _ => None,
        })
    }

    /// Line-oriented dump: `MOVE from to dist`, `SERVE node units before after`,
    /// `BREAKPOINT node case`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            match e {
                TraceEvent::Move(m) => writeln!(out, "MOVE {} {} {}", m.from, m.to, m.distance),
                TraceEvent::Serve(s) => writeln!(
                    out,
                    "SERVE {} {} {} {}",
                    s.customer, s.delivered, s.load_before, s.load_after
                ),
                TraceEvent::Breakpoint { customer, case } => {
                    writeln!(out, "BREAKPOINT {} {}", customer, case.code())
                }
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Observer of a policy run.
trait Recorder {
    fn travel(&mut self, from: Vertex, to: Vertex, distance: f64);
    fn arrive(&mut self, _customer: Vertex, _load: u32) {}
    fn serve(&mut self, _event: ServiceEvent) {}
    fn breakpoint(&mut self, _customer: Vertex, _case: BreakpointCase) {}
}

#[derive(Default)]
struct LengthOnly {
    total: f64,
}

impl Recorder for LengthOnly {
    fn travel(&mut self, _from: Vertex, _to: Vertex, distance: f64) {
        self.total += distance;
    }
}

struct TraceBuilder<'t> {
    tree: &'t TreeInstance,
    trace: RunTrace,
    open: Option<Tour>,
}

impl<'t> TraceBuilder<'t> {
    fn new(tree: &'t TreeInstance, policy: Policy) -> Self {
        Self {
            tree,
            trace: RunTrace {
                policy,
                events: Vec::new(),
                breakpoints: BTreeSet::new(),
                tours: Vec::new(),
                arrival_loads: Vec::new(),
                total_length: 0.0,
            },
            open: None,
        }
    }

    fn finish(mut self) -> RunTrace {
        if let Some(t) = self.open.take() {
            self.trace.tours.push(t);
        }
        self.trace
    }
}

impl Recorder for TraceBuilder<'_> {
    fn travel(&mut self, from: Vertex, to: Vertex, distance: f64) {
        self.trace.total_length += distance;
        self.trace
            .events
            .push(TraceEvent::Move(Movement { from, to, distance }));
        let tour = self.open.get_or_insert_with(|| Tour {
            customers_served: Vec::new(),
            load_dispatched: 0,
            farthest: DEPOT,
            length: 0.0,
        });
        tour.length += distance;
        if to == DEPOT {
            let t = self.open.take().expect("tour opened above");
            self.trace.tours.push(t);
        }
    }

    fn arrive(&mut self, _customer: Vertex, load: u32) {
        self.trace.arrival_loads.push(load);
    }

    fn serve(&mut self, event: ServiceEvent) {
        self.trace.events.push(TraceEvent::Serve(event));
        let tree = self.tree;
        let tour = self.open.as_mut().expect("service happens away from the depot");
        tour.customers_served.push((event.customer, event.delivered));
        tour.load_dispatched += event.delivered;
        if tree.depot_dist_unchecked(event.customer) > tree.depot_dist_unchecked(tour.farthest) {
            tour.farthest = event.customer;
        }
    }

    fn breakpoint(&mut self, customer: Vertex, case: BreakpointCase) {
        self.trace.breakpoints.insert(customer);
        self.trace
            .events
            .push(TraceEvent::Breakpoint { customer, case });
    }
}

struct Vehicle<'a, R> {
    tree: &'a TreeInstance,
    at: Vertex,
    load: u32,
    rec: R,
}

impl<R: Recorder> Vehicle<'_, R> {
    fn go(&mut self, to: Vertex) {
        if to != self.at {
            let d = self.tree.dist(self.at, to);
            self.rec.travel(self.at, to, d);
            self.at = to;
        }
    }

    fn serve(&mut self, units: u32) {
        let before = self.load;
        self.load -= units;
        self.rec.serve(ServiceEvent {
            customer: self.at,
            delivered: units,
            load_before: before,
            load_after: self.load,
        });
    }
}

fn check_inputs(
    tree: &TreeInstance,
    order: &VisitOrder,
    r: &Realization,
) -> Result<(), InconsistentRealization> {
    let n = tree.customer_count();
    let cap = tree.capacity();
    if order.len() != n {
        return Err(InconsistentRealization(format!(
            "visit order has {} customers, tree has {n}",
            order.len()
        )));
    }
    if r.demands.len() != n {
        return Err(InconsistentRealization(format!(
            "{} demands for {n} customers",
            r.demands.len()
        )));
    }
    if let Some(i) = r.demands.iter().position(|&q| q == 0 || q > cap) {
        return Err(InconsistentRealization(format!(
            "demand {} of customer {} outside 1..={cap}",
            r.demands[i],
            i + 1
        )));
    }
    if r.initial_load == 0 || r.initial_load > cap {
        return Err(InconsistentRealization(format!(
            "initial load {} outside 1..={cap}",
            r.initial_load
        )));
    }
    Ok(())
}

fn execute<R: Recorder>(
    tree: &TreeInstance,
    order: &VisitOrder,
    r: &Realization,
    policy: Policy,
    rec: R,
) -> Result<R, InconsistentRealization> {
    check_inputs(tree, order, r)?;
    let cap = tree.capacity();
    let mut vehicle = Vehicle {
        tree,
        at: DEPOT,
        load: r.initial_load,
        rec,
    };
    let stops = order.as_slice();
    for (k, &v) in stops.iter().enumerate() {
        let last = k + 1 == stops.len();
        vehicle.go(v);
        let on_board = vehicle.load;
        vehicle.rec.arrive(v, on_board);
        let q = r.demand(v);
        if q < on_board {
            vehicle.serve(q);
        } else if q == on_board {
            vehicle.serve(q);
            vehicle.rec.breakpoint(v, BreakpointCase::Exhausted);
            if !last {
                vehicle.go(DEPOT);
                vehicle.load = cap;
            }
        } else {
            match policy {
                Policy::Split => {
                    vehicle.serve(on_board);
                    vehicle.rec.breakpoint(v, BreakpointCase::Shortfall);
                    vehicle.go(DEPOT);
                    vehicle.load = cap;
                    vehicle.go(v);
                    vehicle.serve(q - on_board);
                }
                Policy::Unsplit => {
                    vehicle.rec.breakpoint(v, BreakpointCase::Shortfall);
                    vehicle.go(DEPOT);
                    vehicle.load = q;
                    vehicle.go(v);
                    vehicle.serve(q);
                    if !last {
                        vehicle.go(DEPOT);
                        vehicle.load = cap + on_board - q;
                        vehicle.go(v);
                    }
                }
            }
        }
    }
    vehicle.go(DEPOT);
    Ok(vehicle.rec)
}

/// Runs `policy` and records the full walk.
pub fn run(
    tree: &TreeInstance,
    order: &VisitOrder,
    r: &Realization,
    policy: Policy,
) -> Result<RunTrace, InconsistentRealization> {
    execute(tree, order, r, policy, TraceBuilder::new(tree, policy)).map(TraceBuilder::finish)
}

pub fn run_split(
    tree: &TreeInstance,
    order: &VisitOrder,
    r: &Realization,
) -> Result<RunTrace, InconsistentRealization> {
    run(tree, order, r, Policy::Split)
}

pub fn run_unsplit(
    tree: &TreeInstance,
    order: &VisitOrder,
    r: &Realization,
) -> Result<RunTrace, InconsistentRealization> {
    run(tree, order, r, Policy::Unsplit)
}

/// Total walk length of one run, without building a trace.
pub fn run_length(
    tree: &TreeInstance,
    order: &VisitOrder,
    r: &Realization,
    policy: Policy,
) -> Result<f64, InconsistentRealization> {
    execute(tree, order, r, policy, LengthOnly::default()).map(|rec| rec.total)
}

/// Breakpoints predicted from prefix sums alone: position `i` (1-based, in
/// visiting order) is a breakpoint iff some `p >= 0` has
/// `q_1 + .. + q_{i-1} < l + p*Q <= q_1 + .. + q_i`.
pub fn arithmetic_breakpoints(demands: &[u32], initial_load: u32, capacity: u32) -> BTreeSet<usize> {
    let l = u64::from(initial_load);
    let cap = u64::from(capacity);
    let mut out = BTreeSet::new();
    let mut before = 0u64;
    for (i, &q) in demands.iter().enumerate() {
        let after = before + u64::from(q);
        // smallest l + p*Q strictly above `before`
        let next = if l > before {
            l
        } else {
            l + ((before - l) / cap + 1) * cap
        };
        if next <= after {
            out.insert(i + 1);
        }
        before = after;
    }
    out
}

/// Fraction of initial loads `l` in `1..=Q` for which position `i` is a breakpoint.
pub fn breakpoint_probability_exact(demands: &[u32], capacity: u32, i: usize) -> Ratio<u64> {
    let hits = (1..=capacity)
        .filter(|&l| arithmetic_breakpoints(demands, l, capacity).contains(&i))
        .count() as u64;
    Ratio::new(hits, u64::from(capacity))
}

mod common;

use std::collections::{BTreeSet, HashSet};

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treevrpsd::policy::TraceEvent;
use treevrpsd::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Checks every structural invariant of a trace; returns the vertices whose
/// arrival loads were recorded, in order.
fn check_trace(tree: &TreeInstance, order: &VisitOrder, r: &Realization, trace: &RunTrace) {
    let cap = tree.capacity();
    let n = tree.customer_count();

    // chained walk from depot to depot, distances match an independent metric
    let mut at = DEPOT;
    let mut total = 0.0;
    for m in trace.movements() {
        assert_eq!(m.from, at);
        assert_ne!(m.from, m.to);
        assert!(rel_close(m.distance, brute_distance(tree, m.from, m.to), 1e-12));
        total += m.distance;
        at = m.to;
    }
    assert_eq!(at, DEPOT);
    assert_eq!(total, trace.total_length);

    // loads and deliveries
    let mut delivered = vec![0u32; n + 1];
    let mut visits = vec![0usize; n + 1];
    for s in trace.services() {
        assert!(s.load_before <= cap && s.load_after <= cap);
        assert_eq!(s.load_after + s.delivered, s.load_before);
        assert!(s.delivered >= 1);
        delivered[s.customer] += s.delivered;
        visits[s.customer] += 1;
    }
    for v in 1..=n {
        assert_eq!(delivered[v], r.demand(v), "customer {v}");
        if trace.policy == Policy::Unsplit {
            assert_eq!(visits[v], 1, "customer {v} served more than once");
        }
    }
    assert_eq!(trace.arrival_loads.len(), n);
    assert!(trace.arrival_loads.iter().all(|&u| (1..=cap).contains(&u)));

    // tours
    for t in &trace.tours {
        assert!(t.load_dispatched <= cap);
        assert_eq!(t.load_dispatched, t.customers_served.iter().map(|c| c.1).sum::<u32>());
        let d_far = tree.depot_distance(t.farthest).unwrap();
        for &(c, _) in &t.customers_served {
            assert!(tree.depot_distance(c).unwrap() <= d_far);
        }
        assert!(t.length >= 2.0 * d_far - 1e-9 * t.length.max(1.0));
    }
    let tour_sum: f64 = trace.tours.iter().map(|t| t.length).sum();
    assert!(rel_close(tour_sum, trace.total_length, 1e-12));

    // breakpoints agree with prefix-sum arithmetic
    let q_in_order: Vec<u32> = order.as_slice().iter().map(|&v| r.demand(v)).collect();
    let predicted: BTreeSet<usize> = arithmetic_breakpoints(&q_in_order, r.initial_load, cap)
        .into_iter()
        .map(|i| order.as_slice()[i - 1])
        .collect();
    assert_eq!(trace.breakpoints, predicted);

    // refill detours are bounded by 2 (split) or 4 (unsplit) depot distances per breakpoint
    let per_break = match trace.policy {
        Policy::Split => 2.0,
        Policy::Unsplit => 4.0,
    };
    let detour_cap: f64 = trace
        .breakpoints
        .iter()
        .map(|&v| per_break * tree.depot_distance(v).unwrap())
        .sum();
    let extra = trace.total_length - 2.0 * tree.total_length();
    assert!(extra >= -1e-9 * trace.total_length.max(1.0));
    assert!(extra <= detour_cap + 1e-9 * trace.total_length.max(1.0));

    // lower-bound certificates
    assert!(trace_certificate(trace, tree) <= trace.total_length * (1.0 + 1e-12));
    assert!(clairvoyant_edge_lb(tree, &r.demands) <= trace.total_length * (1.0 + 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dfs_walk_is_twice_total_length(seed in any::<u64>(), n in 0usize..50) {
        let t = random_real_tree(&mut rng(seed), n, 1);
        let order = t.dfs_order();
        prop_assert!(t.validate_order(order.as_slice()).is_ok());
        prop_assert!(rel_close(t.closed_walk_length(&order).unwrap(), 2.0 * t.total_length(), 1e-9));
        for v in 0..=n {
            prop_assert!(t.depot_distance(v).unwrap() <= t.total_length() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tree_metric_axioms(seed in any::<u64>(), n in 0usize..12) {
        let t = random_real_tree(&mut rng(seed), n, 1);
        for a in 0..=n {
            for b in 0..=n {
                let ab = t.path_distance(a, b).unwrap();
                prop_assert!(rel_close(ab, brute_distance(&t, a, b), 1e-12));
                prop_assert_eq!(ab, t.path_distance(b, a).unwrap());
                for c in 0..=n {
                    let via = t.path_distance(a, c).unwrap() + t.path_distance(c, b).unwrap();
                    prop_assert!(ab <= via * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn joint_enumeration_is_a_distribution(seed in any::<u64>(), n in 0usize..6, cap in 1u32..5) {
        let m = random_model(&mut rng(seed), n, cap, 3);
        let all: Vec<_> = m.enumerate_joint(DEFAULT_ENUM_LIMIT).unwrap().collect();
        prop_assert_eq!(all.len() as u128, m.joint_size());
        let distinct: HashSet<_> = all.iter().map(|(q, _)| q.clone()).collect();
        prop_assert_eq!(distinct.len(), all.len());
        let total: f64 = all.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn traces_satisfy_invariants(seed in any::<u64>(), n in 0usize..9, cap in 1u32..7) {
        let mut g = rng(seed);
        let t = random_tree(&mut g, n, cap);
        let m = random_model(&mut g, n, cap, cap as usize);
        let order = t.dfs_order();
        for _ in 0..4 {
            let r = m.sample_realization(&mut g);
            let split = run_split(&t, &order, &r).unwrap();
            let unsplit = run_unsplit(&t, &order, &r).unwrap();
            check_trace(&t, &order, &r, &split);
            check_trace(&t, &order, &r, &unsplit);
            prop_assert_eq!(&split.breakpoints, &unsplit.breakpoints);
            prop_assert_eq!(&split.arrival_loads, &unsplit.arrival_loads);
            prop_assert!(split.total_length <= unsplit.total_length);
            if n <= 8 {
                let part = optimal_unsplit_partition(&t, &r.demands).unwrap();
                prop_assert!(part.cost <= unsplit.total_length * (1.0 + 1e-12));
                prop_assert!(clairvoyant_edge_lb(&t, &r.demands) <= part.cost * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bound_set_chains(seed in any::<u64>(), n in 0usize..20, cap in 1u32..10) {
        let mut g = rng(seed);
        let t = random_real_tree(&mut g, n, cap);
        let m = random_model(&mut g, n, cap, 4);
        let b = bound_set(&t, &m);
        prop_assert_eq!(b.combined_lb, b.tour_floor.max(b.bertsimas));
        prop_assert!(b.split_ub <= 2.0 * b.combined_lb * (1.0 + 1e-12));
        prop_assert!(b.unsplit_ub <= 3.0 * b.combined_lb * (1.0 + 1e-12));
    }

    #[test]
    fn bertsimas_is_monotone(seed in any::<u64>(), n in 1usize..10, cap in 2u32..8) {
        let mut g = rng(seed);
        let t = random_tree(&mut g, n, cap);
        let demands: Vec<u32> = (0..n).map(|i| 1 + (seed as u32).wrapping_add(i as u32) % (cap - 1)).collect();
        let base = bertsimas_lb(&t, &DemandModel::deterministic(&demands, cap).unwrap());
        for i in 0..n {
            let mut up = demands.clone();
            up[i] += 1;
            let raised = bertsimas_lb(&t, &DemandModel::deterministic(&up, cap).unwrap());
            prop_assert!(raised >= base);
        }
        // lengthening any edge lengthens every depot distance below it
        let mut edges = t.edges();
        edges[0].2 += 1.0;
        let longer = TreeInstance::build(&edges, i64::from(cap)).unwrap();
        prop_assert!(bertsimas_lb(&longer, &DemandModel::deterministic(&demands, cap).unwrap()) >= base);
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), n in 0usize..15, cap in 1u32..9) {
        let mut g = rng(seed);
        let t = random_real_tree(&mut g, n, cap);
        let m = random_model(&mut g, n, cap, 4);
        let text = serialize_instance(&t, &m, "rt");
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back.tree, &t);
        prop_assert_eq!(&back.model, &m);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn generated_instances_validate(seed in any::<u64>(), n in 0i64..30, topo in 0usize..4) {
        let topology = [Topology::Path, Topology::Star, Topology::RandomAttachment, Topology::Caterpillar][topo];
        let p = GeneratorParams {
            name: "g".into(),
            n,
            capacity: 4,
            topology,
            length_range: (0.5, 3.0),
            pmf: PmfFamily::TwoPoint(1, 0.3, 4),
            seed,
        };
        let inst = generate(&p).unwrap();
        let text = inst.to_json();
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
        prop_assert_eq!(generate(&p).unwrap().to_json(), text);
    }
}

#[test]
fn exact_split_never_exceeds_exact_unsplit() {
    let mut g = rng(77);
    for _ in 0..60 {
        let n = 1 + (rand::Rng::gen_range(&mut g, 0..5));
        let cap = rand::Rng::gen_range(&mut g, 1..6);
        let t = random_tree(&mut g, n, cap);
        let m = random_model(&mut g, n, cap, 3);
        let s = exact_expected_cost(&t, &m, Policy::Split, DEFAULT_ENUM_LIMIT).unwrap();
        let u = exact_expected_cost(&t, &m, Policy::Unsplit, DEFAULT_ENUM_LIMIT).unwrap();
        assert!(s <= u * (1.0 + 1e-12), "{s} > {u}");
    }
}

#[test]
fn sample_means_track_expectations() {
    let mut g = rng(5);
    let m = random_model(&mut g, 4, 6, 4);
    let samples = 100_000;
    let mut sums = [0.0f64; 4];
    for _ in 0..samples {
        let r = m.sample_realization(&mut g);
        for (s, &q) in sums.iter_mut().zip(&r.demands) {
            *s += f64::from(q);
        }
    }
    for (i, pmf) in m.pmfs().iter().enumerate() {
        let mean = pmf.expectation();
        let var: f64 = pmf.support().iter().map(|&(k, p)| p * (f64::from(k) - mean).powi(2)).sum();
        let sigma = (var / samples as f64).sqrt();
        let emp = sums[i] / samples as f64;
        assert!((emp - mean).abs() <= 4.0 * sigma + 1e-12, "customer {}: {emp} vs {mean}", i + 1);
    }
}

#[test]
fn initial_load_is_uniform() {
    let m = DemandModel::deterministic(&[1], 5).unwrap();
    let mut g = rng(8);
    let mut counts = [0u32; 6];
    for _ in 0..50_000 {
        counts[m.sample_realization(&mut g).initial_load as usize] += 1;
    }
    assert_eq!(counts[0], 0);
    for &c in &counts[1..] {
        // 10_000 expected, sd ~ 89
        assert!((c as i64 - 10_000).abs() < 450, "{counts:?}");
    }
}

#[test]
fn events_are_ordered_by_time() {
    let t = TreeInstance::build(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap();
    let trace = run_unsplit(&t, &t.dfs_order(), &Realization::new(vec![2, 2], 1)).unwrap();
    let first_serve = trace
        .events
        .iter()
        .position(|e| matches!(e, TraceEvent::Serve(_)))
        .unwrap();
    // unsplit shortfall: breakpoint, fetch round trip, then the single delivery
    assert!(matches!(trace.events[first_serve - 3], TraceEvent::Breakpoint { customer: 1, .. }));
}

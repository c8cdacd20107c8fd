//! Property tests for the structural guarantees the library trades on:
//! bound chains, stream ordering, objective consistency, monotonicity under
//! relaxation and restriction, and deterministic generation.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use gcs_tsp::bounds::TripletBounds;
use gcs_tsp::conic::{optimal_trajectory, triplet_lower_bound, TrajectoryCache};
use gcs_tsp::model::{trajectory_cost, GcsInstance};
use gcs_tsp::oracle;
use gcs_tsp::ordering::{best_order, OrderConstraints, OrderCosts, OrderOutcome};
use gcs_tsp::problems::{gen_bezier, gen_linear, gen_point};
use gcs_tsp::schema::{parse_instance, serialize_instance, validate_instance};
use gcs_tsp::solution::Status;
use gcs_tsp::solver::{solve, SolveOptions};
use gcs_tsp::stats::RunStats;
use gcs_tsp::unfold::unfold;

use common::*;

fn arb_points(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<[f64; 2]>> {
    n.prop_flat_map(|k| prop::collection::vec(prop::array::uniform2(-2.0f64..2.0), k))
}

/// The `idx`-th permutation of `0..n` in lexicographic order (mod n!).
fn nth_permutation(n: usize, mut idx: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut fact = 1usize;
    for i in 1..=n {
        fact *= i;
    }
    idx %= fact;
    let mut out = Vec::with_capacity(n);
    for i in (1..=n).rev() {
        fact /= i;
        out.push(pool.remove(idx / fact));
        idx %= fact;
    }
    out
}

/// A closed visit order over all of `0..n`, anchored at 0.
fn arb_order(n: usize, idx: usize) -> Vec<usize> {
    let mut order = vec![0];
    order.extend(nth_permutation(n - 1, idx).into_iter().map(|v| v + 1));
    order
}

/// A strongly connected sparse digraph: the forward ring plus chords picked
/// by the mask bits.
fn sparse_instance(points: &[[f64; 2]], mask: u32) -> GcsInstance {
    let n = points.len();
    let mut arcs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let mut bit = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j || (j == (i + 1) % n) {
                continue;
            }
            if mask >> (bit % 32) & 1 == 1 {
                arcs.push((i, j));
            }
            bit += 1;
        }
    }
    point_instance_with_edges("sparse", points, &arcs)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn trajectory_cost_is_nonnegative_and_convex(
        coords in prop::collection::vec(0.0f64..1.0, 16),
        lambda in 0.0f64..1.0,
    ) {
        let inst = box_instance("boxes", &[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], 1.0);
        let path = [0usize, 1, 2, 0];
        let boxed = |occ: usize, u: f64, v: f64| -> Vec<f64> {
            let c = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]][path[occ]];
            vec![c[0] - 1.0 + 2.0 * u, c[1] - 1.0 + 2.0 * v]
        };
        let t1: Vec<Vec<f64>> = (0..4).map(|i| boxed(i, coords[2 * i], coords[2 * i + 1])).collect();
        let t2: Vec<Vec<f64>> = (0..4).map(|i| boxed(i, coords[8 + 2 * i], coords[9 + 2 * i])).collect();
        let c1 = trajectory_cost(&inst, &path, &t1).unwrap();
        let c2 = trajectory_cost(&inst, &path, &t2).unwrap();
        prop_assert!(c1 >= 0.0 && c2 >= 0.0);
        let mix: Vec<Vec<f64>> = t1
            .iter()
            .zip(&t2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect())
            .collect();
        let cm = trajectory_cost(&inst, &path, &mix).unwrap();
        prop_assert!(
            cm <= lambda * c1 + (1.0 - lambda) * c2 + 1e-9,
            "mixed cost {cm} above the chord {}",
            lambda * c1 + (1.0 - lambda) * c2
        );
    }

    #[test]
    fn instance_serialization_round_trips_bit_exact(n in 3usize..=10, seed in 0u64..1 << 32) {
        let inst = gen_point(n, seed).unwrap();
        let once = serialize_instance(&inst);
        let again = serialize_instance(&parse_instance(&once).unwrap());
        prop_assert_eq!(once, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn reported_trajectory_objective_matches_the_cost_model(
        points in arb_points(3..=5),
        idx in any::<usize>(),
    ) {
        let inst = point_instance("pts", &points);
        let order = arb_order(points.len(), idx);
        let mut path = order.clone();
        path.push(order[0]);
        let (traj, reported) = optimal_trajectory(&inst, &path, true, None).unwrap();
        let recomputed = trajectory_cost(&inst, &path, &traj).unwrap();
        prop_assert!(
            (reported - recomputed).abs() <= 1e-6 * recomputed.abs().max(1.0),
            "objective {reported} vs cost model {recomputed}"
        );
    }

    #[test]
    fn passage_bound_never_exceeds_a_sampled_passage(coords in prop::collection::vec(0.0f64..1.0, 6)) {
        let inst = box_instance("boxes", &[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], 1.0);
        let sample = |b: usize, u: f64, v: f64| -> Vec<f64> {
            let c = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]][b];
            vec![c[0] - 1.0 + 2.0 * u, c[1] - 1.0 + 2.0 * v]
        };
        let (xu, xv, xw) = (
            sample(0, coords[0], coords[1]),
            sample(1, coords[2], coords[3]),
            sample(2, coords[4], coords[5]),
        );
        let dist = |a: &[f64], b: &[f64]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let sampled = 0.5 * dist(&xu, &xv) + 0.5 * dist(&xv, &xw);
        let lb = triplet_lower_bound(&inst, 0, 1, 2, None).unwrap();
        prop_assert!(lb <= sampled + 1e-6, "passage bound {lb} above sampled passage {sampled}");
    }

    #[test]
    fn closing_a_walk_never_makes_it_cheaper(
        half in 0.3f64..1.2,
        idx in any::<usize>(),
    ) {
        let centers = [[0.0, 0.0], [3.0, 0.5], [1.0, 3.0], [-2.0, 2.0]];
        let inst = box_instance("boxes", &centers, half);
        let order = arb_order(4, idx);
        let mut path = order.clone();
        path.push(order[0]);
        let (_, open) = optimal_trajectory(&inst, &path, false, None).unwrap();
        let (_, closed) = optimal_trajectory(&inst, &path, true, None).unwrap();
        prop_assert!(closed >= open - 1e-7, "closure equalities lowered the optimum: {closed} < {open}");
    }

    #[test]
    fn cached_solves_match_fresh_solves(points in arb_points(3..=4), idx in any::<usize>()) {
        let inst = point_instance("pts", &points);
        let order = arb_order(points.len(), idx);
        let mut path = order.clone();
        path.push(order[0]);
        let stats = RunStats::default();
        let cache = TrajectoryCache::new();
        let first = cache.solve(&inst, &path, true, &stats).unwrap();
        let fresh = optimal_trajectory(&inst, &path, true, None).unwrap();
        prop_assert_eq!(first.clone(), fresh);
        let replay = cache.solve(&inst, &path, true, &stats).unwrap();
        prop_assert_eq!(first, replay);
        prop_assert_eq!(stats.cache_hits.load(std::sync::atomic::Ordering::Relaxed), 1);
    }

    #[test]
    fn bound_chain_orders_pair_path_and_trajectory(
        points in arb_points(4..=5),
        mask in any::<u32>(),
        pick in any::<usize>(),
    ) {
        let inst = sparse_instance(&points, mask);
        let bounds = TripletBounds::build(&inst, None);
        let n = inst.num_vertices();
        let t = 1 + pick % (n - 1);
        let paths = simple_paths(&inst, 0, t);
        prop_assume!(!paths.is_empty());
        let path = &paths[pick % paths.len()];
        let path_bound = interior_bound_sum(&bounds, path).unwrap_or(f64::INFINITY);
        prop_assert!(
            bounds.pair_lb(0, t) <= path_bound + 1e-9,
            "pairwise bound {} above a simple path's bound {path_bound}",
            bounds.pair_lb(0, t)
        );
        if path_bound.is_finite() {
            if let Ok((_, cost)) = optimal_trajectory(&inst, path, false, None) {
                prop_assert!(
                    path_bound <= cost + 1e-6,
                    "path bound {path_bound} above its trajectory cost {cost}"
                );
            }
        }
    }

    #[test]
    fn unfolded_walk_bounds_never_exceed_their_trajectory_costs(
        points in arb_points(4..=5),
        mask in any::<u32>(),
        idx in any::<usize>(),
    ) {
        let inst = sparse_instance(&points, mask);
        let bounds = TripletBounds::build(&inst, None);
        let order = arb_order(inst.num_vertices(), idx);
        for walk in unfold(&inst, &bounds, &order, true, f64::INFINITY, None).take(5) {
            prop_assert!((bounds.path_lb(&walk.path, true) - walk.lb).abs() <= 1e-9);
            if let Ok((_, cost)) = optimal_trajectory(&inst, &walk.path, true, None) {
                prop_assert!(
                    walk.lb <= cost + 1e-6,
                    "walk bound {} above its trajectory cost {cost}",
                    walk.lb
                );
            }
        }
    }

    #[test]
    fn unfolding_streams_sorted_unique_anchor_respecting_walks(
        points in arb_points(4..=5),
        mask in any::<u32>(),
        idx in any::<usize>(),
        closed in any::<bool>(),
    ) {
        let inst = sparse_instance(&points, mask);
        let bounds = TripletBounds::build(&inst, None);
        let order = arb_order(inst.num_vertices(), idx);
        let yields: Vec<_> =
            unfold(&inst, &bounds, &order, closed, f64::INFINITY, None).take(200).collect();
        let mut seen = HashSet::new();
        let mut last_lb = f64::NEG_INFINITY;
        for y in &yields {
            prop_assert!(y.lb >= last_lb - 1e-9, "bound {} after {last_lb}", y.lb);
            last_lb = y.lb;
            prop_assert!(seen.insert(y.path.clone()), "walk {:?} yielded twice", y.path);
            prop_assert!(common::prefix_estimate(&bounds, &order, closed, &y.path) - y.lb <= 1e-9);
            // anchors are visited in order
            let mut targets: Vec<usize> = order[1..].to_vec();
            if closed {
                targets.push(order[0]);
            }
            let mut matched = 0;
            for &v in &y.path[1..] {
                if matched < targets.len() && v == targets[matched] {
                    matched += 1;
                }
            }
            prop_assert_eq!(matched, targets.len(), "walk {:?} misses anchors of {:?}", &y.path, &order);
            prop_assert_eq!(y.path[0], order[0]);
            if closed {
                prop_assert_eq!(*y.path.last().unwrap(), order[0]);
            }
            // every prefix of the yield prices below the yield itself
            for cut in 1..y.path.len() {
                let f = common::prefix_estimate(&bounds, &order, closed, &y.path[..cut]);
                prop_assert!(
                    f <= y.lb + 1e-9,
                    "prefix estimate {f} above the walk's own bound {}",
                    y.lb
                );
            }
        }
    }

    #[test]
    fn unfolding_without_a_cap_is_complete(
        points in arb_points(4..=5),
        mask in any::<u32>(),
        idx in any::<usize>(),
        closed in any::<bool>(),
    ) {
        let inst = sparse_instance(&points, mask);
        let bounds = TripletBounds::build(&inst, None);
        let order = arb_order(inst.num_vertices(), idx);
        let streamed: HashSet<Vec<usize>> =
            unfold(&inst, &bounds, &order, closed, f64::INFINITY, None).map(|y| y.path).collect();
        let enumerated: HashSet<Vec<usize>> =
            oracle::enumerate_realizations(&inst, &order, closed, 100_000)
                .unwrap()
                .into_iter()
                .collect();
        prop_assert_eq!(streamed, enumerated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn best_order_is_hamiltonian_prices_exactly_and_honors_constraints(
        points in arb_points(4..=5),
        fu in any::<usize>(),
        bu in any::<usize>(),
    ) {
        let inst = point_instance("pts", &points);
        let n = inst.num_vertices();
        let bounds = TripletBounds::build(&inst, None);
        let costs = OrderCosts::new(&inst, &bounds);
        let forced = (fu % n, (fu / n) % n);
        let forbidden = (bu % n, (bu / n) % n);
        prop_assume!(forced.0 != forced.1 && forbidden.0 != forbidden.1);
        prop_assume!(forced != forbidden);
        let constraints =
            OrderConstraints { forced: vec![forced], forbidden: vec![forbidden] };
        let mut cuts = Vec::new();
        match best_order(&costs, &constraints, &mut cuts, None, None).unwrap() {
            OrderOutcome::Infeasible => {}
            OrderOutcome::Optimal { order, bound } => {
                let distinct: HashSet<usize> = order.iter().copied().collect();
                prop_assert_eq!(distinct.len(), n);
                prop_assert_eq!(order.len(), n);
                let objective = order_objective(&costs, &order).unwrap();
                prop_assert!(
                    (objective - bound).abs() <= 1e-9,
                    "reported bound {bound} vs summed prices {objective}"
                );
                let has = |a: usize, b: usize| (0..n).any(|i| order[i] == a && order[(i + 1) % n] == b);
                prop_assert!(has(forced.0, forced.1), "order {:?} skips the forced edge", &order);
                prop_assert!(!has(forbidden.0, forbidden.1), "order {:?} takes the forbidden edge", &order);
            }
        }
    }

    #[test]
    fn best_order_lower_bounds_every_realization(points in arb_points(4..=5), idx in any::<usize>()) {
        let inst = point_instance("pts", &points);
        let bounds = TripletBounds::build(&inst, None);
        let costs = OrderCosts::new(&inst, &bounds);
        let mut cuts = Vec::new();
        let OrderOutcome::Optimal { bound, .. } =
            best_order(&costs, &OrderConstraints::default(), &mut cuts, None, None).unwrap()
        else {
            return Err(TestCaseError::fail("complete instance must admit an order"));
        };
        let order = arb_order(inst.num_vertices(), idx);
        let mut walk = order.clone();
        walk.push(order[0]);
        prop_assert!(
            bound <= bounds.path_lb(&walk, true) + 1e-9,
            "abstract optimum {bound} above a realization's bound {}",
            bounds.path_lb(&walk, true)
        );
    }

    #[test]
    fn forbidding_an_edge_never_lowers_the_order_bound(
        points in arb_points(4..=5),
        eu in any::<usize>(),
    ) {
        let inst = point_instance("pts", &points);
        let n = inst.num_vertices();
        let bounds = TripletBounds::build(&inst, None);
        let costs = OrderCosts::new(&inst, &bounds);
        let mut cuts = Vec::new();
        let base = best_order(&costs, &OrderConstraints::default(), &mut cuts, None, None).unwrap();
        let edge = (eu % n, (eu / n) % n);
        prop_assume!(edge.0 != edge.1);
        let constraints = OrderConstraints { forced: vec![], forbidden: vec![edge] };
        let mut cuts2 = Vec::new();
        let restricted = best_order(&costs, &constraints, &mut cuts2, None, None).unwrap();
        if let (
            OrderOutcome::Optimal { bound: b0, .. },
            OrderOutcome::Optimal { bound: b1, .. },
        ) = (base, restricted)
        {
            prop_assert!(b1 >= b0 - 1e-9, "restricted bound {b1} below unrestricted {b0}");
        }
    }

    #[test]
    fn generation_is_deterministic(n in 3usize..=12, seed in 0u64..1 << 32) {
        let a = serialize_instance(&gen_point(n, seed).unwrap());
        let b = serialize_instance(&gen_point(n, seed).unwrap());
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn search_matches_the_oracle_on_small_instances(points in arb_points(4..=4)) {
        let inst = point_instance("pts", &points);
        let reference = oracle::brute_force(&inst, Default::default()).unwrap();
        let searched = solve(&inst, &SolveOptions::default());
        prop_assert_eq!(searched.status, Status::Optimal);
        let (a, b) = (searched.cost.unwrap(), reference.cost.unwrap());
        prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "search {a} vs oracle {b}");
        prop_assert!(searched.lb_star.unwrap() <= a + 1e-6);
        prop_assert_eq!(searched.diagnostics.bound_order_violations, 0);
        prop_assert_eq!(searched.diagnostics.pop_monotonicity_violations, 0);
        prop_assert_eq!(searched.diagnostics.duplicate_orders, 0);
    }
}

#[test]
fn pair_bounds_equal_brute_force_over_simple_paths() {
    let cases = [
        sparse_instance(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 0b1001),
        sparse_instance(&[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [1.0, 3.0]], 0b10010110),
        sparse_instance(&[[0.0, 0.0], [1.0, 2.0], [3.0, 1.0], [2.0, -1.0], [0.5, -2.0], [-1.0, 1.0]], 0),
    ];
    for inst in &cases {
        let bounds = TripletBounds::build(inst, None);
        for s in 0..inst.num_vertices() {
            for t in 0..inst.num_vertices() {
                let brute = simple_paths(inst, s, t)
                    .iter()
                    .map(|p| interior_bound_sum(&bounds, p).unwrap_or(f64::INFINITY))
                    .fold(f64::INFINITY, f64::min);
                let table = bounds.pair_lb(s, t);
                if brute.is_finite() || table.is_finite() {
                    assert!(
                        (table - brute).abs() <= 1e-9,
                        "pair bound {table} vs brute force {brute} for ({s}, {t})"
                    );
                }
            }
        }
    }
}

#[test]
fn relaxing_vertex_sets_never_raises_passage_bounds() {
    let inst = (0..)
        .find_map(|seed| gen_linear(8, seed).ok())
        .expect("some seed generates an eight-edge instance");
    let bounds = TripletBounds::build(&inst, None);
    let relaxed_inst = map_vertex_sets(&inst, |_, set| {
        let mut wide = set.clone();
        for rhs in &mut wide.b {
            *rhs += 0.5;
        }
        wide
    });
    let relaxed = TripletBounds::build(&relaxed_inst, None);
    for ((u, v, w), lb) in bounds.iter() {
        let wide = relaxed.lb(u, v, w).expect("relaxation keeps passages feasible");
        assert!(wide <= lb + 1e-7, "passage ({u},{v},{w}) rose from {lb} to {wide}");
    }
    for s in 0..inst.num_vertices() {
        for t in 0..inst.num_vertices() {
            let (a, b) = (relaxed.pair_lb(s, t), bounds.pair_lb(s, t));
            if b.is_finite() {
                assert!(a <= b + 1e-7, "pair bound ({s},{t}) rose from {b} to {a}");
            }
        }
    }
}

#[test]
fn shrinking_vertex_sets_never_lowers_the_optimum() {
    let centers = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]];
    let wide = box_instance("wide", &centers, 1.0);
    let narrow = box_instance("narrow", &centers, 0.4);
    let path = [0, 1, 2, 0];
    let (_, c_wide) = optimal_trajectory(&wide, &path, true, None).unwrap();
    let (_, c_narrow) = optimal_trajectory(&narrow, &path, true, None).unwrap();
    assert!(c_narrow >= c_wide - 1e-7, "restricted optimum {c_narrow} below {c_wide}");
}

#[test]
fn generated_instances_validate_and_keep_curves_inside_regions() {
    let point = gen_point(8, 3).unwrap();
    assert!(validate_instance(&point).is_empty());

    let linear_seed = (0..).find(|&s| gen_linear(8, s).is_ok()).unwrap();
    let linear = gen_linear(8, linear_seed).unwrap();
    assert!(validate_instance(&linear).is_empty());
    assert_eq!(
        serialize_instance(&linear),
        serialize_instance(&gen_linear(8, linear_seed).unwrap())
    );

    let bezier_seed = (0..).find(|&s| gen_bezier(8, s, true).is_ok()).unwrap();
    let bezier = gen_bezier(8, bezier_seed, true).unwrap();
    assert!(validate_instance(&bezier).is_empty());
    assert_eq!(
        serialize_instance(&bezier),
        serialize_instance(&gen_bezier(8, bezier_seed, true).unwrap())
    );

    // A quartic curve stays inside its region wherever its control points
    // do: each sample is a convex combination of the control points.
    let bernstein = |i: usize, t: f64| -> f64 {
        let choose = [1.0, 4.0, 6.0, 4.0, 1.0][i];
        choose * t.powi(i as i32) * (1.0 - t).powi(4 - i as i32)
    };
    for v in bezier.vertices() {
        let (x, _) = gcs_tsp::conic::chebyshev_center(&v.set).unwrap();
        let (lo_x, hi_x) = coord_interval(&v.set, 0);
        let (lo_y, hi_y) = coord_interval(&v.set, 1);
        for step in 0..=8 {
            let t = step as f64 / 8.0;
            let mut px = 0.0;
            let mut py = 0.0;
            for i in 0..5 {
                px += bernstein(i, t) * x[2 * i];
                py += bernstein(i, t) * x[2 * i + 1];
            }
            assert!(px >= lo_x - 1e-7 && px <= hi_x + 1e-7, "sample x {px} outside [{lo_x}, {hi_x}]");
            assert!(py >= lo_y - 1e-7 && py <= hi_y + 1e-7, "sample y {py} outside [{lo_y}, {hi_y}]");
        }
    }
}

#[test]
fn baseline_trajectories_satisfy_the_instance_constraints() {
    let linear_seed = (0..).find(|&s| gen_linear(8, s).is_ok()).unwrap();
    let bezier_seed = (0..).find(|&s| gen_bezier(6, s, false).is_ok()).unwrap();
    let instances = [
        gen_point(6, 1).unwrap(),
        gen_linear(8, linear_seed).unwrap(),
        gen_bezier(6, bezier_seed, false).unwrap(),
    ];
    let limit = Some(std::time::Duration::from_secs(60));
    for inst in &instances {
        for solved in [
            gcs_tsp::baselines::solve_ecg(inst, limit),
            gcs_tsp::baselines::solve_greedy(inst, limit),
        ] {
            let path = solved.path.as_ref().unwrap_or_else(|| panic!("no tour on {}", inst.name));
            let traj = solved.trajectory.as_ref().unwrap();
            let residual = max_constraint_residual(inst, path, traj, true);
            assert!(
                residual <= 1e-6,
                "baseline walk violates {} by {residual}",
                inst.name
            );
            let recomputed = trajectory_cost(inst, path, traj).unwrap();
            assert!((recomputed - solved.cost.unwrap()).abs() <= 1e-6 * recomputed.max(1.0));
        }
    }
}

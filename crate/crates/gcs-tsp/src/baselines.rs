//! Heuristic reference solvers.
//!
//! Both return real trajectories but no optimality certificate, so their
//! records carry no lower bound or gap. The edge-cost baseline replaces
//! passage bounds with distances between Chebyshev centers everywhere the
//! exact solver would use a bound, and otherwise runs the same high-level
//! loop to exhaustion. The greedy baseline walks visit orders depth-first,
//! most promising passage first, and keeps the best trajectory found
//! before the clock runs out.

use std::time::{Duration, Instant};

use crate::bounds::TripletBounds;
use crate::conic::{chebyshev_center, TrajectoryCache};
use crate::ilp::{self, BinaryProgram, IlpTimeout};
use crate::model::{GcsInstance, Layout};
use crate::ordering::{OrderConstraints, OrderOutcome};
use crate::solution::Status;
use crate::solver::{Frontier, SearchDiagnostics, Solved};
use crate::stats::{bump, RunStats};
use crate::unfold::{unfold, unfold_guided, Guide, UnfoldedPath};

struct Best {
    cost: f64,
    order: Vec<usize>,
    path: Vec<usize>,
    trajectory: Vec<Vec<f64>>,
}

/// Walk a sorted-ish realization stream, solving trajectories until the
/// guide value catches up with the best cost seen in this stream.
fn best_realization(
    instance: &GcsInstance,
    cache: &TrajectoryCache,
    stats: &RunStats,
    deadline: Option<Instant>,
    stream: impl Iterator<Item = UnfoldedPath>,
) -> (Option<(f64, Vec<usize>, Vec<Vec<f64>>)>, bool) {
    let mut best: Option<(f64, Vec<usize>, Vec<Vec<f64>>)> = None;
    for realization in stream {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return (best, true);
        }
        if let Some((cost, _, _)) = &best {
            if realization.lb >= *cost {
                break;
            }
        }
        if let Some((points, cost)) = cache.solve(instance, &realization.path, true, stats) {
            if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
                best = Some((cost, realization.path, points));
            }
        }
    }
    (best, false)
}

fn wrap_up(
    status: Status,
    best: Option<Best>,
    stats: &RunStats,
    t0: Instant,
) -> Solved {
    let wall = t0.elapsed().as_secs_f64();
    Solved {
        status,
        cost: best.as_ref().map(|b| b.cost),
        lb_star: None,
        rho: None,
        tour: best.as_ref().map(|b| b.order.clone()),
        path: best.as_ref().map(|b| b.path.clone()),
        trajectory: best.map(|b| b.trajectory),
        stats: stats.snapshot(wall),
        diagnostics: SearchDiagnostics::default(),
        events: Vec::new(),
    }
}

/// Distance between Chebyshev centers over the spatial coordinates (time
/// coordinates of curve pieces do not count). Falls back to zero where a
/// center is unavailable; the guidance degrades but stays usable.
pub fn center_distances(instance: &GcsInstance) -> Vec<Vec<f64>> {
    let spatial = |dim: usize| match instance.layout {
        Some(Layout::Bezier) => dim.min(10),
        _ => dim,
    };
    let centers: Vec<Vec<f64>> = instance
        .vertices()
        .iter()
        .map(|v| match chebyshev_center(&v.set) {
            Ok((point, _)) => point[..spatial(v.set.dim)].to_vec(),
            Err(_) => vec![0.0; spatial(v.set.dim)],
        })
        .collect();
    let n = centers.len();
    let mut d = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in 0..n {
            let k = centers[u].len().min(centers[v].len());
            d[u][v] = centers[u][..k]
                .iter()
                .zip(&centers[v][..k])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    }
    d
}

/// Center-distance guidance: every charge is the straight-line distance
/// between endpoint centers, estimates are shortest such distances over
/// the graph. Not a lower bound on anything; order of yields is heuristic.
struct EdgeGuide<'a> {
    instance: &'a GcsInstance,
    d: &'a [Vec<f64>],
    dist: &'a [Vec<f64>],
}

impl Guide for EdgeGuide<'_> {
    fn successors(&self, _prev: Option<usize>, last: usize) -> Vec<usize> {
        self.instance.out_neighbors(last).to_vec()
    }

    fn step(&self, _prev: Option<usize>, last: usize, next: usize) -> Option<f64> {
        Some(self.d[last][next])
    }

    fn pair(&self, from: usize, to: usize) -> f64 {
        self.dist[from][to]
    }

    fn wrap(&self, _a: usize, _b: usize, _c: usize) -> Option<f64> {
        Some(0.0) // the closing edge was already charged on append
    }
}

/// Shortest center-distance between all pairs along graph edges.
fn all_pairs_shortest(instance: &GcsInstance, d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = instance.num_vertices();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (u, row) in dist.iter_mut().enumerate() {
        row[u] = 0.0;
    }
    for e in instance.edges() {
        dist[e.from][e.to] = dist[e.from][e.to].min(d[e.from][e.to]);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    dist
}

/// Cheapest directed tour over explicit per-pair costs, with forced and
/// forbidden arcs; subtours are cut away lazily. The workhorse behind the
/// edge-cost baseline's order proposals.
fn best_edge_order(
    n: usize,
    d: &[Vec<f64>],
    constraints: &OrderConstraints,
    cuts: &mut Vec<Vec<usize>>,
    deadline: Option<Instant>,
    stats: Option<&RunStats>,
) -> Result<OrderOutcome, IlpTimeout> {
    assert!(n >= 3);
    if let Some(s) = stats {
        bump(&s.rtsp_solves);
    }
    let mut arcs = Vec::new();
    let mut var_of = vec![vec![usize::MAX; n]; n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                var_of[u][v] = arcs.len();
                arcs.push((u, v));
            }
        }
    }
    loop {
        let mut eq = Vec::new();
        for u in 0..n {
            eq.push(((0..n).filter(|&v| v != u).map(|v| (var_of[u][v], 1.0)).collect(), 1.0));
            eq.push(((0..n).filter(|&v| v != u).map(|v| (var_of[v][u], 1.0)).collect(), 1.0));
        }
        for &(u, v) in &constraints.forced {
            eq.push((vec![(var_of[u][v], 1.0)], 1.0));
        }
        for &(u, v) in &constraints.forbidden {
            eq.push((vec![(var_of[u][v], 1.0)], 0.0));
        }
        let mut le = Vec::new();
        for cut in cuts.iter() {
            let mut row = Vec::new();
            for &u in cut {
                for &v in cut {
                    if u != v {
                        row.push((var_of[u][v], 1.0));
                    }
                }
            }
            le.push((row, cut.len() as f64 - 1.0));
        }
        let prog = BinaryProgram {
            num_vars: arcs.len(),
            objective: arcs.iter().map(|&(u, v)| d[u][v]).collect(),
            eq,
            le,
        };
        let key = |assignment: &[bool]| edge_tour_key(n, &arcs, assignment);
        match ilp::solve(&prog, key, deadline)? {
            ilp::IlpOutcome::Infeasible => return Ok(OrderOutcome::Infeasible),
            ilp::IlpOutcome::Optimal { assignment, objective } => {
                let cycles = arc_cycles(n, &arcs, &assignment);
                if cycles.len() == 1 && cycles[0].len() == n {
                    let start = cycles[0].iter().position(|&v| v == 0).expect("covers all");
                    let mut order = cycles[0][start..].to_vec();
                    order.extend_from_slice(&cycles[0][..start]);
                    return Ok(OrderOutcome::Optimal { order, bound: objective });
                }
                for cycle in cycles {
                    let mut sorted = cycle;
                    sorted.sort_unstable();
                    cuts.push(sorted);
                }
            }
        }
    }
}

/// Vertex-disjoint cycles of a degree-one arc selection, each rotated to
/// start at its smallest vertex, listed by that vertex.
fn arc_cycles(n: usize, arcs: &[(usize, usize)], assignment: &[bool]) -> Vec<Vec<usize>> {
    let mut succ = vec![usize::MAX; n];
    for (i, &(u, v)) in arcs.iter().enumerate() {
        if assignment[i] {
            succ[u] = v;
        }
    }
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] || succ[start] == usize::MAX {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut cur = succ[start];
        while cur != start && cur != usize::MAX && !seen[cur] {
            seen[cur] = true;
            cycle.push(cur);
            cur = succ[cur];
        }
        if cur == start {
            cycles.push(cycle);
        }
    }
    cycles
}

fn edge_tour_key(n: usize, arcs: &[(usize, usize)], assignment: &[bool]) -> Vec<usize> {
    let cycles = arc_cycles(n, arcs, assignment);
    if cycles.len() == 1 && cycles[0].len() == n {
        let start = cycles[0].iter().position(|&v| v == 0).expect("covers all");
        let mut key = vec![0];
        key.extend_from_slice(&cycles[0][start..]);
        key.extend_from_slice(&cycles[0][..start]);
        return key;
    }
    let mut key = vec![1];
    let mut chosen: Vec<usize> = assignment
        .iter()
        .enumerate()
        .filter_map(|(i, &on)| on.then_some(i))
        .collect();
    chosen.sort_unstable();
    key.extend(chosen);
    key
}

/// Tour search guided by straight-line center distances instead of passage
/// bounds: same partitioned loop, same realization class, real trajectory
/// costs, but no certificate, so it runs until the order space or the time
/// budget is exhausted.
pub fn solve_ecg(instance: &GcsInstance, time_limit: Option<Duration>) -> Solved {
    assert!(instance.num_vertices() >= 3, "instances have at least three vertices");
    let t0 = Instant::now();
    let deadline = time_limit.map(|d| t0 + d);
    let stats = RunStats::default();
    let cache = TrajectoryCache::new();
    let n = instance.num_vertices();

    let d = center_distances(instance);
    let dist = all_pairs_shortest(instance, &d);

    struct EcgNode {
        order: Vec<usize>,
        constraints: OrderConstraints,
        cuts: Vec<Vec<usize>>,
    }
    let mut open: Frontier<EcgNode> = Frontier::default();
    let mut root_cuts = Vec::new();
    match best_edge_order(n, &d, &OrderConstraints::default(), &mut root_cuts, deadline, Some(&stats)) {
        Err(IlpTimeout) => return wrap_up(Status::TimeLimit, None, &stats, t0),
        Ok(OrderOutcome::Infeasible) => return wrap_up(Status::Infeasible, None, &stats, t0),
        Ok(OrderOutcome::Optimal { order, bound }) => {
            open.push(bound, EcgNode { order, constraints: OrderConstraints::default(), cuts: root_cuts });
        }
    }

    let mut incumbent: Option<Best> = None;
    while let Some((_, node)) = open.pop() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return wrap_up(Status::TimeLimit, incumbent, &stats, t0);
        }
        bump(&stats.tours_explored);
        let cap = incumbent.as_ref().map_or(f64::INFINITY, |b| b.cost);
        let guide = EdgeGuide { instance, d: &d, dist: &dist };
        let stream = unfold_guided(instance, guide, &node.order, true, cap, Some(&stats));
        let (found, timed_out) = best_realization(instance, &cache, &stats, deadline, stream);
        if let Some((cost, path, trajectory)) = found {
            if incumbent.as_ref().is_none_or(|b| cost < b.cost) {
                incumbent = Some(Best { cost, order: node.order.clone(), path, trajectory });
            }
        }
        if timed_out {
            return wrap_up(Status::TimeLimit, incumbent, &stats, t0);
        }

        let k = node.order.len();
        for i in 0..k {
            let edge = (node.order[i], node.order[(i + 1) % k]);
            if node.constraints.forced.contains(&edge) {
                continue;
            }
            let mut constraints = node.constraints.clone();
            constraints.forbidden.push(edge);
            for j in 0..i {
                let kept = (node.order[j], node.order[(j + 1) % k]);
                if !constraints.forced.contains(&kept) {
                    constraints.forced.push(kept);
                }
            }
            let mut cuts = node.cuts.clone();
            match best_edge_order(n, &d, &constraints, &mut cuts, deadline, Some(&stats)) {
                Err(IlpTimeout) => return wrap_up(Status::TimeLimit, incumbent, &stats, t0),
                Ok(OrderOutcome::Infeasible) => {}
                Ok(OrderOutcome::Optimal { order, bound }) => {
                    open.push(bound, EcgNode { order, constraints, cuts });
                }
            }
        }
    }
    match incumbent {
        Some(best) => wrap_up(Status::Heuristic, Some(best), &stats, t0),
        None => wrap_up(Status::Infeasible, None, &stats, t0),
    }
}

/// Depth-first search over visit orders from every start vertex, taking
/// the most promising passage first; completed orders are realized with
/// the real bound tables and priced exactly. Best effort under the clock.
pub fn solve_greedy(instance: &GcsInstance, time_limit: Option<Duration>) -> Solved {
    assert!(instance.num_vertices() >= 3, "instances have at least three vertices");
    let t0 = Instant::now();
    let deadline = time_limit.map(|d| t0 + d);
    let stats = RunStats::default();
    if deadline.is_some_and(|d| Instant::now() >= d) {
        return wrap_up(Status::TimeLimit, None, &stats, t0);
    }
    let cache = TrajectoryCache::new();
    let bounds = TripletBounds::build(instance, Some(&stats));
    let n = instance.num_vertices();

    let mut incumbent: Option<Best> = None;
    let mut out_of_time = false;

    // rank[u] lists every v by how cheap some passage (. , u, v) is
    let rank: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            let score = |v: usize| {
                bounds.min_entering(u, v).unwrap_or(f64::INFINITY)
            };
            let mut vs: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            vs.sort_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)));
            vs
        })
        .collect();

    'starts: for start in 0..n {
        // iterative depth-first walk over orders rooted at `start`
        let mut order = vec![start];
        let mut on_order = vec![false; n];
        on_order[start] = true;
        // choice[d] = how many ranked candidates were consumed at depth d
        let mut choice = vec![0usize];
        loop {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                out_of_time = true;
                break 'starts;
            }
            if order.len() == n {
                bump(&stats.tours_explored);
                let cap = incumbent.as_ref().map_or(f64::INFINITY, |b| b.cost);
                let stream = unfold(instance, &bounds, &order, true, cap, Some(&stats));
                let (found, timed_out) = best_realization(instance, &cache, &stats, deadline, stream);
                if let Some((cost, path, trajectory)) = found {
                    if incumbent.as_ref().is_none_or(|b| cost < b.cost) {
                        incumbent = Some(Best { cost, order: order.clone(), path, trajectory });
                    }
                }
                if timed_out {
                    out_of_time = true;
                    break 'starts;
                }
                // fall through to backtracking
            } else {
                let here = *order.last().expect("order never empties");
                let next = rank[here][choice[order.len() - 1]..]
                    .iter()
                    .copied()
                    .find(|&v| !on_order[v]);
                if let Some(v) = next {
                    let consumed = rank[here].iter().position(|&r| r == v).expect("ranked") + 1;
                    choice[order.len() - 1] = consumed;
                    order.push(v);
                    on_order[v] = true;
                    choice.push(0);
                    continue;
                }
            }
            // backtrack to the deepest level with candidates left
            loop {
                choice.pop();
                let v = order.pop().expect("order never empties");
                on_order[v] = false;
                if order.is_empty() {
                    continue 'starts;
                }
                if choice[order.len() - 1] < rank[*order.last().expect("nonempty")].len() {
                    break;
                }
            }
        }
    }

    let status = if out_of_time {
        Status::TimeLimit
    } else if incumbent.is_some() {
        Status::Heuristic
    } else {
        Status::Infeasible
    };
    wrap_up(status, incumbent, &stats, t0)
}

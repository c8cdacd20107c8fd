//! The hierarchical search tying everything together.
//!
//! Visit orders come out of the integer program cheapest-bound first; each
//! popped order is unfolded into concrete walks in bound order, walks get
//! exact trajectory solves, and the best trajectory becomes the incumbent.
//! Popping an order whose bound is within the tolerance of the incumbent
//! proves the incumbent's gap, because every unexplored order is at least
//! that expensive. The order space is partitioned Lawler-style: each child
//! forbids one abstract edge of the parent's order and forces the edges
//! before it, so children tile the remaining orders without overlap.
//!
//! With a relative slack epsilon the same loop terminates earlier (and
//! unfolding prunes harder): the result is then guaranteed within epsilon
//! of optimal rather than exact.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use crate::bounds::{Ordered, TripletBounds};
use crate::chain::ChainBound;
use crate::conic::TrajectoryCache;
use crate::model::GcsInstance;
use crate::ordering::{self, Cut, OrderConstraints, OrderCosts, OrderOutcome};
use crate::solution::{SolutionRecord, Status};
use crate::stats::{bump, RunStats, SolveStats};
use crate::unfold;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Allowed relative gap in [0, 1). Zero demands the exact optimum.
    pub epsilon: f64,
    pub time_limit: Option<Duration>,
    /// Record one line per search event (pops, incumbents, prunes) for
    /// debugging; they come back in [`Solved::events`].
    pub log_events: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { epsilon: 0.0, time_limit: None, log_events: false }
    }
}

/// Counters for invariants the search maintains; all zero on a healthy run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchDiagnostics {
    /// Realizations whose bound chain broke: an order bound above its
    /// walk's bound, or a walk bound above its trajectory cost.
    pub bound_order_violations: u64,
    /// Pops whose order bound decreased below an earlier pop's.
    pub pop_monotonicity_violations: u64,
    /// Orders handed out by the partition more than once.
    pub duplicate_orders: u64,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub status: Status,
    pub cost: Option<f64>,
    pub lb_star: Option<f64>,
    pub rho: Option<f64>,
    pub tour: Option<Vec<usize>>,
    pub path: Option<Vec<usize>>,
    pub trajectory: Option<Vec<Vec<f64>>>,
    pub stats: SolveStats,
    pub diagnostics: SearchDiagnostics,
    /// Line-delimited JSON search events; empty unless requested.
    pub events: Vec<String>,
}

impl Solved {
    pub fn to_record(&self, instance: &GcsInstance) -> SolutionRecord {
        let ids = |seq: &Option<Vec<usize>>| {
            seq.as_ref()
                .map(|s| s.iter().map(|&v| instance.vertex(v).id.clone()).collect())
        };
        SolutionRecord {
            status: self.status,
            cost: self.cost,
            lb_star: self.lb_star,
            rho: self.rho,
            tour: ids(&self.tour),
            path: ids(&self.path),
            trajectory: self.trajectory.clone(),
            stats: self.stats.clone(),
        }
    }
}

struct SearchNode {
    order: Vec<usize>,
    constraints: OrderConstraints,
    cuts: Vec<Cut>,
}

/// Min-priority queue over bounds, first-in-first-out among equal bounds so
/// runs are reproducible.
pub(crate) struct Frontier<T> {
    heap: BinaryHeap<(Reverse<(Ordered, u64)>, usize)>,
    arena: Vec<Option<T>>,
}

impl<T> Default for Frontier<T> {
    fn default() -> Self {
        Frontier { heap: BinaryHeap::new(), arena: Vec::new() }
    }
}

impl<T> Frontier<T> {
    pub fn push(&mut self, bound: f64, item: T) {
        let seq = self.arena.len() as u64;
        self.heap.push((Reverse((Ordered(bound), seq)), self.arena.len()));
        self.arena.push(Some(item));
    }

    pub fn pop(&mut self) -> Option<(f64, T)> {
        let (Reverse((Ordered(bound), _)), id) = self.heap.pop()?;
        Some((bound, self.arena[id].take().expect("arena slots pop once")))
    }

    pub fn min_bound(&self) -> Option<f64> {
        self.heap.peek().map(|(Reverse((Ordered(b), _)), _)| *b)
    }
}

struct Incumbent {
    cost: f64,
    order: Vec<usize>,
    path: Vec<usize>,
    trajectory: Vec<Vec<f64>>,
}

/// Collects one-line JSON records when enabled; free otherwise.
struct EventLog(Option<Vec<String>>);

impl EventLog {
    fn push(&mut self, record: impl FnOnce() -> serde_json::Value) {
        if let Some(lines) = &mut self.0 {
            lines.push(record().to_string());
        }
    }
}

const GAP_TOL: f64 = 1e-9;

pub fn solve(instance: &GcsInstance, options: &SolveOptions) -> Solved {
    let eps = options.epsilon;
    assert!((0.0..1.0).contains(&eps), "epsilon must lie in [0, 1)");
    assert!(instance.num_vertices() >= 3, "instances have at least three vertices");
    let t0 = Instant::now();
    let deadline = options.time_limit.map(|d| t0 + d);
    let stats = RunStats::default();
    let mut diagnostics = SearchDiagnostics::default();
    let mut events = EventLog(options.log_events.then(Vec::new));

    let bounds = TripletBounds::build(instance, Some(&stats));
    let costs = OrderCosts::new(instance, &bounds);
    let cache = TrajectoryCache::new();
    let relax = ChainBound::build(instance);

    let mut open = Frontier::default();

    let mut root_cuts: Vec<Cut> = Vec::new();
    match ordering::best_order(&costs, &OrderConstraints::default(), &mut root_cuts, deadline, Some(&stats)) {
        Err(_) => {
            return finish(Status::TimeLimit, None, None, &stats, t0, diagnostics, events)
        }
        Ok(OrderOutcome::Infeasible) => {
            return finish(Status::Infeasible, None, None, &stats, t0, diagnostics, events)
        }
        Ok(OrderOutcome::Optimal { order, bound }) => {
            open.push(bound, SearchNode { order, constraints: OrderConstraints::default(), cuts: root_cuts });
        }
    }

    let mut incumbent: Option<Incumbent> = None;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut last_pop = f64::NEG_INFINITY;

    // A frontier bound only covers the orders still open; explored orders
    // are certified down to the incumbent (scaled by the slack when their
    // streams were cut early), so the reported lower bound is the lesser.
    let certify = |raw: f64, incumbent: &Option<Incumbent>| match incumbent {
        None => raw,
        Some(i) => raw.min(if eps == 0.0 { i.cost } else { (1.0 - eps) * i.cost }),
    };

    loop {
        let Some((bound, node)) = open.pop() else {
            // The whole order space is partitioned away: the incumbent (if
            // any) is within epsilon by the stream caps alone.
            let status = match (&incumbent, eps) {
                (None, _) => Status::Infeasible,
                (Some(_), e) if e == 0.0 => Status::Optimal,
                (Some(_), _) => Status::BoundedSuboptimal,
            };
            let lb = incumbent.as_ref().map(|i| (1.0 - eps) * i.cost);
            return finish(status, incumbent, lb, &stats, t0, diagnostics, events);
        };
        events.push(|| serde_json::json!({"event": "pop", "bound": bound, "order": node.order}));
        if deadline.is_some_and(|d| Instant::now() >= d) {
            let frontier = certify(open.min_bound().unwrap_or(bound).min(bound), &incumbent);
            return finish(Status::TimeLimit, incumbent, Some(frontier), &stats, t0, diagnostics, events);
        }
        if bound < last_pop - GAP_TOL {
            diagnostics.pop_monotonicity_violations += 1;
        }
        last_pop = last_pop.max(bound);
        if let Some(inc) = &incumbent {
            if inc.cost - bound <= eps * inc.cost + GAP_TOL {
                let status = if eps == 0.0 { Status::Optimal } else { Status::BoundedSuboptimal };
                let lb = certify(bound, &incumbent);
                return finish(status, incumbent, Some(lb), &stats, t0, diagnostics, events);
            }
        }

        // evaluate: realize the order as walks and price them exactly
        if !seen.insert(node.order.clone()) {
            diagnostics.duplicate_orders += 1;
        }
        bump(&stats.tours_explored);
        let cap = incumbent.as_ref().map_or(f64::INFINITY, |i| (1.0 - eps) * i.cost);
        let mut node_best: Option<Incumbent> = None;
        let mut timed_out = false;
        for realization in unfold::unfold(instance, &bounds, &node.order, true, cap, Some(&stats)) {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                timed_out = true;
                break;
            }
            if bound > realization.lb + 1e-6 {
                diagnostics.bound_order_violations += 1;
            }
            if let Some(best) = &node_best {
                if realization.lb >= (1.0 - eps) * best.cost {
                    // the stream is sorted; nothing better follows
                    events.push(|| {
                        serde_json::json!({
                            "event": "prune", "kind": "stream-cutoff",
                            "order": node.order, "lb": realization.lb,
                        })
                    });
                    break;
                }
            }
            // a walk certified at or above the same cutoff cannot improve
            // anything; skipping its exact solve changes no outcome (the
            // margin keeps borderline walks solved, since exact costs come
            // back with conic accuracy, not exactly)
            let cutoff = node_best.as_ref().map_or(cap, |b| cap.min((1.0 - eps) * b.cost));
            if cutoff.is_finite() {
                if let Some(chain) = &relax {
                    let quick = chain.walk_lower_bound(&realization.path, true);
                    if quick >= cutoff + 1e-7 {
                        events.push(|| {
                            serde_json::json!({
                                "event": "prune", "kind": "chain-bound", "lb": quick,
                            })
                        });
                        continue;
                    }
                }
            }
            let Some((points, cost)) = cache.solve(instance, &realization.path, true, &stats)
            else {
                continue;
            };
            if realization.lb > cost + 1e-6 {
                diagnostics.bound_order_violations += 1;
            }
            if node_best.as_ref().is_none_or(|b| cost < b.cost) {
                node_best = Some(Incumbent {
                    cost,
                    order: node.order.clone(),
                    path: realization.path,
                    trajectory: points,
                });
            }
        }
        if let Some(best) = node_best {
            if incumbent.as_ref().is_none_or(|i| best.cost < i.cost) {
                events.push(|| {
                    serde_json::json!({
                        "event": "incumbent", "cost": best.cost, "path": best.path,
                    })
                });
                incumbent = Some(best);
            }
        }
        if timed_out {
            let frontier = certify(open.min_bound().unwrap_or(bound).min(bound), &incumbent);
            return finish(Status::TimeLimit, incumbent, Some(frontier), &stats, t0, diagnostics, events);
        }

        // partition the remaining orders around this one
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
            match ordering::best_order(&costs, &constraints, &mut cuts, deadline, Some(&stats)) {
                Err(_) => {
                    let frontier = certify(open.min_bound().unwrap_or(bound).min(bound), &incumbent);
                    return finish(Status::TimeLimit, incumbent, Some(frontier), &stats, t0, diagnostics, events);
                }
                Ok(OrderOutcome::Infeasible) => {
                    events.push(|| {
                        serde_json::json!({
                            "event": "prune", "kind": "child-infeasible", "forbid": edge,
                        })
                    });
                }
                Ok(OrderOutcome::Optimal { order, bound: child_bound }) => {
                    open.push(child_bound, SearchNode { order, constraints, cuts });
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    status: Status,
    incumbent: Option<Incumbent>,
    lb_star: Option<f64>,
    stats: &RunStats,
    t0: Instant,
    diagnostics: SearchDiagnostics,
    mut events: EventLog,
) -> Solved {
    let wall = t0.elapsed().as_secs_f64();
    let cost = incumbent.as_ref().map(|i| i.cost);
    let rho = match (cost, lb_star) {
        (Some(c), Some(lb)) if c > 0.0 => Some(((c - lb) / c).max(0.0)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    events.push(|| {
        serde_json::json!({
            "event": "done",
            "status": serde_json::to_value(status).expect("status serializes"),
            "cost": cost, "lb_star": lb_star,
        })
    });
    Solved {
        status,
        cost,
        lb_star,
        rho,
        tour: incumbent.as_ref().map(|i| i.order.clone()),
        path: incumbent.as_ref().map(|i| i.path.clone()),
        trajectory: incumbent.map(|i| i.trajectory),
        stats: stats.snapshot(wall),
        diagnostics,
        events: events.0.unwrap_or_default(),
    }
}

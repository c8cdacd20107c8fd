//! Choosing the next visit order to try.
//!
//! Orders are priced abstractly: a binary variable per ordered triplet of
//! distinct vertices says "the tour passes through v, coming from u's
//! direction and leaving toward w's". Each triplet costs half a pairwise
//! bound into v, the cheapest compatible passage through v, and half a
//! pairwise bound out, so the optimum of the integer program never exceeds
//! the bound of any realizable tour. Cover and flow constraints make the
//! chosen triplets stitch into cycles; cycles that fail to span all
//! vertices are eliminated with lazy cuts and the program is re-solved.
//! Orders can be steered by forcing or forbidding abstract edges, which is
//! how the enclosing search partitions the order space.

use std::collections::HashMap;
use std::time::Instant;

use crate::bounds::TripletBounds;
use crate::ilp::{self, BinaryProgram, IlpOutcome, IlpTimeout};
use crate::model::GcsInstance;
use crate::stats::{bump, RunStats};

pub type Triplet = (usize, usize, usize);
pub type Cut = Vec<Triplet>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderConstraints {
    /// Abstract edges every order must traverse.
    pub forced: Vec<(usize, usize)>,
    /// Abstract edges no order may traverse.
    pub forbidden: Vec<(usize, usize)>,
}

#[derive(Debug)]
pub struct OrderCosts {
    n: usize,
    b: HashMap<Triplet, f64>,
}

impl OrderCosts {
    /// Price every ordered triplet of distinct vertices. Triplets with an
    /// unavoidable infeasibility (no path between the endpoints, or no
    /// feasible passage compatible with the adjacent legs) are left out.
    pub fn new(instance: &GcsInstance, bounds: &TripletBounds) -> Self {
        let n = instance.num_vertices();
        let mut b = HashMap::new();
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    if u == v || v == w || u == w {
                        continue;
                    }
                    let mid = match (instance.has_edge(u, v), instance.has_edge(v, w)) {
                        // Both legs are direct, so the passage is exactly
                        // this triplet.
                        (true, true) => bounds.lb(u, v, w),
                        // The entering leg is direct; the leaving leg
                        // detours, starting with some passage (u,v,x).
                        (true, false) => bounds.min_leaving(u, v),
                        (false, true) => bounds.min_entering(v, w),
                        (false, false) => bounds.min_mid(v),
                    };
                    let Some(mid) = mid else { continue };
                    let total =
                        0.5 * bounds.pair_lb(u, v) + mid + 0.5 * bounds.pair_lb(v, w);
                    if total.is_finite() {
                        b.insert((u, v, w), total);
                    }
                }
            }
        }
        Self { n, b }
    }

    pub fn price(&self, t: Triplet) -> Option<f64> {
        self.b.get(&t).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderOutcome {
    /// The cheapest order satisfying the constraints, rotated so the
    /// smallest vertex index leads, with its abstract bound.
    Optimal { order: Vec<usize>, bound: f64 },
    Infeasible,
}

/// Solve for the cheapest visit order. Subtour cuts discovered along the
/// way are appended to `cuts` so callers can pass them to related solves.
pub fn best_order(
    costs: &OrderCosts,
    constraints: &OrderConstraints,
    cuts: &mut Vec<Cut>,
    deadline: Option<Instant>,
    stats: Option<&RunStats>,
) -> Result<OrderOutcome, IlpTimeout> {
    let n = costs.n;
    assert!(n >= 3, "orders over fewer than three vertices have no distinct triplets");
    if let Some(s) = stats {
        bump(&s.rtsp_solves);
    }
    loop {
        let mut vars: Vec<Triplet> = Vec::new();
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let t = (u, v, w);
                    if costs.b.contains_key(&t)
                        && !constraints.forbidden.contains(&(u, v))
                        && !constraints.forbidden.contains(&(v, w))
                    {
                        vars.push(t);
                    }
                }
            }
        }
        let index: HashMap<Triplet, usize> =
            vars.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut prog = BinaryProgram {
            num_vars: vars.len(),
            objective: vars.iter().map(|t| costs.b[t]).collect(),
            ..Default::default()
        };
        // each vertex is the center of exactly one chosen triplet
        for v in 0..n {
            let row: Vec<(usize, f64)> = vars
                .iter()
                .enumerate()
                .filter(|(_, t)| t.1 == v)
                .map(|(i, _)| (i, 1.0))
                .collect();
            prog.eq.push((row, 1.0));
        }
        // an abstract edge leaves a triplet as often as it enters one
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let mut row: Vec<(usize, f64)> = Vec::new();
                for (i, &(u, v, w)) in vars.iter().enumerate() {
                    if (v, w) == (a, b) {
                        row.push((i, 1.0));
                    }
                    if (u, v) == (a, b) {
                        row.push((i, -1.0));
                    }
                }
                if !row.is_empty() {
                    prog.eq.push((row, 0.0));
                }
            }
        }
        // forced edges appear once as a prefix pair and once as a suffix
        for &(a, b) in &constraints.forced {
            let row: Vec<(usize, f64)> = vars
                .iter()
                .enumerate()
                .filter(|(_, &(u, v, w))| (u, v) == (a, b) || (v, w) == (a, b))
                .map(|(i, _)| (i, 1.0))
                .collect();
            prog.eq.push((row, 2.0));
        }
        for cut in cuts.iter() {
            let row: Vec<(usize, f64)> = cut
                .iter()
                .filter_map(|t| index.get(t))
                .map(|&i| (i, 1.0))
                .collect();
            prog.le.push((row, cut.len() as f64 - 1.0));
        }

        let tie_key = |assignment: &[bool]| tour_key(&chosen(&vars, assignment), n);
        match ilp::solve(&prog, tie_key, deadline)? {
            IlpOutcome::Infeasible => return Ok(OrderOutcome::Infeasible),
            IlpOutcome::Optimal { assignment, objective } => {
                let picked = chosen(&vars, &assignment);
                let cycles = cycles_of(&picked);
                if cycles.len() == 1 && cycles[0].len() == n {
                    return Ok(OrderOutcome::Optimal { order: cycles[0].clone(), bound: objective });
                }
                for cycle in cycles {
                    let cut: Cut = cycle
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| {
                            let prev = cycle[(i + cycle.len() - 1) % cycle.len()];
                            let next = cycle[(i + 1) % cycle.len()];
                            (prev, v, next)
                        })
                        .collect();
                    let mut cut = cut;
                    cut.sort_unstable();
                    cuts.push(cut);
                }
            }
        }
    }
}

fn chosen(vars: &[Triplet], assignment: &[bool]) -> Vec<Triplet> {
    vars.iter().zip(assignment).filter(|(_, &on)| on).map(|(&t, _)| t).collect()
}

/// Cycles of an integral solution, each rotated to lead with its smallest
/// vertex, listed in order of that leader.
fn cycles_of(picked: &[Triplet]) -> Vec<Vec<usize>> {
    let by_center: HashMap<usize, Triplet> = picked.iter().map(|&t| (t.1, t)).collect();
    let mut seen: Vec<usize> = Vec::new();
    let mut cycles = Vec::new();
    let mut centers: Vec<usize> = by_center.keys().copied().collect();
    centers.sort_unstable();
    for &start in &centers {
        if seen.contains(&start) {
            continue;
        }
        let mut cycle = Vec::new();
        let mut at = start;
        loop {
            cycle.push(at);
            seen.push(at);
            at = by_center[&at].2;
            if at == start || cycle.len() > by_center.len() {
                break;
            }
            if !by_center.contains_key(&at) {
                break; // dangling; callers treat the fragment as a cycle
            }
        }
        cycles.push(cycle);
    }
    cycles
}

/// Deterministic preference among cost-tied solutions: spanning single
/// cycles first, then lexicographically by canonical sequence.
fn tour_key(picked: &[Triplet], n: usize) -> Vec<usize> {
    let cycles = cycles_of(picked);
    if cycles.len() == 1 && cycles[0].len() == n {
        let mut key = vec![0];
        key.extend(&cycles[0]);
        key
    } else {
        let mut flat: Vec<Triplet> = picked.to_vec();
        flat.sort_unstable();
        let mut key = vec![1];
        for (u, v, w) in flat {
            key.extend([u, v, w]);
        }
        key
    }
}

//! Exhaustive reference solver for small instances.
//!
//! Enumerates every visit order (rotations removed by fixing the smallest
//! vertex first), every realization of each order in the restricted class
//! (direct legs forced, detour segments simple), and prices each walk with
//! its own trajectory solve. No bound tables, no pruning: the point is to
//! certify the clever solver against something that cannot share its bugs.

use rayon::prelude::*;

use std::time::Instant;

use crate::conic::optimal_trajectory;
use crate::model::GcsInstance;
use crate::solution::Status;
use crate::solver::{SearchDiagnostics, Solved};
use crate::stats::RunStats;

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    /// Refuse instances with more vertices than this.
    pub max_vertices: usize,
    /// Refuse a visit order with more realizations than this.
    pub max_paths_per_tour: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_vertices: 7, max_paths_per_tour: 100_000 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("{0} vertices is beyond the oracle's limit of {1}")]
    TooLarge(usize, usize),
    #[error("oracle incomplete: a visit order has more than {0} realizations")]
    Incomplete(usize),
}

/// All walks realizing `order` in the restricted class: a leg takes the
/// direct edge when it exists, otherwise any simple detour path; closed
/// orders get a final leg back to the start. Errors out past `budget`.
pub fn enumerate_realizations(
    instance: &GcsInstance,
    order: &[usize],
    closed: bool,
    budget: usize,
) -> Result<Vec<Vec<usize>>, OracleError> {
    let mut legs: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    if closed && order.len() >= 2 {
        legs.push((order[order.len() - 1], order[0]));
    }
    let mut walks: Vec<Vec<usize>> = vec![vec![order[0]]];
    for &(from, to) in &legs {
        let segment_tails = leg_paths(instance, from, to, budget)?;
        if segment_tails.is_empty() {
            return Ok(Vec::new());
        }
        let mut extended = Vec::new();
        for walk in &walks {
            for tail in &segment_tails {
                if extended.len() >= budget {
                    return Err(OracleError::Incomplete(budget));
                }
                let mut next = walk.clone();
                next.extend_from_slice(tail);
                extended.push(next);
            }
        }
        walks = extended;
    }
    Ok(walks)
}

/// Simple paths from `from` to `to`, returned without their first vertex;
/// just the direct edge when it exists.
fn leg_paths(
    instance: &GcsInstance,
    from: usize,
    to: usize,
    budget: usize,
) -> Result<Vec<Vec<usize>>, OracleError> {
    if instance.has_edge(from, to) {
        return Ok(vec![vec![to]]);
    }
    let mut found = Vec::new();
    let mut path = vec![from];
    let mut on_path = vec![false; instance.num_vertices()];
    on_path[from] = true;
    dfs(instance, to, budget, &mut path, &mut on_path, &mut found)?;
    Ok(found)
}

fn dfs(
    instance: &GcsInstance,
    to: usize,
    budget: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut Vec<Vec<usize>>,
) -> Result<(), OracleError> {
    let last = *path.last().expect("path never empties");
    for &next in instance.out_neighbors(last) {
        if next == to {
            if found.len() >= budget {
                return Err(OracleError::Incomplete(budget));
            }
            found.push(path[1..].iter().copied().chain([to]).collect());
            continue;
        }
        if on_path[next] {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        dfs(instance, to, budget, path, on_path, found)?;
        path.pop();
        on_path[next] = false;
    }
    Ok(())
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

struct Best {
    cost: f64,
    order: Vec<usize>,
    path: Vec<usize>,
    trajectory: Vec<Vec<f64>>,
}

/// Solve by sheer enumeration. Every feasible closed walk in the restricted
/// class is priced; the cheapest wins, ties going to the earlier visit
/// order and earlier realization.
pub fn brute_force(instance: &GcsInstance, limits: OracleLimits) -> Result<Solved, OracleError> {
    let n = instance.num_vertices();
    if n > limits.max_vertices {
        return Err(OracleError::TooLarge(n, limits.max_vertices));
    }
    assert!(n >= 3, "instances have at least three vertices");
    let t0 = Instant::now();
    let stats = RunStats::default();

    let rest: Vec<usize> = (1..n).collect();
    let orders: Vec<Vec<usize>> = permutations(&rest)
        .into_iter()
        .map(|tail| {
            let mut order = vec![0];
            order.extend(tail);
            order
        })
        .collect();

    let evaluated: Vec<Result<Option<Best>, OracleError>> = orders
        .par_iter()
        .map(|order| {
            let walks = enumerate_realizations(instance, order, true, limits.max_paths_per_tour)?;
            let mut best: Option<Best> = None;
            for path in walks {
                if let Ok((points, cost)) = optimal_trajectory(instance, &path, true, Some(&stats))
                {
                    if best.as_ref().is_none_or(|b| cost < b.cost) {
                        best = Some(Best {
                            cost,
                            order: order.clone(),
                            path,
                            trajectory: points,
                        });
                    }
                }
            }
            Ok(best)
        })
        .collect();

    let mut best: Option<Best> = None;
    for item in evaluated {
        if let Some(cand) = item? {
            if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
                best = Some(cand);
            }
        }
    }

    let wall = t0.elapsed().as_secs_f64();
    let solved = match best {
        None => Solved {
            status: Status::Infeasible,
            cost: None,
            lb_star: None,
            rho: None,
            tour: None,
            path: None,
            trajectory: None,
            stats: stats.snapshot(wall),
            diagnostics: SearchDiagnostics::default(),
            events: Vec::new(),
        },
        Some(b) => Solved {
            status: Status::Optimal,
            cost: Some(b.cost),
            lb_star: Some(b.cost),
            rho: Some(0.0),
            tour: Some(b.order),
            path: Some(b.path),
            trajectory: Some(b.trajectory),
            stats: stats.snapshot(wall),
            diagnostics: SearchDiagnostics::default(),
            events: Vec::new(),
        },
    };
    Ok(solved)
}

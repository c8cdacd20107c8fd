//! Small 0/1 integer programs by branch and bound.
//!
//! Relaxations are solved with the same interior-point backend as
//! everything else. Nodes are explored best-bound-first; branching picks
//! the most fractional variable. A candidate only replaces the incumbent
//! when it is better by more than a hair, and nodes are pruned only when
//! they are worse by more than a hair, so cost ties survive to the end and
//! a caller-supplied key picks among them deterministically.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::bounds::Ordered;
use crate::conic::{ProgramBuilder, SolveStatus};

pub(crate) type SparseRow = Vec<(usize, f64)>;

const COST_TIE_TOL: f64 = 1e-9;
const INTEGRALITY_TOL: f64 = 1e-6;

/// Nodes are pruned only when their relaxation bound beats the incumbent by
/// more than this, so cost ties survive. It must dominate the interior
/// point solver's objective error, which is far looser than the tie
/// tolerance on exact candidate sums.
fn prune_margin(best: f64) -> f64 {
    1e-6 * (1.0 + best.abs())
}

#[derive(Debug, Clone, Default)]
pub struct BinaryProgram {
    pub num_vars: usize,
    /// Minimized. One coefficient per variable.
    pub objective: Vec<f64>,
    pub eq: Vec<(SparseRow, f64)>,
    pub le: Vec<(SparseRow, f64)>,
}

#[derive(Debug, Clone)]
pub enum IlpOutcome {
    Optimal { assignment: Vec<bool>, objective: f64 },
    Infeasible,
}

/// The search was cut off by its deadline before proving anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integer program hit its deadline")]
pub struct IlpTimeout;

struct Node {
    fixes: Vec<(usize, bool)>,
}

/// Minimize over binary assignments; `tie_key` orders cost-tied optima
/// (smaller key wins).
pub fn solve<K: Ord>(
    prog: &BinaryProgram,
    tie_key: impl Fn(&[bool]) -> K,
    deadline: Option<Instant>,
) -> Result<IlpOutcome, IlpTimeout> {
    assert_eq!(prog.objective.len(), prog.num_vars);
    let mut heap: BinaryHeap<(Reverse<(Ordered, u64)>, usize)> = BinaryHeap::new();
    let mut nodes: Vec<Node> = vec![Node { fixes: Vec::new() }];
    heap.push((Reverse((Ordered(f64::NEG_INFINITY), 0)), 0));
    let mut seq = 1u64;
    let mut incumbent: Option<(Vec<bool>, f64, K)> = None;

    while let Some((Reverse((Ordered(bound), _)), id)) = heap.pop() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(IlpTimeout);
        }
        if let Some((_, best, _)) = &incumbent {
            if bound > best + prune_margin(*best) {
                break; // best-bound order: everything left is worse
            }
        }
        let node = &nodes[id];
        let fixes = node.fixes.clone();
        let relax = solve_relaxation(prog, &fixes);
        let (x, lp_obj) = match relax {
            Relaxed::Infeasible => continue,
            Relaxed::Solved { x, objective } => (x, objective),
            Relaxed::Failed => {
                // Can't trust the relaxation: branch blindly on the first
                // unfixed variable. Sound, merely slower.
                if let Some(var) = first_unfixed(prog.num_vars, &fixes) {
                    for value in [false, true] {
                        let mut f = fixes.clone();
                        f.push((var, value));
                        nodes.push(Node { fixes: f });
                        heap.push((Reverse((Ordered(bound), seq)), nodes.len() - 1));
                        seq += 1;
                    }
                } else if let Some(assignment) = exact_assignment(prog, &fixes) {
                    offer(&mut incumbent, prog, assignment, &tie_key);
                }
                continue;
            }
        };
        let bound = bound.max(lp_obj);
        if let Some((_, best, _)) = &incumbent {
            if bound > best + prune_margin(*best) {
                continue;
            }
        }
        let frac = most_fractional(&x, &fixes);
        match frac {
            None => {
                let assignment: Vec<bool> = x.iter().map(|&v| v > 0.5).collect();
                if satisfies(prog, &assignment) {
                    offer(&mut incumbent, prog, assignment, &tie_key);
                } else if let Some(var) = first_unfixed(prog.num_vars, &fixes) {
                    // Rounding broke a constraint the relaxation met only
                    // approximately; split and let the children settle it.
                    for value in [false, true] {
                        let mut f = fixes.clone();
                        f.push((var, value));
                        nodes.push(Node { fixes: f });
                        heap.push((Reverse((Ordered(bound), seq)), nodes.len() - 1));
                        seq += 1;
                    }
                }
            }
            Some(var) => {
                for value in [false, true] {
                    let mut f = fixes.clone();
                    f.push((var, value));
                    nodes.push(Node { fixes: f });
                    heap.push((Reverse((Ordered(bound), seq)), nodes.len() - 1));
                    seq += 1;
                }
            }
        }
    }
    Ok(match incumbent {
        Some((assignment, objective, _)) => IlpOutcome::Optimal { assignment, objective },
        None => IlpOutcome::Infeasible,
    })
}

fn offer<K: Ord>(
    incumbent: &mut Option<(Vec<bool>, f64, K)>,
    prog: &BinaryProgram,
    assignment: Vec<bool>,
    tie_key: &impl Fn(&[bool]) -> K,
) {
    let objective: f64 = assignment
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| prog.objective[i])
        .sum();
    let replace = match incumbent {
        None => true,
        Some((_, best, key)) => {
            objective < *best - COST_TIE_TOL
                || ((objective - *best).abs() <= COST_TIE_TOL && tie_key(&assignment) < *key)
        }
    };
    if replace {
        let key = tie_key(&assignment);
        *incumbent = Some((assignment, objective, key));
    }
}

enum Relaxed {
    Solved { x: Vec<f64>, objective: f64 },
    Infeasible,
    Failed,
}

fn solve_relaxation(prog: &BinaryProgram, fixes: &[(usize, bool)]) -> Relaxed {
    let mut lo = vec![0.0; prog.num_vars];
    let mut hi = vec![1.0; prog.num_vars];
    for &(i, v) in fixes {
        let val = if v { 1.0 } else { 0.0 };
        lo[i] = val;
        hi[i] = val;
    }
    let mut pb = ProgramBuilder::new();
    let y = pb.add_vars(prog.num_vars);
    for i in 0..prog.num_vars {
        pb.add_ineq(vec![(y + i, 1.0)], hi[i]);
        pb.add_ineq(vec![(y + i, -1.0)], -lo[i]);
        pb.add_linear_cost(y + i, prog.objective[i]);
    }
    for (row, rhs) in &prog.eq {
        pb.add_eq(row.iter().map(|&(i, c)| (y + i, c)).collect(), *rhs);
    }
    for (row, rhs) in &prog.le {
        pb.add_ineq(row.iter().map(|&(i, c)| (y + i, c)).collect(), *rhs);
    }
    let sol = pb.solve(None);
    match sol.status {
        SolveStatus::Optimal => Relaxed::Solved { x: sol.x[..prog.num_vars].to_vec(), objective: sol.objective },
        SolveStatus::Infeasible => Relaxed::Infeasible,
        _ => Relaxed::Failed,
    }
}

fn most_fractional(x: &[f64], fixes: &[(usize, bool)]) -> Option<usize> {
    let fixed: std::collections::HashSet<usize> = fixes.iter().map(|&(i, _)| i).collect();
    let mut best: Option<(f64, usize)> = None;
    for (i, &v) in x.iter().enumerate() {
        if fixed.contains(&i) {
            continue;
        }
        let dist = (v - v.round()).abs();
        if dist <= INTEGRALITY_TOL {
            continue;
        }
        let away = (v - 0.5).abs();
        if best.is_none_or(|(b, _)| away < b) {
            best = Some((away, i));
        }
    }
    best.map(|(_, i)| i)
}

fn first_unfixed(n: usize, fixes: &[(usize, bool)]) -> Option<usize> {
    let fixed: std::collections::HashSet<usize> = fixes.iter().map(|&(i, _)| i).collect();
    (0..n).find(|i| !fixed.contains(i))
}

fn exact_assignment(prog: &BinaryProgram, fixes: &[(usize, bool)]) -> Option<Vec<bool>> {
    if fixes.len() < prog.num_vars {
        return None;
    }
    let mut assignment = vec![false; prog.num_vars];
    for &(i, v) in fixes {
        assignment[i] = v;
    }
    satisfies(prog, &assignment).then_some(assignment)
}

fn satisfies(prog: &BinaryProgram, assignment: &[bool]) -> bool {
    let eval = |row: &SparseRow| -> f64 {
        row.iter().filter(|&&(i, _)| assignment[i]).map(|&(_, c)| c).sum()
    };
    prog.eq.iter().all(|(row, rhs)| (eval(row) - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()))
        && prog.le.iter().all(|(row, rhs)| eval(row) <= rhs + 1e-6 * (1.0 + rhs.abs()))
}

//! The conic layer: everything that touches the interior-point solver.
//!
//! All programs here are second-order-cone programs assembled from set
//! memberships and cost terms. A `ProgramBuilder` collects equalities,
//! inequalities and norm epigraphs over a flat variable vector, hands them
//! to Clarabel, and re-checks the returned point against the constraints so
//! a silently inaccurate solve surfaces as `NumericalFailure` instead of a
//! wrong answer.

use std::collections::HashMap;
use std::sync::Mutex;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::linalg::{dot, least_squares_solution, norm2, null_space};
use crate::model::{trajectory_cost, ConvexSet, CostKind, CostTerm, GcsInstance};
use crate::stats::{bump, RunStats};

const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

type SparseRow = Vec<(usize, f64)>;

#[derive(Default)]
pub(crate) struct ProgramBuilder {
    num_vars: usize,
    q: Vec<f64>,
    constant: f64,
    eq_rows: Vec<(SparseRow, f64)>,
    ineq_rows: Vec<(SparseRow, f64)>,
    /// One entry per epigraph `t >= ||M x + m||`: the epigraph variable and
    /// the affine rows (sparse coefficients, offset) under the norm.
    socs: Vec<(usize, Vec<(SparseRow, f64)>)>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vars(&mut self, k: usize) -> usize {
        let start = self.num_vars;
        self.num_vars += k;
        self.q.resize(self.num_vars, 0.0);
        start
    }

    pub fn add_eq(&mut self, row: SparseRow, rhs: f64) {
        self.eq_rows.push((row, rhs));
    }

    /// row . x <= rhs
    pub fn add_ineq(&mut self, row: SparseRow, rhs: f64) {
        self.ineq_rows.push((row, rhs));
    }

    pub fn add_linear_cost(&mut self, var: usize, coeff: f64) {
        self.q[var] += coeff;
    }

    /// Constrain the variables starting at `offset` to lie in `set`.
    pub fn add_membership(&mut self, set: &ConvexSet, offset: usize) {
        self.add_membership_split(set, &[(offset, set.dim)]);
    }

    /// Same, but the set's coordinates are scattered across variable blocks
    /// given as (offset, len) pieces in order. Used for edge sets, whose
    /// coordinates are the concatenation of two occurrence blocks.
    pub fn add_membership_split(&mut self, set: &ConvexSet, blocks: &[(usize, usize)]) {
        debug_assert_eq!(blocks.iter().map(|b| b.1).sum::<usize>(), set.dim);
        let map = block_map(blocks);
        for (row, &rhs) in set.a.iter().zip(&set.b) {
            self.add_ineq(scatter(row, &map), rhs);
        }
        for (row, &rhs) in set.c.iter().zip(&set.d) {
            self.add_eq(scatter(row, &map), rhs);
        }
    }

    /// Add `scale * term(z)` to the objective, where z is scattered across
    /// `blocks`. Norm terms allocate an epigraph variable.
    pub fn add_cost_term(&mut self, term: &CostTerm, blocks: &[(usize, usize)], scale: f64) {
        let weight = term.weight * scale;
        if weight == 0.0 {
            return;
        }
        let map = block_map(blocks);
        match term.kind {
            CostKind::Linear => {
                for (var, coeff) in scatter(&term.m_matrix[0], &map) {
                    self.q[var] += weight * coeff;
                }
                self.constant += weight * term.m_offset[0];
            }
            CostKind::Norm2 => {
                let t = self.add_vars(1);
                self.q[t] += weight;
                let rows = term
                    .m_matrix
                    .iter()
                    .zip(&term.m_offset)
                    .map(|(row, &off)| (scatter(row, &map), off))
                    .collect();
                self.socs.push((t, rows));
            }
        }
    }

    pub fn solve(&self, stats: Option<&RunStats>) -> RawSolution {
        if let Some(s) = stats {
            bump(&s.conic_solves);
        }
        let n = self.num_vars;
        if self.eq_rows.is_empty() && self.ineq_rows.is_empty() && self.socs.is_empty() {
            // Clarabel wants at least one constraint; an unconstrained
            // program here is always a feasibility probe on a free set.
            let feasible = self.q.iter().all(|&c| c == 0.0);
            return RawSolution {
                status: if feasible { SolveStatus::Optimal } else { SolveStatus::Unbounded },
                x: vec![0.0; n],
                objective: self.constant,
            };
        }

        // Rows stack as: equalities (zero cone), inequalities (nonnegative
        // cone), then one second-order cone [t; M x + m] per epigraph.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        let push_row = |triplets: &mut Vec<(usize, usize, f64)>,
                            rhs: &mut Vec<f64>,
                            row: &SparseRow,
                            b: f64,
                            negate: bool| {
            let r = rhs.len();
            for &(j, v) in row {
                let v = if negate { -v } else { v };
                if v != 0.0 {
                    triplets.push((r, j, v));
                }
            }
            rhs.push(b);
        };
        for (row, b) in &self.eq_rows {
            push_row(&mut triplets, &mut rhs, row, *b, false);
        }
        for (row, b) in &self.ineq_rows {
            push_row(&mut triplets, &mut rhs, row, *b, false);
        }
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if !self.eq_rows.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(self.eq_rows.len()));
        }
        if !self.ineq_rows.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(self.ineq_rows.len()));
        }
        for (t, rows) in &self.socs {
            // s = b - A x must equal (t, M x + m).
            push_row(&mut triplets, &mut rhs, &vec![(*t, 1.0)], 0.0, true);
            for (row, off) in rows {
                push_row(&mut triplets, &mut rhs, row, *off, true);
            }
            cones.push(SupportedConeT::SecondOrderConeT(rows.len() + 1));
        }

        let a = csc_from_triplets(rhs.len(), n, &mut triplets);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut settings = DefaultSettings::<f64>::default();
        settings.verbose = false;
        settings.tol_feas = 1e-8;
        settings.tol_gap_abs = 1e-8;
        settings.tol_gap_rel = 1e-8;
        let Ok(mut solver) = DefaultSolver::new(&p, &self.q, &a, &rhs, &cones, settings) else {
            return RawSolution {
                status: SolveStatus::NumericalFailure,
                x: vec![0.0; n],
                objective: f64::NAN,
            };
        };
        solver.solve();
        let status = match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalFailure,
        };
        let x = solver.solution.x.clone();
        let mut out = RawSolution {
            status,
            objective: solver.solution.obj_val + self.constant,
            x,
        };
        if out.status == SolveStatus::Optimal && !self.point_is_feasible(&out.x, RESIDUAL_TOL) {
            out.status = SolveStatus::NumericalFailure;
        }
        out
    }

    fn point_is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let eval = |row: &SparseRow| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        self.eq_rows.iter().all(|(row, b)| (eval(row) - b).abs() <= tol)
            && self.ineq_rows.iter().all(|(row, b)| eval(row) <= b + tol)
            && self.socs.iter().all(|(t, rows)| {
                let arm: Vec<f64> = rows.iter().map(|(row, off)| eval(row) + off).collect();
                norm2(&arm) <= x[*t] + tol
            })
    }
}

fn block_map(blocks: &[(usize, usize)]) -> Vec<usize> {
    let mut map = Vec::new();
    for &(offset, len) in blocks {
        map.extend((offset..offset + len).collect::<Vec<_>>());
    }
    map
}

fn scatter(row: &[f64], map: &[usize]) -> SparseRow {
    row.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| (map[j], v))
        .collect()
}

fn csc_from_triplets(m: usize, n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut counts = vec![0usize; n];
    let mut rowval: Vec<usize> = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for &(r, c, v) in triplets.iter() {
        if last == Some((c, r)) {
            *nzval.last_mut().unwrap() += v;
        } else {
            counts[c] += 1;
            rowval.push(r);
            nzval.push(v);
            last = Some((c, r));
        }
    }
    let mut colptr = vec![0usize; n + 1];
    for c in 0..n {
        colptr[c + 1] = colptr[c] + counts[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// The point a set pins outright: every coordinate fixed by some
/// single-coefficient equality row and the remaining rows consistent with
/// those values. `None` when the set leaves any freedom, or pins a point its
/// own inequalities reject (the full solve should diagnose that instead).
fn pinned_point(set: &ConvexSet) -> Option<Vec<f64>> {
    let mut x = vec![f64::NAN; set.dim];
    for (row, &rhs) in set.c.iter().zip(&set.d) {
        let mut nz = row.iter().enumerate().filter(|&(_, &v)| v != 0.0);
        let (Some((j, &coef)), None) = (nz.next(), nz.next()) else { continue };
        let val = rhs / coef;
        if x[j].is_nan() {
            x[j] = val;
        } else if (x[j] - val).abs() > 1e-9 {
            return None;
        }
    }
    if x.iter().any(|v| v.is_nan()) {
        return None;
    }
    set.contains(&x, 1e-9).then_some(x)
}

/// Minimum total cost of a trajectory through `path`, where consecutive
/// occurrences are tied by their edge sets and, for closed paths, the final
/// occurrence matches the first on the closure coordinates. Vertex costs are
/// charged on every occurrence except the last, matching
/// `model::trajectory_cost`.
pub fn optimal_trajectory(
    instance: &GcsInstance,
    path: &[usize],
    closed: bool,
    stats: Option<&RunStats>,
) -> Result<(Vec<Vec<f64>>, f64), SolveStatus> {
    assert!(path.len() >= 2, "trajectory needs at least two occurrences");
    if closed {
        assert_eq!(path[0], path[path.len() - 1], "closed path must return to its start");
    }
    // Singleton sets leave nothing to optimize: the objective is a direct
    // evaluation at the pinned points (closure holds because the first and
    // last occurrence pin identically). Anything the pinned points violate
    // falls through to the full solve so statuses keep one source of truth.
    if let Some(points) =
        path.iter().map(|&v| pinned_point(&instance.vertex(v).set)).collect::<Option<Vec<_>>>()
    {
        let mut feasible = true;
        for i in 0..path.len() - 1 {
            let Some(edge) = instance.edge(path[i], path[i + 1]) else {
                return Err(SolveStatus::Infeasible);
            };
            let mut z = points[i].clone();
            z.extend_from_slice(&points[i + 1]);
            if !edge.set.contains(&z, 1e-9) {
                feasible = false;
                break;
            }
        }
        if feasible {
            let cost = trajectory_cost(instance, path, &points)
                .expect("pinned evaluation walks existing edges");
            return Ok((points, cost));
        }
    }
    let mut pb = ProgramBuilder::new();
    let offsets: Vec<usize> = path
        .iter()
        .map(|&v| pb.add_vars(instance.vertex(v).set.dim))
        .collect();
    for (i, &v) in path.iter().enumerate() {
        let vert = instance.vertex(v);
        pb.add_membership(&vert.set, offsets[i]);
        if i + 1 < path.len() {
            for term in &vert.cost_terms {
                pb.add_cost_term(term, &[(offsets[i], vert.set.dim)], 1.0);
            }
        }
    }
    for i in 0..path.len() - 1 {
        let (u, v) = (path[i], path[i + 1]);
        let Some(edge) = instance.edge(u, v) else {
            return Err(SolveStatus::Infeasible);
        };
        let du = instance.vertex(u).set.dim;
        let dv = instance.vertex(v).set.dim;
        let blocks = [(offsets[i], du), (offsets[i + 1], dv)];
        pb.add_membership_split(&edge.set, &blocks);
        for term in &edge.cost_terms {
            pb.add_cost_term(term, &blocks, 1.0);
        }
    }
    if closed {
        let last = *offsets.last().unwrap();
        for &coord in &instance.vertex(path[0]).closure_mask {
            pb.add_eq(vec![(offsets[0] + coord, 1.0), (last + coord, -1.0)], 0.0);
        }
    }
    let sol = pb.solve(stats);
    match sol.status {
        SolveStatus::Optimal => {
            let points = path
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let d = instance.vertex(v).set.dim;
                    sol.x[offsets[i]..offsets[i] + d].to_vec()
                })
                .collect();
            Ok((points, sol.objective))
        }
        other => Err(other),
    }
}

/// Cheapest way to pass through `v` coming from `u` and leaving toward `w`:
/// half the (u,v) edge cost, plus v's vertex cost, plus half the (v,w) edge
/// cost, minimized jointly over one occurrence of each endpoint. `None`
/// means the passage is infeasible (no such edges, or empty intersection).
/// A numerical failure falls back to zero, which keeps the bound sound.
pub fn triplet_lower_bound(
    instance: &GcsInstance,
    u: usize,
    v: usize,
    w: usize,
    stats: Option<&RunStats>,
) -> Option<f64> {
    let e_in = instance.edge(u, v)?;
    let e_out = instance.edge(v, w)?;
    let mut pb = ProgramBuilder::new();
    let (du, dv, dw) = (
        instance.vertex(u).set.dim,
        instance.vertex(v).set.dim,
        instance.vertex(w).set.dim,
    );
    let xu = pb.add_vars(du);
    let xv = pb.add_vars(dv);
    let xw = pb.add_vars(dw);
    pb.add_membership(&instance.vertex(u).set, xu);
    pb.add_membership(&instance.vertex(v).set, xv);
    pb.add_membership(&instance.vertex(w).set, xw);
    pb.add_membership_split(&e_in.set, &[(xu, du), (xv, dv)]);
    pb.add_membership_split(&e_out.set, &[(xv, dv), (xw, dw)]);
    for term in &e_in.cost_terms {
        pb.add_cost_term(term, &[(xu, du), (xv, dv)], 0.5);
    }
    for term in &instance.vertex(v).cost_terms {
        pb.add_cost_term(term, &[(xv, dv)], 1.0);
    }
    for term in &e_out.cost_terms {
        pb.add_cost_term(term, &[(xv, dv), (xw, dw)], 0.5);
    }
    let sol = pb.solve(stats);
    match sol.status {
        SolveStatus::Optimal => Some(sol.objective.max(0.0)),
        SolveStatus::Infeasible => None,
        _ => Some(0.0),
    }
}

/// Least point of a bounded polyhedron under the largest-inscribed-ball
/// criterion, measured inside the affine hull: equalities are eliminated by
/// a null-space substitution so a flat set still gets the center of its
/// relative interior.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CenterError {
    #[error("set is empty")]
    Empty,
    #[error("set is unbounded")]
    Unbounded,
    #[error("numerical failure while centering")]
    Numerical,
}

pub fn chebyshev_center(set: &ConvexSet) -> Result<(Vec<f64>, f64), CenterError> {
    let x0 = if set.c.is_empty() {
        vec![0.0; set.dim]
    } else {
        least_squares_solution(&set.c, &set.d, set.dim, 1e-9).ok_or(CenterError::Empty)?
    };
    let basis = if set.c.is_empty() {
        identity_basis(set.dim)
    } else {
        null_space(&set.c, set.dim)
    };
    if basis.is_empty() {
        // The equalities pin a single point; the inequalities decide.
        for (row, &b) in set.a.iter().zip(&set.b) {
            if dot(row, &x0) > b + 1e-9 {
                return Err(CenterError::Empty);
            }
        }
        return Ok((x0, 0.0));
    }
    let m = basis.len();
    let mut pb = ProgramBuilder::new();
    let z = pb.add_vars(m);
    let r = pb.add_vars(1);
    pb.add_linear_cost(r, -1.0);
    pb.add_ineq(vec![(r, -1.0)], 0.0);
    let mut any_row = false;
    for (row, &b) in set.a.iter().zip(&set.b) {
        let coeffs: Vec<f64> = basis.iter().map(|n| dot(row, n)).collect();
        let gain = norm2(&coeffs);
        let slack = b - dot(row, &x0);
        if gain <= 1e-12 {
            if slack < -1e-9 {
                return Err(CenterError::Empty);
            }
            continue;
        }
        any_row = true;
        let mut srow: SparseRow =
            coeffs.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (z + j, v)).collect();
        srow.push((r, gain));
        pb.add_ineq(srow, slack);
    }
    if !any_row {
        return Err(CenterError::Unbounded);
    }
    let sol = pb.solve(None);
    match sol.status {
        SolveStatus::Optimal => {
            let radius = sol.x[r].max(0.0);
            if !radius.is_finite() {
                return Err(CenterError::Numerical);
            }
            let mut center = x0;
            for (j, n) in basis.iter().enumerate() {
                let zj = sol.x[z + j];
                for (c, nv) in center.iter_mut().zip(n) {
                    *c += zj * nv;
                }
            }
            Ok((center, radius))
        }
        SolveStatus::Infeasible => Err(CenterError::Empty),
        SolveStatus::Unbounded => Err(CenterError::Unbounded),
        SolveStatus::NumericalFailure => Err(CenterError::Numerical),
    }
}

fn identity_basis(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// `Some(true)` if provably empty, `Some(false)` if a feasible point was
/// found, `None` if the solver could not decide.
pub fn set_is_empty(set: &ConvexSet) -> Option<bool> {
    let mut pb = ProgramBuilder::new();
    let x = pb.add_vars(set.dim);
    pb.add_membership(set, x);
    match pb.solve(None).status {
        SolveStatus::Optimal => Some(false),
        SolveStatus::Infeasible => Some(true),
        SolveStatus::Unbounded => Some(false),
        SolveStatus::NumericalFailure => None,
    }
}

/// First coordinate in which the set fails to be bounded, if any.
pub fn unbounded_coordinate(set: &ConvexSet) -> Option<usize> {
    for coord in 0..set.dim {
        for sign in [1.0, -1.0] {
            let mut pb = ProgramBuilder::new();
            let x = pb.add_vars(set.dim);
            pb.add_membership(set, x);
            pb.add_linear_cost(x + coord, sign);
            if pb.solve(None).status == SolveStatus::Unbounded {
                return Some(coord);
            }
        }
    }
    None
}

/// Prove `term` nonnegative over `set` (intersected with per-endpoint
/// memberships when the set couples an edge's two endpoint blocks). Returns
/// false when a negative value exists or the proof attempt failed.
pub fn linear_term_nonnegative(
    set: &ConvexSet,
    endpoint_sets: &[&ConvexSet],
    term: &CostTerm,
) -> bool {
    let mut pb = ProgramBuilder::new();
    let x = pb.add_vars(set.dim);
    pb.add_membership(set, x);
    let mut offset = x;
    for s in endpoint_sets {
        pb.add_membership(s, offset);
        offset += s.dim;
    }
    pb.add_cost_term(term, &[(x, set.dim)], 1.0);
    let sol = pb.solve(None);
    match sol.status {
        SolveStatus::Optimal => sol.objective >= -1e-9,
        SolveStatus::Infeasible => true,
        _ => false,
    }
}

/// Memoized closed/open trajectory solves keyed on the exact occurrence
/// sequence. Shared across a whole search run.
#[derive(Default)]
pub struct TrajectoryCache {
    map: Mutex<HashMap<(Vec<usize>, bool), Option<(Vec<Vec<f64>>, f64)>>>,
}

impl TrajectoryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(
        &self,
        instance: &GcsInstance,
        path: &[usize],
        closed: bool,
        stats: &RunStats,
    ) -> Option<(Vec<Vec<f64>>, f64)> {
        let key = (path.to_vec(), closed);
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            bump(&stats.cache_hits);
            return hit.clone();
        }
        let result = optimal_trajectory(instance, path, closed, Some(stats)).ok();
        self.map.lock().unwrap().insert(key, result.clone());
        result
    }
}

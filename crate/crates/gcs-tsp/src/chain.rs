//! Cheap per-walk lower bounds from per-coordinate interval chains.
//!
//! On instances whose edges glue coordinates with plain equalities and whose
//! vertex costs are norms of coordinate differences (segment instances are
//! the archetype), following one coordinate pair through the glue rows turns
//! a walk into a chain of scalar intervals. The cheapest scalar sweep through
//! an interval chain is the classic window scan, and the per-axis minima
//! combine below the true cost: the sum of per-occurrence norms is at least
//! the norm of the per-axis summed moves. Everything that does not fit the
//! pattern is relaxed away (rows dropped, closure ignored, interval hulls
//! instead of exact sets), so the result is always a valid lower bound and
//! the search may skip an exact trajectory solve whenever it already reaches
//! the incumbent.

use std::collections::HashMap;

use crate::model::{ConvexSet, CostKind, GcsInstance};

/// Per-instance tables for the interval-chain walk bound. `build` returns
/// `None` when no vertex cost row fits the difference pattern, in which case
/// the bound would be vacuous anyway.
pub struct ChainBound {
    /// Interval hull of each vertex coordinate, from single-coefficient rows.
    intervals: Vec<Vec<(f64, f64)>>,
    /// Matched norm rows per vertex: entering coordinate to leaving
    /// coordinate, injective so chains never share a row.
    moves: Vec<HashMap<usize, usize>>,
    /// Interval minimum of each vertex's linear cost terms.
    lin_floor: Vec<f64>,
    /// Glued coordinate pairs per edge: leaving coordinate of the tail to
    /// entering coordinate of the head.
    glue: HashMap<(usize, usize), HashMap<usize, usize>>,
    /// Closure-equated coordinates per vertex, as membership flags.
    closure: Vec<Vec<bool>>,
    /// Weight times coefficient shared by every matched norm row.
    scale: f64,
}

fn interval_hull(set: &ConvexSet) -> Vec<(f64, f64)> {
    let mut hull = vec![(f64::NEG_INFINITY, f64::INFINITY); set.dim];
    let single = |row: &[f64]| {
        let mut nz = row.iter().enumerate().filter(|&(_, &v)| v != 0.0);
        match (nz.next(), nz.next()) {
            (Some((j, &coef)), None) => Some((j, coef)),
            _ => None,
        }
    };
    for (row, &rhs) in set.a.iter().zip(&set.b) {
        if let Some((j, coef)) = single(row) {
            if coef > 0.0 {
                hull[j].1 = hull[j].1.min(rhs / coef);
            } else {
                hull[j].0 = hull[j].0.max(rhs / coef);
            }
        }
    }
    for (row, &rhs) in set.c.iter().zip(&set.d) {
        if let Some((j, coef)) = single(row) {
            hull[j].0 = hull[j].0.max(rhs / coef);
            hull[j].1 = hull[j].1.min(rhs / coef);
        }
    }
    hull
}

/// A row is a move when it reads `coef * (x[out] - x[in])` exactly.
fn difference_row(row: &[f64], offset: f64) -> Option<(usize, usize, f64)> {
    if offset != 0.0 {
        return None;
    }
    let nz: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != 0.0)
        .map(|(j, &v)| (j, v))
        .collect();
    let [(j1, c1), (j2, c2)] = nz[..] else { return None };
    if (c1 + c2).abs() > 1e-12 {
        return None;
    }
    if c1 < 0.0 {
        Some((j1, j2, -c1))
    } else {
        Some((j2, j1, c1))
    }
}

/// The cheapest sweep of a scalar through a sequence of intervals: the
/// window scan is free while windows overlap and pays each gap once. The
/// spread extremes sharpen closed sweeps, which must cross from the lowest
/// interval ceiling to the highest interval floor and back.
#[derive(Clone, Copy)]
struct Sweep {
    band: (f64, f64),
    base: f64,
    top_floor: f64,
    low_ceiling: f64,
}

impl Sweep {
    fn start(first: (f64, f64)) -> Self {
        Sweep { band: first, base: 0.0, top_floor: first.0, low_ceiling: first.1 }
    }

    fn advance(&mut self, next: (f64, f64)) {
        if next.1 < self.band.0 {
            self.base += self.band.0 - next.1;
            self.band = (next.1, next.1);
        } else if next.0 > self.band.1 {
            self.base += next.0 - self.band.1;
            self.band = (next.0, next.0);
        } else {
            self.band = (self.band.0.max(next.0), self.band.1.min(next.1));
        }
        self.top_floor = self.top_floor.max(next.0);
        self.low_ceiling = self.low_ceiling.min(next.1);
    }

    fn total(&self, cyclic: bool) -> f64 {
        if cyclic {
            self.base.max(2.0 * (self.top_floor - self.low_ceiling))
        } else {
            self.base
        }
    }
}


impl ChainBound {
    pub fn build(instance: &GcsInstance) -> Option<Self> {
        let n = instance.num_vertices();
        let intervals: Vec<Vec<(f64, f64)>> =
            (0..n).map(|v| interval_hull(&instance.vertex(v).set)).collect();

        let mut scale: Option<f64> = None;
        let mut moves: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n];
        for v in 0..n {
            for term in &instance.vertex(v).cost_terms {
                if term.kind != CostKind::Norm2 || term.weight <= 0.0 {
                    continue;
                }
                for (row, &off) in term.m_matrix.iter().zip(&term.m_offset) {
                    let Some((c_in, c_out, coef)) = difference_row(row, off) else { continue };
                    let s = term.weight * coef;
                    match scale {
                        None => scale = Some(s),
                        Some(s0) if (s0 - s).abs() > 1e-12 * s0.max(s) => return None,
                        _ => {}
                    }
                    if moves[v].contains_key(&c_in) || moves[v].values().any(|&o| o == c_out) {
                        continue;
                    }
                    moves[v].insert(c_in, c_out);
                }
            }
        }
        let scale = scale?;

        let lin_floor: Vec<f64> = (0..n)
            .map(|v| {
                instance
                    .vertex(v)
                    .cost_terms
                    .iter()
                    .filter(|t| t.kind == CostKind::Linear)
                    .map(|t| {
                        let mut lo = t.m_offset[0];
                        for (j, &coef) in t.m_matrix[0].iter().enumerate() {
                            if coef > 0.0 {
                                lo += coef * intervals[v][j].0;
                            } else if coef < 0.0 {
                                lo += coef * intervals[v][j].1;
                            }
                        }
                        t.weight * lo
                    })
                    .sum()
            })
            .collect();

        let mut glue: HashMap<(usize, usize), HashMap<usize, usize>> = HashMap::new();
        for edge in instance.edges() {
            let du = instance.vertex(edge.from).set.dim;
            let map = glue.entry((edge.from, edge.to)).or_default();
            for (row, &rhs) in edge.set.c.iter().zip(&edge.set.d) {
                if rhs != 0.0 {
                    continue;
                }
                let Some((j1, j2, _)) = difference_row(row, 0.0) else { continue };
                let (tail, head) = (j1.min(j2), j1.max(j2));
                if tail >= du || head < du {
                    continue;
                }
                let head = head - du;
                if map.contains_key(&tail) || map.values().any(|&h| h == head) {
                    continue;
                }
                map.insert(tail, head);
            }
        }

        let closure: Vec<Vec<bool>> = (0..n)
            .map(|v| {
                let vert = instance.vertex(v);
                let mut mask = vec![false; vert.set.dim];
                for &coord in &vert.closure_mask {
                    mask[coord] = true;
                }
                mask
            })
            .collect();

        Some(ChainBound { intervals, moves, lin_floor, glue, closure, scale })
    }

    /// Valid lower bound on any trajectory cost along `path`. Infinity means
    /// even the relaxation has an empty glued interface, so the walk is
    /// infeasible outright. For closed walks whose chain coordinate returns
    /// to a closure-equated start, the scalar sweep is a cycle: it must run
    /// from the lowest interval ceiling to the highest interval floor and
    /// back, which often doubles the bound the one-way scan gives.
    pub fn walk_lower_bound(&self, path: &[usize], closed: bool) -> f64 {
        let last = path.len() - 1;
        let mut floor = 0.0;
        for &v in &path[..last] {
            floor += self.lin_floor[v];
        }

        let mut sq = 0.0;
        for (&start, _) in &self.moves[path[0]] {
            let mut sweep = Sweep::start(self.intervals[path[0]][start]);
            let mut coord = start;
            let mut complete = true;
            for i in 0..last {
                let u = path[i];
                let Some(&out) = self.moves[u].get(&coord) else {
                    complete = false;
                    break;
                };
                let leaving = self.intervals[u][out];
                let Some(&entering) =
                    self.glue.get(&(u, path[i + 1])).and_then(|g| g.get(&out))
                else {
                    sweep.advance(leaving);
                    complete = false;
                    break;
                };
                let gate = self.intervals[path[i + 1]][entering];
                let meet = (leaving.0.max(gate.0), leaving.1.min(gate.1));
                if meet.0 > meet.1 {
                    return f64::INFINITY;
                }
                sweep.advance(meet);
                coord = entering;
            }
            let cyclic = closed
                && complete
                && path[0] == path[last]
                && coord == start
                && self.closure[path[0]][start];
            let total = sweep.total(cyclic);
            sq += total * total;
        }
        floor + self.scale * sq.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::optimal_trajectory;
    use crate::model::{CostTerm, GcsInstance, Vertex};
    use crate::oracle::enumerate_realizations;
    use crate::problems::{gen_linear, gen_point};

    fn segment_vertex(id: &str, a_box: [(f64, f64); 2], b_box: [(f64, f64); 2]) -> Vertex {
        Vertex {
            id: id.into(),
            set: ConvexSet::axis_box(&[a_box[0], a_box[1], b_box[0], b_box[1]]),
            cost_terms: vec![CostTerm::norm2(
                vec![vec![-1.0, 0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0, 1.0]],
                vec![0.0, 0.0],
                1.0,
            )],
            closure_mask: vec![0, 1, 2, 3],
        }
    }

    fn glue_edge() -> ConvexSet {
        let mut c = Vec::new();
        for k in 0..2 {
            let mut row = vec![0.0; 8];
            row[2 + k] = 1.0;
            row[4 + k] = -1.0;
            c.push(row);
        }
        ConvexSet { dim: 8, a: Vec::new(), b: Vec::new(), c, d: vec![0.0, 0.0] }
    }

    fn segment_instance(boxes: &[([(f64, f64); 2], [(f64, f64); 2])], arcs: &[(usize, usize)]) -> GcsInstance {
        let vertices = boxes
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| segment_vertex(&format!("v{i}"), a, b))
            .collect();
        let edges = arcs
            .iter()
            .map(|&(u, v)| (format!("v{u}"), format!("v{v}"), glue_edge(), Vec::new()))
            .collect();
        GcsInstance::new("segments".into(), None, vertices, edges).unwrap()
    }

    #[test]
    fn pinned_segments_are_bounded_exactly() {
        // both blocks collapse to points, so the bound has nothing to relax
        let tight = |p: [f64; 2]| [(p[0], p[0]), (p[1], p[1])];
        let inst = segment_instance(
            &[(tight([0.0, 0.0]), tight([1.0, 2.0])), (tight([1.0, 2.0]), tight([4.0, 6.0]))],
            &[(0, 1), (1, 0)],
        );
        let cb = ChainBound::build(&inst).unwrap();
        let lb = cb.walk_lower_bound(&[0, 1], false);
        let want = (1.0f64 + 4.0).sqrt();
        assert!((lb - want).abs() < 1e-12, "bound {lb}, segment length {want}");
    }

    #[test]
    fn empty_glued_interface_reports_infeasible() {
        let inst = segment_instance(
            &[
                ([(0.0, 1.0), (0.0, 1.0)], [(0.0, 1.0), (0.0, 1.0)]),
                ([(3.0, 4.0), (0.0, 1.0)], [(3.0, 4.0), (0.0, 1.0)]),
            ],
            &[(0, 1), (1, 0)],
        );
        let cb = ChainBound::build(&inst).unwrap();
        assert_eq!(cb.walk_lower_bound(&[0, 1], false), f64::INFINITY);
        assert!(optimal_trajectory(&inst, &[0, 1], false, None).is_err());
    }

    #[test]
    fn closed_walks_pay_the_round_trip() {
        // one segment reaches right, the other returns left: a closed sweep
        // must cross the spread twice, and here the bound is exact
        let inst = segment_instance(
            &[
                ([(0.0, 5.0), (0.0, 1.0)], [(4.0, 5.0), (0.0, 1.0)]),
                ([(4.0, 5.0), (0.0, 1.0)], [(0.0, 1.0), (0.0, 1.0)]),
            ],
            &[(0, 1), (1, 0)],
        );
        let cb = ChainBound::build(&inst).unwrap();
        let one_way = cb.walk_lower_bound(&[0, 1, 0], false);
        let round_trip = cb.walk_lower_bound(&[0, 1, 0], true);
        assert!((one_way - 3.0).abs() < 1e-12, "one-way sweep {one_way}");
        assert!((round_trip - 6.0).abs() < 1e-12, "round trip {round_trip}");
        let (_, cost) = optimal_trajectory(&inst, &[0, 1, 0], true, None).unwrap();
        assert!((cost - 6.0).abs() < 1e-6, "exact closed cost {cost}");
    }

    #[test]
    fn point_instances_have_no_difference_rows() {
        let inst = gen_point(5, 3).unwrap();
        assert!(ChainBound::build(&inst).is_none(), "costs live on edges there");
    }

    #[test]
    fn bound_never_exceeds_the_exact_cost_on_generated_instances() {
        let mut checked = 0;
        for seed in [0, 1, 2] {
            let inst = gen_linear(12, seed).unwrap();
            let cb = ChainBound::build(&inst).expect("segment costs match the pattern");
            let n = inst.num_vertices();
            let mut orders = vec![(0..n).collect::<Vec<_>>()];
            let mut reversed: Vec<usize> = (0..n).rev().collect();
            reversed.rotate_left(n - 1);
            orders.push(reversed);
            for order in orders {
                let Ok(walks) = enumerate_realizations(&inst, &order, true, 20_000) else {
                    continue;
                };
                for walk in walks.iter().take(40) {
                    let Ok((_, cost)) = optimal_trajectory(&inst, walk, true, None) else {
                        continue;
                    };
                    // the slack covers conic accuracy: a tight bound can sit
                    // a hair above the solver's slightly undershot optimum
                    let lb = cb.walk_lower_bound(walk, true);
                    assert!(
                        lb <= cost + 1e-7,
                        "seed {seed}: chain bound {lb} above exact cost {cost} for {walk:?}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 40, "too few feasible walks checked: {checked}");
    }
}

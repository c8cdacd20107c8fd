//! Unfolding a visit order into concrete walks.
//!
//! A visit order names distinct vertices in sequence; a walk realizing it
//! travels the graph, hitting those anchors in order, with a detour allowed
//! between consecutive anchors only when the direct edge is missing. Each
//! detour segment is simple (no vertex reused within the segment, anchors
//! included), and when a direct edge exists the leg must use it; this is
//! the realization class the whole solver prices, including the oracle.
//!
//! Realizations stream out of a best-first search in nondecreasing
//! passage-bound order. Search nodes are whole path prefixes, so the
//! frontier is a tree and no duplicate detection is needed; the estimate
//! for the remainder (pairwise bounds to the next anchor plus a suffix sum
//! over later legs) never overestimates, which makes the yield order
//! correct even though the estimate is not consistent along a path.
//!
//! The same search also runs under a different cost model (the edge-cost
//! baseline swaps passage bounds for plain edge lengths); the [`Guide`]
//! trait carries that choice, and only the passage-bound guide promises a
//! sorted stream of true lower bounds.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::bounds::{Ordered, TripletBounds};
use crate::model::GcsInstance;
use crate::stats::{bump, RunStats};

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedPath {
    /// Explicit occurrence sequence; closed walks end at their start.
    pub path: Vec<usize>,
    /// Sum of the guide's charges along the walk (the wrap-around passage
    /// included for closed walks under the passage-bound guide).
    pub lb: f64,
}

/// Cost model steering the realization stream.
pub(crate) trait Guide {
    /// Vertices that may follow `last`, given the occurrence before it.
    fn successors(&self, prev: Option<usize>, last: usize) -> Vec<usize>;
    /// Charge for appending `next` after `(prev, last)`; `None` forbids it.
    fn step(&self, prev: Option<usize>, last: usize, next: usize) -> Option<f64>;
    /// Estimated remaining charge from `from` to `to`.
    fn pair(&self, from: usize, to: usize) -> f64;
    /// Closing charge for a goal `.. a b` wrapping to `b c ..`.
    fn wrap(&self, a: usize, b: usize, c: usize) -> Option<f64>;
}

/// Passage-bound guidance: steps and wrap are triplet bounds, estimates are
/// the pairwise bound table. Yields come out sorted by a true lower bound.
pub(crate) struct TripletGuide<'a> {
    pub instance: &'a GcsInstance,
    pub bounds: &'a TripletBounds,
}

impl Guide for TripletGuide<'_> {
    fn successors(&self, prev: Option<usize>, last: usize) -> Vec<usize> {
        match prev {
            None => self.instance.out_neighbors(last).to_vec(),
            Some(p) => self.bounds.successors(p, last).to_vec(),
        }
    }

    fn step(&self, prev: Option<usize>, last: usize, next: usize) -> Option<f64> {
        match prev {
            None => Some(0.0),
            Some(p) => self.bounds.lb(p, last, next),
        }
    }

    fn pair(&self, from: usize, to: usize) -> f64 {
        self.bounds.pair_lb(from, to)
    }

    fn wrap(&self, a: usize, b: usize, c: usize) -> Option<f64> {
        self.bounds.lb(a, b, c)
    }
}

struct Node {
    f: f64,
    matched: usize,
    g: f64,
    path: Vec<usize>,
    seg_start: usize,
}

impl Node {
    fn key(&self) -> (Reverse<Ordered>, usize, Ordered, Reverse<Vec<usize>>) {
        (Reverse(Ordered(self.f)), self.matched, Ordered(self.g), Reverse(self.path.clone()))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

pub(crate) struct Unfolder<'a, G> {
    instance: &'a GcsInstance,
    guide: G,
    /// Anchors still to hit after the start: the tail of the order, plus
    /// the start again for closed walks.
    targets: Vec<usize>,
    closed: bool,
    cap: f64,
    /// suffix[j] = sum of pairwise estimates over legs j.. of the order.
    suffix: Vec<f64>,
    heap: BinaryHeap<Node>,
    exhausted: bool,
    trivial: Option<UnfoldedPath>,
    stats: Option<&'a RunStats>,
}

const CAP_TOL: f64 = 1e-9;

/// Stream the realizations of `order` in nondecreasing bound order,
/// stopping once every remaining realization is provably above `cap`.
pub fn unfold<'a>(
    instance: &'a GcsInstance,
    bounds: &'a TripletBounds,
    order: &[usize],
    closed: bool,
    cap: f64,
    stats: Option<&'a RunStats>,
) -> impl Iterator<Item = UnfoldedPath> + 'a {
    unfold_guided(instance, TripletGuide { instance, bounds }, order, closed, cap, stats)
}

pub(crate) fn unfold_guided<'a, G: Guide>(
    instance: &'a GcsInstance,
    guide: G,
    order: &[usize],
    closed: bool,
    cap: f64,
    stats: Option<&'a RunStats>,
) -> Unfolder<'a, G> {
    let k = order.len();
    assert!(k >= 1, "empty visit order");
    assert!(!closed || k >= 2, "a closed walk needs at least two vertices");
    {
        let mut seen = vec![false; instance.num_vertices()];
        for &v in order {
            assert!(!seen[v], "visit order repeats a vertex");
            seen[v] = true;
        }
    }
    let mut targets: Vec<usize> = order[1..].to_vec();
    if closed {
        targets.push(order[0]);
    }
    // suffix[j]: pairwise estimates of the legs from target j-1 (or the
    // start) onward, skipping the first pending leg which is estimated live.
    let t = targets.len();
    let mut suffix = vec![0.0; t + 1];
    for j in (0..t).rev() {
        let from = if j == 0 { order[0] } else { targets[j - 1] };
        suffix[j] = suffix[j + 1] + guide.pair(from, targets[j]);
    }
    let mut unfolder = Unfolder {
        instance,
        guide,
        targets,
        closed,
        cap,
        suffix,
        heap: BinaryHeap::new(),
        exhausted: false,
        trivial: None,
        stats,
    };
    if t == 0 {
        unfolder.trivial = Some(UnfoldedPath { path: vec![order[0]], lb: 0.0 });
    } else {
        let root = Node { f: unfolder.suffix[0], matched: 0, g: 0.0, path: vec![order[0]], seg_start: 0 };
        if root.f <= cap + CAP_TOL {
            unfolder.heap.push(root);
        }
    }
    unfolder
}

impl<G: Guide> Unfolder<'_, G> {
    fn push_children(&mut self, node: &Node) {
        let len = node.path.len();
        let last = node.path[len - 1];
        let prev = if len >= 2 { Some(node.path[len - 2]) } else { None };
        let target = self.targets[node.matched];
        let at_anchor = node.seg_start == len - 1;
        let forced = at_anchor && self.instance.has_edge(last, target);
        for next in self.guide.successors(prev, last) {
            if forced && next != target {
                continue;
            }
            if node.path[node.seg_start..].contains(&next) {
                continue;
            }
            let step = match self.guide.step(prev, last, next) {
                Some(c) => c,
                None => continue,
            };
            let mut g = node.g + step;
            let matched = node.matched + usize::from(next == target);
            let done = matched == self.targets.len();
            if done && self.closed {
                // Charge the wrap-around passage now so the goal's priority
                // is its full bound.
                match self.guide.wrap(last, next, node.path[1]) {
                    Some(b) => g += b,
                    None => continue,
                }
            }
            let h = if done {
                0.0
            } else {
                self.guide.pair(next, self.targets[matched]) + self.suffix[matched + 1]
            };
            let f = g + h;
            if !f.is_finite() || f > self.cap + CAP_TOL {
                continue;
            }
            let mut path = node.path.clone();
            path.push(next);
            let seg_start = if next == target { path.len() - 1 } else { node.seg_start };
            self.heap.push(Node { f, matched, g, path, seg_start });
        }
    }
}

impl<G: Guide> Iterator for Unfolder<'_, G> {
    type Item = UnfoldedPath;

    fn next(&mut self) -> Option<UnfoldedPath> {
        if let Some(p) = self.trivial.take() {
            if let Some(s) = self.stats {
                bump(&s.paths_unfolded);
            }
            return Some(p);
        }
        if self.exhausted {
            return None;
        }
        while let Some(node) = self.heap.pop() {
            if node.f > self.cap + CAP_TOL {
                // Everything left on the heap is at least this expensive,
                // and goals under any frontier node cost at least its f.
                break;
            }
            if node.matched == self.targets.len() {
                if let Some(s) = self.stats {
                    bump(&s.paths_unfolded);
                }
                return Some(UnfoldedPath { path: node.path, lb: node.g });
            }
            self.push_children(&node);
        }
        self.exhausted = true;
        self.heap.clear();
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{point_instance_with_edges, triangle};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn ring() -> GcsInstance {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let arcs = [(0, 1), (1, 2), (2, 3), (3, 0), (1, 0), (2, 1), (3, 2), (0, 3)];
        point_instance_with_edges("ring", &pts, &arcs)
    }

    #[test]
    fn triangle_order_has_exactly_one_realization() {
        let inst = triangle();
        let bounds = TripletBounds::build(&inst, None);
        let all: Vec<_> = unfold(&inst, &bounds, &[0, 1, 2], true, f64::INFINITY, None).collect();
        assert_eq!(all.len(), 1, "direct edges exist, so every leg is forced");
        assert_eq!(all[0].path, vec![0, 1, 2, 0]);
        assert!((all[0].lb - (2.0 + SQRT2)).abs() < 1e-6, "{}", all[0].lb);
    }

    #[test]
    fn ring_order_without_direct_legs_detours() {
        let inst = ring();
        let bounds = TripletBounds::build(&inst, None);
        let first = unfold(&inst, &bounds, &[0, 2, 1, 3], true, f64::INFINITY, None)
            .next()
            .expect("realizable order");
        assert_eq!(first.path.first(), first.path.last());
        assert!((first.lb - 6.0).abs() < 1e-6, "cheapest walk takes six unit edges: {}", first.lb);
        assert_eq!(first.path, vec![0, 1, 2, 1, 0, 3, 0], "lexicographic tie-break");
    }

    #[test]
    fn stream_is_nondecreasing_and_matches_path_bound() {
        let inst = ring();
        let bounds = TripletBounds::build(&inst, None);
        let mut prev = f64::NEG_INFINITY;
        let mut count = 0;
        for p in unfold(&inst, &bounds, &[0, 2, 1, 3], true, 10.0, None) {
            assert!(p.lb >= prev - 1e-12, "stream must be sorted");
            let recomputed = bounds.path_lb(&p.path, true);
            assert!((p.lb - recomputed).abs() < 1e-9, "{} vs {recomputed}", p.lb);
            prev = p.lb;
            count += 1;
        }
        assert!(count > 1, "several walks fit under the cap");
    }

    #[test]
    fn cap_of_zero_yields_nothing_on_positive_costs() {
        let inst = ring();
        let bounds = TripletBounds::build(&inst, None);
        let mut stream = unfold(&inst, &bounds, &[0, 2, 1, 3], true, 0.0, None);
        assert!(stream.next().is_none());
    }

    #[test]
    fn open_two_vertex_order_uses_the_direct_edge() {
        let inst = triangle();
        let bounds = TripletBounds::build(&inst, None);
        let all: Vec<_> = unfold(&inst, &bounds, &[0, 1], false, f64::INFINITY, None).collect();
        assert_eq!(all[0].path, vec![0, 1]);
        assert_eq!(all[0].lb, 0.0, "a two-occurrence walk has no interior passage");
    }

    #[test]
    fn single_vertex_open_order_is_trivial() {
        let inst = triangle();
        let bounds = TripletBounds::build(&inst, None);
        let all: Vec<_> = unfold(&inst, &bounds, &[2], false, f64::INFINITY, None).collect();
        assert_eq!(all, vec![UnfoldedPath { path: vec![2], lb: 0.0 }]);
    }

    #[test]
    fn two_cycle_closed_order_charges_both_directions() {
        let inst = triangle();
        let bounds = TripletBounds::build(&inst, None);
        let all: Vec<_> = unfold(&inst, &bounds, &[0, 1], true, f64::INFINITY, None).collect();
        assert_eq!(all[0].path, vec![0, 1, 0]);
        assert!((all[0].lb - 2.0).abs() < 1e-6, "out and back along a unit edge: {}", all[0].lb);
    }

    #[test]
    fn forced_direct_leg_excludes_detours() {
        // 0-1 exists, so the leg 0->1 may not detour through 2 even though
        // a detour path exists in the graph.
        let inst = triangle();
        let bounds = TripletBounds::build(&inst, None);
        for p in unfold(&inst, &bounds, &[0, 1], false, f64::INFINITY, None) {
            assert_eq!(p.path, vec![0, 1]);
        }
    }
}

//! Per-passage lower bounds.
//!
//! For every pair of consecutive edges (u,v),(v,w) we solve one small conic
//! program for the cheapest way to pass through v on that passage: half the
//! entering edge cost, the vertex cost, half the leaving edge cost. Summing
//! these over the interior of a walk never exceeds the walk's true
//! trajectory cost, because each edge is split between its two incident
//! passages and every vertex occurrence except the first is the center of
//! exactly one passage. The table of passage bounds drives everything
//! downstream: heuristics for unfolding, edge-pair costs in the visit-order
//! program, and the admissible estimate between non-adjacent vertices.

use std::collections::{BinaryHeap, HashMap};

use crate::conic;
use crate::model::GcsInstance;
use crate::stats::RunStats;

#[derive(Debug)]
pub struct TripletBounds {
    n: usize,
    lb: HashMap<(usize, usize, usize), f64>,
    succ: HashMap<(usize, usize), Vec<usize>>,
    pair_lb: Vec<Vec<f64>>,
}

impl TripletBounds {
    /// Solve one conic program per feasible passage and precompute the
    /// pairwise bounds. Passages whose intersection is empty are simply
    /// absent from the table; a walk crossing one has an infinite bound.
    pub fn build(instance: &GcsInstance, stats: Option<&RunStats>) -> Self {
        let n = instance.num_vertices();
        let mut lb = HashMap::new();
        let mut succ: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for u in 0..n {
            for &v in instance.out_neighbors(u) {
                for &w in instance.out_neighbors(v) {
                    if let Some(bound) = conic::triplet_lower_bound(instance, u, v, w, stats) {
                        lb.insert((u, v, w), bound);
                        succ.entry((u, v)).or_default().push(w);
                    }
                }
            }
        }
        for list in succ.values_mut() {
            list.sort_unstable();
        }
        let mut bounds = Self { n, lb, succ, pair_lb: Vec::new() };
        bounds.pair_lb = (0..n).map(|s| (0..n).map(|t| bounds.dijkstra(instance, s, t)).collect()).collect();
        bounds
    }

    pub fn lb(&self, u: usize, v: usize, w: usize) -> Option<f64> {
        self.lb.get(&(u, v, w)).copied()
    }

    /// Vertices w such that the passage (u,v,w) is feasible, sorted.
    pub fn successors(&self, u: usize, v: usize) -> &[usize] {
        self.succ.get(&(u, v)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Minimum passage-bound sum over simple paths from s to t; zero when
    /// the edge (s,t) exists (a two-vertex path has no interior), infinite
    /// when no simple path survives the feasible-passage filter.
    pub fn pair_lb(&self, s: usize, t: usize) -> f64 {
        self.pair_lb[s][t]
    }

    fn dijkstra(&self, instance: &GcsInstance, s: usize, t: usize) -> f64 {
        if s == t || instance.has_edge(s, t) {
            return 0.0;
        }
        debug_assert!(self.n <= 64, "visited sets are stored as u64 masks");
        // State: (previous vertex, current vertex, visited mask). Extending
        // a state charges the passage bound centered on the current vertex.
        let mut best: HashMap<(usize, usize, u64), f64> = HashMap::new();
        let mut heap: BinaryHeap<(std::cmp::Reverse<Ordered>, usize, usize, u64)> =
            BinaryHeap::new();
        for &x in instance.out_neighbors(s) {
            let mask = (1u64 << s) | (1u64 << x);
            heap.push((std::cmp::Reverse(Ordered(0.0)), s, x, mask));
            best.insert((s, x, mask), 0.0);
        }
        while let Some((std::cmp::Reverse(Ordered(c)), prev, cur, mask)) = heap.pop() {
            if cur == t {
                return c;
            }
            if best.get(&(prev, cur, mask)).is_some_and(|&b| b < c) {
                continue;
            }
            for &nxt in self.successors(prev, cur) {
                if mask & (1u64 << nxt) != 0 {
                    continue;
                }
                let cost = c + self.lb[&(prev, cur, nxt)];
                let key = (cur, nxt, mask | (1u64 << nxt));
                if best.get(&key).is_none_or(|&b| cost < b) {
                    best.insert(key, cost);
                    heap.push((std::cmp::Reverse(Ordered(cost)), cur, nxt, key.2));
                }
            }
        }
        f64::INFINITY
    }

    /// Sum of passage bounds along a walk given as explicit occurrences.
    /// For closed walks (last occurrence repeats the first) the closing
    /// occurrence is the center of a wrap-around passage, so every edge is
    /// charged half twice and every occurrence but the first once. Infinite
    /// if any passage is infeasible.
    pub fn path_lb(&self, path: &[usize], closed: bool) -> f64 {
        let mut total = 0.0;
        for win in path.windows(3) {
            match self.lb(win[0], win[1], win[2]) {
                Some(b) => total += b,
                None => return f64::INFINITY,
            }
        }
        if closed {
            assert_eq!(path[0], path[path.len() - 1], "closed walk must end at its start");
            assert!(path.len() >= 3, "closed walk needs at least one edge pair");
            match self.lb(path[path.len() - 2], path[0], path[1]) {
                Some(b) => total += b,
                None => return f64::INFINITY,
            }
        }
        total
    }

    /// Smallest bound among passages centered on v.
    pub fn min_mid(&self, v: usize) -> Option<f64> {
        self.lb
            .iter()
            .filter(|((_, m, _), _)| *m == v)
            .map(|(_, &b)| b)
            .min_by(f64::total_cmp)
    }

    /// Smallest bound among passages entering through the edge (u,v).
    pub fn min_leaving(&self, u: usize, v: usize) -> Option<f64> {
        self.succ
            .get(&(u, v))?
            .iter()
            .map(|&w| self.lb[&(u, v, w)])
            .min_by(f64::total_cmp)
    }

    /// Smallest bound among passages leaving through the edge (v,w).
    pub fn min_entering(&self, v: usize, w: usize) -> Option<f64> {
        self.lb
            .iter()
            .filter(|((_, m, l), _)| *m == v && *l == w)
            .map(|(_, &b)| b)
            .min_by(f64::total_cmp)
    }

    pub fn len(&self) -> usize {
        self.lb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lb.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.lb.iter().map(|(&k, &v)| (k, v))
    }

    /// Debug artifact: one row per feasible passage, sorted by index.
    pub fn to_csv(&self, instance: &GcsInstance) -> String {
        let mut rows: Vec<(usize, usize, usize)> = self.lb.keys().copied().collect();
        rows.sort_unstable();
        let mut out = String::from("u,v,w,lb\n");
        for (u, v, w) in rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                instance.vertex(u).id,
                instance.vertex(v).id,
                instance.vertex(w).id,
                self.lb[&(u, v, w)]
            ));
        }
        out
    }
}

/// f64 keyed by total order, for use in the binary heap.
#[derive(PartialEq, Clone, Copy, Debug)]
pub(crate) struct Ordered(pub f64);
impl Eq for Ordered {}
impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

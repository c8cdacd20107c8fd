//! Seeded instance families on a 5x5 grid.
//!
//! Three families share the grid: points (singleton sets, complete graph),
//! segments (a start and an end point inside a rectangle, edges gluing
//! consecutive segments end to start), and curve pieces (five spatial
//! control points in a rectangle plus five monotone time control points,
//! edges gluing junctions, duration as cost). Everything is a deterministic
//! function of the family parameters and the seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ConvexSet, CostTerm, GcsInstance, Layout, Vertex};

pub const GRID_SIDE: usize = 5;
/// Minimum gap between consecutive time control points.
pub const DELTA_MIN: f64 = 0.01;
/// Upper bound on a piece's duration, keeping time coordinates compact.
pub const MAX_DURATION: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("{0} vertices exceed the {1} grid intersections")]
    TooManyVertices(usize, usize),
    #[error("need at least {1} vertices, got {0}")]
    TooFewVertices(usize, usize),
    #[error("edge count must be even, got {0} (overlaps are symmetric)")]
    OddEdgeCount(usize),
    #[error("edge count must be at least 6, got {0}")]
    TooFewEdges(usize),
    #[error("no layout with {0} directed edges found for seed {1} after {2} attempts")]
    RetryBudget(usize, u64, usize),
}

fn intersections() -> Vec<[f64; 2]> {
    let mut cells = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            cells.push([i as f64, j as f64]);
        }
    }
    cells
}

/// Singleton sets at distinct jittered intersections, complete digraph,
/// Euclidean edge costs.
pub fn gen_point(n: usize, seed: u64) -> Result<GcsInstance, GenError> {
    if n < 3 {
        return Err(GenError::TooFewVertices(n, 3));
    }
    let cells = intersections();
    if n > cells.len() {
        return Err(GenError::TooManyVertices(n, cells.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.shuffle(&mut rng);
    let points: Vec<[f64; 2]> = order[..n]
        .iter()
        .map(|&c| {
            let jx: f64 = rng.gen_range(-0.25..0.25);
            let jy: f64 = rng.gen_range(-0.25..0.25);
            [cells[c][0] + jx, cells[c][1] + jy]
        })
        .collect();
    let vertices: Vec<Vertex> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Vertex {
            id: format!("v{i}"),
            set: ConvexSet::singleton(p),
            cost_terms: Vec::new(),
            closure_mask: vec![0, 1],
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push((
                    format!("v{i}"),
                    format!("v{j}"),
                    ConvexSet::free(4),
                    vec![CostTerm::norm2(
                        vec![vec![-1.0, 0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0, 1.0]],
                        vec![0.0, 0.0],
                        1.0,
                    )],
                ));
            }
        }
    }
    Ok(GcsInstance::new(format!("point-n{n}-s{seed}"), Some(Layout::Point), vertices, edges)
        .expect("generated instance is coherent"))
}

/// An axis-aligned rectangle centered on a grid intersection.
#[derive(Debug, Clone, Copy)]
struct Region {
    center: [f64; 2],
    half: [f64; 2],
}

impl Region {
    fn overlaps(&self, other: &Region) -> bool {
        (0..2).all(|k| {
            (self.center[k] - other.center[k]).abs() < self.half[k] + other.half[k]
        })
    }

    /// Inequality rows pinning coordinates (x0+0, x0+1) inside the box.
    fn rows(&self, dim: usize, x0: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..2 {
            let mut row = vec![0.0; dim];
            row[x0 + k] = 1.0;
            a.push(row.clone());
            b.push(self.center[k] + self.half[k]);
            row[x0 + k] = -1.0;
            a.push(row);
            b.push(-(self.center[k] - self.half[k]));
        }
        (a, b)
    }
}

/// Add rectangles at random intersections until their symmetric overlap
/// graph has exactly `m` directed edges and is connected; overshooting or
/// running out of intersections starts a fresh attempt.
fn sample_regions(m: usize, rng: &mut ChaCha8Rng) -> Option<(Vec<Region>, Vec<(usize, usize)>)> {
    let cells = intersections();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.shuffle(rng);
    let mut regions: Vec<Region> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new(); // undirected overlaps
    for &c in &order {
        let region = Region {
            center: cells[c],
            half: [rng.gen_range(0.6..1.4), rng.gen_range(0.6..1.4)],
        };
        for (i, r) in regions.iter().enumerate() {
            if r.overlaps(&region) {
                pairs.push((i, regions.len()));
            }
        }
        regions.push(region);
        let directed = 2 * pairs.len();
        if directed == m {
            if connected(regions.len(), &pairs) {
                let mut arcs = Vec::with_capacity(m);
                for &(i, j) in &pairs {
                    arcs.push((i, j));
                    arcs.push((j, i));
                }
                return Some((regions, arcs));
            }
            return None; // adding more regions can only overshoot
        }
        if directed > m {
            return None;
        }
    }
    None
}

fn connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

const RETRY_BUDGET: usize = 1000;

fn layout_for_edges(m: usize, seed: u64) -> Result<(Vec<Region>, Vec<(usize, usize)>), GenError> {
    if m % 2 != 0 {
        return Err(GenError::OddEdgeCount(m));
    }
    if m < 6 {
        return Err(GenError::TooFewEdges(m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RETRY_BUDGET {
        if let Some(found) = sample_regions(m, &mut rng) {
            if found.0.len() >= 3 {
                return Ok(found);
            }
        }
    }
    Err(GenError::RetryBudget(m, seed, RETRY_BUDGET))
}

/// Segment instances: a vertex holds a start point and an end point inside
/// its rectangle, pays their distance, and an edge glues its end to the
/// successor's start.
pub fn gen_linear(m: usize, seed: u64) -> Result<GcsInstance, GenError> {
    let (regions, arcs) = layout_for_edges(m, seed)?;
    let vertices: Vec<Vertex> = regions
        .iter()
        .enumerate()
        .map(|(i, region)| {
            let (mut a, mut b) = region.rows(4, 0);
            let (a2, b2) = region.rows(4, 2);
            a.extend(a2);
            b.extend(b2);
            Vertex {
                id: format!("v{i}"),
                set: ConvexSet { dim: 4, a, b, c: Vec::new(), d: Vec::new() },
                cost_terms: vec![CostTerm::norm2(
                    vec![vec![-1.0, 0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0, 1.0]],
                    vec![0.0, 0.0],
                    1.0,
                )],
                closure_mask: vec![0, 1, 2, 3],
            }
        })
        .collect();
    let edges = arcs
        .iter()
        .map(|&(u, v)| {
            // end of u equals start of v: coords (2,3) of u, (0,1) of v
            let mut c = Vec::new();
            for k in 0..2 {
                let mut row = vec![0.0; 8];
                row[2 + k] = 1.0;
                row[4 + k] = -1.0;
                c.push(row);
            }
            (
                format!("v{u}"),
                format!("v{v}"),
                ConvexSet { dim: 8, a: Vec::new(), b: Vec::new(), c, d: vec![0.0, 0.0] },
                Vec::new(),
            )
        })
        .collect();
    Ok(GcsInstance::new(format!("linear-m{m}-s{seed}"), Some(Layout::Linear), vertices, edges)
        .expect("generated instance is coherent"))
}

/// Curve-piece instances: five spatial control points inside the region
/// (coordinates 0..10 as x1,y1,..,x5,y5) and five time control points
/// (coordinates 10..15) starting at zero with monotone gaps; the cost is
/// the piece duration. Edges glue the last spatial control point to the
/// successor's first; with `continuity`, the junction's control-polygon
/// direction carries over as well.
pub fn gen_bezier(m: usize, seed: u64, continuity: bool) -> Result<GcsInstance, GenError> {
    let (regions, arcs) = layout_for_edges(m, seed)?;
    let dim = 15;
    let vertices: Vec<Vertex> = regions
        .iter()
        .enumerate()
        .map(|(i, region)| {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for p in 0..5 {
                let (ra, rb) = region.rows(dim, 2 * p);
                a.extend(ra);
                b.extend(rb);
            }
            for gap in 0..4 {
                // t[gap] - t[gap+1] <= -delta
                let mut row = vec![0.0; dim];
                row[10 + gap] = 1.0;
                row[10 + gap + 1] = -1.0;
                a.push(row);
                b.push(-DELTA_MIN);
            }
            let mut cap = vec![0.0; dim];
            cap[14] = 1.0;
            a.push(cap);
            b.push(MAX_DURATION);
            let mut start = vec![0.0; dim];
            start[10] = 1.0;
            let mut duration = vec![0.0; dim];
            duration[14] = 1.0;
            Vertex {
                id: format!("v{i}"),
                set: ConvexSet { dim, a, b, c: vec![start], d: vec![0.0] },
                cost_terms: vec![CostTerm::linear(duration, 0.0, 1.0)],
                closure_mask: (0..10).collect(),
            }
        })
        .collect();
    let edges = arcs
        .iter()
        .map(|&(u, v)| {
            let pair = 2 * dim;
            let mut c = Vec::new();
            let mut d = Vec::new();
            for k in 0..2 {
                // last control point of u = first control point of v
                let mut row = vec![0.0; pair];
                row[8 + k] = 1.0;
                row[dim + k] = -1.0;
                c.push(row);
                d.push(0.0);
            }
            if continuity {
                for k in 0..2 {
                    // (P5 - P4) of u = (Q2 - Q1) of v, the shared factor
                    // of the endpoint derivative cancelling
                    let mut row = vec![0.0; pair];
                    row[8 + k] = 1.0;
                    row[6 + k] = -1.0;
                    row[dim + 2 + k] = -1.0;
                    row[dim + k] = 1.0;
                    c.push(row);
                    d.push(0.0);
                }
            }
            (
                format!("v{u}"),
                format!("v{v}"),
                ConvexSet { dim: pair, a: Vec::new(), b: Vec::new(), c, d },
                Vec::new(),
            )
        })
        .collect();
    let tag = if continuity { "c1" } else { "c0" };
    Ok(GcsInstance::new(
        format!("bezier-m{m}-s{seed}-{tag}"),
        Some(Layout::Bezier),
        vertices,
        edges,
    )
    .expect("generated instance is coherent"))
}

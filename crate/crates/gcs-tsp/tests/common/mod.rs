//! Builders and reference computations shared by the integration suites.

#![allow(dead_code)]

use gcs_tsp::bounds::TripletBounds;
use gcs_tsp::model::{ConvexSet, CostTerm, GcsInstance, Layout, Vertex};
use gcs_tsp::ordering::OrderCosts;

/// Complete digraph over singleton 2-d points with Euclidean edge costs.
pub fn point_instance(name: &str, points: &[[f64; 2]]) -> GcsInstance {
    let arcs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..points.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    point_instance_with_edges(name, points, &arcs)
}

/// Singleton-point instance with an explicit directed edge list.
pub fn point_instance_with_edges(
    name: &str,
    points: &[[f64; 2]],
    arcs: &[(usize, usize)],
) -> GcsInstance {
    let vertices = points
        .iter()
        .enumerate()
        .map(|(i, p)| Vertex {
            id: format!("v{i}"),
            set: ConvexSet::singleton(p),
            cost_terms: Vec::new(),
            closure_mask: vec![0, 1],
        })
        .collect();
    let dist = CostTerm::norm2(
        vec![vec![-1.0, 0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0, 1.0]],
        vec![0.0, 0.0],
        1.0,
    );
    let edges = arcs
        .iter()
        .map(|&(i, j)| (format!("v{i}"), format!("v{j}"), ConvexSet::free(4), vec![dist.clone()]))
        .collect();
    GcsInstance::new(name.to_string(), Some(Layout::Point), vertices, edges).unwrap()
}

/// Complete digraph over axis-aligned 2-d boxes, Euclidean cost between the
/// chosen points of consecutive boxes.
pub fn box_instance(name: &str, centers: &[[f64; 2]], half: f64) -> GcsInstance {
    let vertices = centers
        .iter()
        .enumerate()
        .map(|(i, c)| Vertex {
            id: format!("b{i}"),
            set: ConvexSet::axis_box(&[(c[0] - half, c[0] + half), (c[1] - half, c[1] + half)]),
            cost_terms: Vec::new(),
            closure_mask: vec![0, 1],
        })
        .collect();
    let dist = CostTerm::norm2(
        vec![vec![-1.0, 0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0, 1.0]],
        vec![0.0, 0.0],
        1.0,
    );
    let edges = (0..centers.len())
        .flat_map(|i| {
            let dist = dist.clone();
            (0..centers.len()).filter(move |&j| j != i).map(move |j| {
                (format!("b{i}"), format!("b{j}"), ConvexSet::free(4), vec![dist.clone()])
            })
        })
        .collect();
    GcsInstance::new(name.to_string(), None, vertices, edges).unwrap()
}

/// Rebuild an instance with each vertex set passed through `relax`.
/// Edge sets, costs and closure masks carry over unchanged.
pub fn map_vertex_sets(
    instance: &GcsInstance,
    relax: impl Fn(usize, &ConvexSet) -> ConvexSet,
) -> GcsInstance {
    let vertices = instance
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| Vertex {
            id: v.id.clone(),
            set: relax(i, &v.set),
            cost_terms: v.cost_terms.clone(),
            closure_mask: v.closure_mask.clone(),
        })
        .collect();
    let edges = instance
        .edges()
        .iter()
        .map(|e| {
            (
                instance.vertex(e.from).id.clone(),
                instance.vertex(e.to).id.clone(),
                e.set.clone(),
                e.cost_terms.clone(),
            )
        })
        .collect();
    GcsInstance::new(instance.name.clone(), instance.layout, vertices, edges).unwrap()
}

/// All simple paths from `s` to `t` (endpoints included). For `s == t` the
/// single trivial path `[s]`.
pub fn simple_paths(instance: &GcsInstance, s: usize, t: usize) -> Vec<Vec<usize>> {
    let mut found = Vec::new();
    let mut path = vec![s];
    let mut on_path = vec![false; instance.num_vertices()];
    on_path[s] = true;
    dfs_paths(instance, t, &mut path, &mut on_path, &mut found);
    found
}

fn dfs_paths(
    instance: &GcsInstance,
    t: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut Vec<Vec<usize>>,
) {
    let last = *path.last().unwrap();
    if last == t {
        found.push(path.clone());
        return;
    }
    for &next in instance.out_neighbors(last) {
        if on_path[next] {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        dfs_paths(instance, t, path, on_path, found);
        path.pop();
        on_path[next] = false;
    }
}

/// Every visit order over all vertices starting at 0 (rotations removed).
pub fn hamiltonian_orders(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (1..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let mut order = vec![0];
        order.extend_from_slice(p);
        out.push(order);
    });
    out
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Abstract objective of a closed visit order: the sum of its wrap-around
/// triplet prices. `None` when any passage price is missing.
pub fn order_objective(costs: &OrderCosts, order: &[usize]) -> Option<f64> {
    let k = order.len();
    let mut total = 0.0;
    for i in 0..k {
        let u = order[(i + k - 1) % k];
        let v = order[i];
        let w = order[(i + 1) % k];
        total += costs.price((u, v, w))?;
    }
    Some(total)
}

/// Sum of passage bounds over windows of three, without any wrap charge.
pub fn interior_bound_sum(bounds: &TripletBounds, path: &[usize]) -> Option<f64> {
    let mut total = 0.0;
    for w in path.windows(3) {
        total += bounds.lb(w[0], w[1], w[2])?;
    }
    Some(total)
}

/// Check a walk's trajectory against the instance's sets: every occurrence
/// in its vertex set, every step in its edge set, and for closed walks the
/// closure coordinates equal between the first and last occurrence.
pub fn max_constraint_residual(
    instance: &GcsInstance,
    path: &[usize],
    trajectory: &[Vec<f64>],
    closed: bool,
) -> f64 {
    assert_eq!(path.len(), trajectory.len());
    let mut worst: f64 = 0.0;
    let mut row_residual = |set: &ConvexSet, x: &[f64]| {
        for (row, &rhs) in set.a.iter().zip(&set.b) {
            let lhs: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max(lhs - rhs);
        }
        for (row, &rhs) in set.c.iter().zip(&set.d) {
            let lhs: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max((lhs - rhs).abs());
        }
    };
    for (&v, x) in path.iter().zip(trajectory) {
        row_residual(&instance.vertex(v).set, x);
    }
    for i in 0..path.len() - 1 {
        let edge = instance.edge(path[i], path[i + 1]).expect("walk steps along edges");
        let mut z = trajectory[i].clone();
        z.extend_from_slice(&trajectory[i + 1]);
        row_residual(&edge.set, &z);
    }
    if closed {
        let first = &trajectory[0];
        let last = trajectory.last().unwrap();
        for &coord in &instance.vertex(path[0]).closure_mask {
            worst = worst.max((first[coord] - last[coord]).abs());
        }
    }
    worst
}

/// Recompute, from the bound tables alone, the best-first estimate the
/// unfolder assigns to a prefix of a walk realizing `order`: passage charges
/// accrued so far, plus pairwise estimates for the legs still ahead. For the
/// full walk this equals its yielded bound (wrap charge included when
/// closed); for proper prefixes it must never exceed that bound.
pub fn prefix_estimate(
    bounds: &TripletBounds,
    order: &[usize],
    closed: bool,
    prefix: &[usize],
) -> f64 {
    let mut targets: Vec<usize> = order[1..].to_vec();
    if closed {
        targets.push(order[0]);
    }
    let mut matched = 0usize;
    for &v in &prefix[1..] {
        if matched < targets.len() && v == targets[matched] {
            matched += 1;
        }
    }
    let mut g = 0.0;
    for w in prefix.windows(3) {
        match bounds.lb(w[0], w[1], w[2]) {
            Some(b) => g += b,
            None => return f64::INFINITY,
        }
    }
    if matched == targets.len() {
        if closed && prefix.len() >= 2 {
            match bounds.lb(prefix[prefix.len() - 2], prefix[prefix.len() - 1], prefix[1]) {
                Some(b) => g += b,
                None => return f64::INFINITY,
            }
        }
        return g;
    }
    let mut h = bounds.pair_lb(*prefix.last().unwrap(), targets[matched]);
    for j in matched + 1..targets.len() {
        h += bounds.pair_lb(targets[j - 1], targets[j]);
    }
    g + h
}

/// The interval a single coordinate is confined to by the set's
/// single-coefficient inequality rows.
pub fn coord_interval(set: &ConvexSet, coord: usize) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (row, &rhs) in set.a.iter().zip(&set.b) {
        let nonzero: Vec<usize> =
            (0..row.len()).filter(|&i| row[i] != 0.0).collect();
        if nonzero == [coord] {
            if row[coord] > 0.0 {
                hi = hi.min(rhs / row[coord]);
            } else {
                lo = lo.max(rhs / row[coord]);
            }
        }
    }
    (lo, hi)
}

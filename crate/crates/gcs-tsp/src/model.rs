//! Core problem data: convex sets, cost terms, and the directed graph of
//! convex sets an instance is built from.
//!
//! A tour of the graph visits every vertex at least once and returns to its
//! starting point; its trajectory picks one point from each visited vertex
//! set, subject to the edge sets of consecutive visits, and pays the sum of
//! the edge and vertex cost terms along the way. This module owns the data
//! and the exact cost evaluation; solving lives elsewhere.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, mat_vec, norm2};

/// Polyhedron `{ x : A x <= b, C x = d }`. Either constraint block may be
/// empty; an all-empty set is the whole space (only valid for edge sets,
/// since vertex sets must be bounded).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    pub dim: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
}

impl ConvexSet {
    /// Unconstrained set of the given dimension.
    pub fn free(dim: usize) -> Self {
        ConvexSet { dim, a: Vec::new(), b: Vec::new(), c: Vec::new(), d: Vec::new() }
    }

    /// The single point `{p}`, encoded as equalities `I x = p`.
    pub fn singleton(p: &[f64]) -> Self {
        let dim = p.len();
        let c = (0..dim)
            .map(|i| {
                let mut row = vec![0.0; dim];
                row[i] = 1.0;
                row
            })
            .collect();
        ConvexSet { dim, a: Vec::new(), b: Vec::new(), c, d: p.to_vec() }
    }

    /// Axis-aligned box given per-coordinate `(lo, hi)` bounds.
    pub fn axis_box(bounds: &[(f64, f64)]) -> Self {
        let dim = bounds.len();
        let mut a = Vec::with_capacity(2 * dim);
        let mut b = Vec::with_capacity(2 * dim);
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let mut hi_row = vec![0.0; dim];
            hi_row[i] = 1.0;
            a.push(hi_row);
            b.push(hi);
            let mut lo_row = vec![0.0; dim];
            lo_row[i] = -1.0;
            a.push(lo_row);
            b.push(-lo);
        }
        ConvexSet { dim, a, b, c: Vec::new(), d: Vec::new() }
    }

    pub fn check_dims(&self) -> Result<(), ModelError> {
        if self.a.len() != self.b.len() || self.c.len() != self.d.len() {
            return Err(ModelError::DimMismatch("constraint row counts differ from rhs lengths".into()));
        }
        for row in self.a.iter().chain(self.c.iter()) {
            if row.len() != self.dim {
                return Err(ModelError::DimMismatch(format!(
                    "constraint row has {} columns, set dimension is {}",
                    row.len(),
                    self.dim
                )));
            }
        }
        Ok(())
    }

    /// Membership within an absolute tolerance on each constraint row.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        self.a.iter().zip(&self.b).all(|(row, &rhs)| dot(row, x) <= rhs + tol)
            && self.c.iter().zip(&self.d).all(|(row, &rhs)| (dot(row, x) - rhs).abs() <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Norm2,
    Linear,
}

/// One additive cost contribution `weight * ||M z + m||` or
/// `weight * (M z + m)`, where `z` is the owner's variable vector (a vertex
/// point, or the concatenation `(x_u, x_v)` for an edge).
#[derive(Debug, Clone, PartialEq)]
pub struct CostTerm {
    pub kind: CostKind,
    pub m_matrix: Vec<Vec<f64>>,
    pub m_offset: Vec<f64>,
    pub weight: f64,
}

impl CostTerm {
    pub fn norm2(m_matrix: Vec<Vec<f64>>, m_offset: Vec<f64>, weight: f64) -> Self {
        CostTerm { kind: CostKind::Norm2, m_matrix, m_offset, weight }
    }

    pub fn linear(row: Vec<f64>, offset: f64, weight: f64) -> Self {
        CostTerm { kind: CostKind::Linear, m_matrix: vec![row], m_offset: vec![offset], weight }
    }

    pub fn check_dims(&self, owner_dim: usize) -> Result<(), ModelError> {
        if self.m_matrix.is_empty() || self.m_matrix.len() != self.m_offset.len() {
            return Err(ModelError::DimMismatch("cost term matrix/offset row counts differ".into()));
        }
        if self.kind == CostKind::Linear && self.m_matrix.len() != 1 {
            return Err(ModelError::DimMismatch("linear cost term must have a single row".into()));
        }
        for row in &self.m_matrix {
            if row.len() != owner_dim {
                return Err(ModelError::DimMismatch(format!(
                    "cost term row has {} columns, owner dimension is {}",
                    row.len(),
                    owner_dim
                )));
            }
        }
        if !(self.weight >= 0.0) {
            return Err(ModelError::DimMismatch("cost term weight must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let mut e = mat_vec(&self.m_matrix, z);
        for (ei, oi) in e.iter_mut().zip(&self.m_offset) {
            *ei += oi;
        }
        match self.kind {
            CostKind::Norm2 => self.weight * norm2(&e),
            CostKind::Linear => self.weight * e[0],
        }
    }
}

/// Coordinate layout hint emitted by the instance generators; used by the
/// plotter and by the Chebyshev-distance baseline to find the spatial block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Point,
    Linear,
    Bezier,
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: String,
    pub set: ConvexSet,
    pub cost_terms: Vec<CostTerm>,
    /// Coordinates equated between the first and the closing occurrence of a
    /// closed trajectory.
    pub closure_mask: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Set over the concatenated coordinates `(x_from, x_to)`.
    pub set: ConvexSet,
    pub cost_terms: Vec<CostTerm>,
}

#[derive(Debug, Clone)]
pub struct GcsInstance {
    pub name: String,
    pub layout: Option<Layout>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    out_neighbors: Vec<Vec<usize>>,
    in_neighbors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("unknown endpoint {0:?}")]
    UnknownEndpoint(String),
    #[error("self-loop on vertex {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge ({0:?}, {1:?})")]
    DuplicateEdge(String, String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("path step ({0}, {1}) is not an edge")]
    MissingEdge(String, String),
}

impl GcsInstance {
    pub fn new(
        name: String,
        layout: Option<Layout>,
        vertices: Vec<Vertex>,
        edges: Vec<(String, String, ConvexSet, Vec<CostTerm>)>,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            v.set.check_dims()?;
            for t in &v.cost_terms {
                t.check_dims(v.set.dim)?;
            }
            for &coord in &v.closure_mask {
                if coord >= v.set.dim {
                    return Err(ModelError::DimMismatch(format!(
                        "closure mask coordinate {} out of range for vertex {:?} (dim {})",
                        coord, v.id, v.set.dim
                    )));
                }
            }
            if index.insert(v.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateVertex(v.id.clone()));
            }
        }
        let mut built_edges = Vec::with_capacity(edges.len());
        let mut edge_index = HashMap::new();
        let mut out_neighbors = vec![Vec::new(); vertices.len()];
        let mut in_neighbors = vec![Vec::new(); vertices.len()];
        for (from_id, to_id, set, cost_terms) in edges {
            let &from = index.get(&from_id).ok_or_else(|| ModelError::UnknownEndpoint(from_id.clone()))?;
            let &to = index.get(&to_id).ok_or_else(|| ModelError::UnknownEndpoint(to_id.clone()))?;
            if from == to {
                return Err(ModelError::SelfLoop(from_id));
            }
            set.check_dims()?;
            let pair_dim = vertices[from].set.dim + vertices[to].set.dim;
            if set.dim != pair_dim {
                return Err(ModelError::DimMismatch(format!(
                    "edge ({from_id:?}, {to_id:?}) set has dim {}, expected {}",
                    set.dim, pair_dim
                )));
            }
            for t in &cost_terms {
                t.check_dims(pair_dim)?;
            }
            if edge_index.insert((from, to), built_edges.len()).is_some() {
                return Err(ModelError::DuplicateEdge(from_id, to_id));
            }
            out_neighbors[from].push(to);
            in_neighbors[to].push(from);
            built_edges.push(Edge { from, to, set, cost_terms });
        }
        Ok(GcsInstance {
            name,
            layout,
            vertices,
            edges: built_edges,
            edge_index,
            out_neighbors,
            in_neighbors,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.edge_index.get(&(from, to)).map(|&i| &self.edges[i])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edge_index.contains_key(&(from, to))
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_neighbors[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_neighbors[v]
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    /// True when every vertex reaches and is reached by every other.
    pub fn strongly_connected(&self) -> bool {
        let n = self.vertices.len();
        if n <= 1 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                let next = if forward { &self.out_neighbors[v] } else { &self.in_neighbors[v] };
                for &w in next {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// Exact cost of a trajectory along `path`: all edge terms, plus the vertex
/// terms of every occurrence except the last (for a closed path the closing
/// duplicate is therefore not charged twice).
pub fn trajectory_cost(
    instance: &GcsInstance,
    path: &[usize],
    trajectory: &[Vec<f64>],
) -> Result<f64, ModelError> {
    if path.len() != trajectory.len() {
        return Err(ModelError::DimMismatch(format!(
            "path has {} occurrences, trajectory has {}",
            path.len(),
            trajectory.len()
        )));
    }
    for (&v, x) in path.iter().zip(trajectory) {
        if x.len() != instance.vertex(v).set.dim {
            return Err(ModelError::DimMismatch(format!(
                "trajectory point has dim {}, vertex {:?} has dim {}",
                x.len(),
                instance.vertex(v).id,
                instance.vertex(v).set.dim
            )));
        }
    }
    let mut total = 0.0;
    for i in 0..path.len().saturating_sub(1) {
        let (u, v) = (path[i], path[i + 1]);
        let edge = instance.edge(u, v).ok_or_else(|| {
            ModelError::MissingEdge(instance.vertex(u).id.clone(), instance.vertex(v).id.clone())
        })?;
        let mut z = trajectory[i].clone();
        z.extend_from_slice(&trajectory[i + 1]);
        for t in &edge.cost_terms {
            total += t.value(&z);
        }
        for t in &instance.vertex(u).cost_terms {
            total += t.value(&trajectory[i]);
        }
    }
    Ok(total)
}

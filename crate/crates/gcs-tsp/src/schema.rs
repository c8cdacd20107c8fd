//! Instance serialization: a stable JSON schema, strict parsing with field
//! diagnostics, and the validation report.
//!
//! Parsing is split in two layers. `parse_document` only checks the encoding
//! (shape, rectangular matrices, finite numbers); `parse_instance` further
//! requires the graph structure to be coherent. `validate_document` returns
//! every violation it can find instead of stopping at the first, which is
//! what the CLI reports to users. Semantic checks that need the conic layer
//! (emptiness, boundedness, sign of linear terms) live in
//! `validate_instance`.

use serde::{Deserialize, Serialize};

use crate::conic;
use crate::model::{ConvexSet, CostKind, CostTerm, GcsInstance, Layout, Vertex};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub layout: Option<Layout>,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub cost_terms: Vec<CostTermDoc>,
    pub closure_mask: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub cost_terms: Vec<CostTermDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTermDoc {
    pub kind: CostKind,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "m")]
    pub offset: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
}

fn check_matrix(rows: &[Vec<f64>], rhs: &[f64], cols: usize, what: &str) -> Result<(), ParseError> {
    if rows.len() != rhs.len() {
        return Err(ParseError::Schema(format!(
            "{what}: {} rows but {} right-hand sides",
            rows.len(),
            rhs.len()
        )));
    }
    let mut width = None;
    for row in rows {
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(ParseError::Schema(format!("{what}: ragged matrix")));
            }
            _ => {}
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(ParseError::Schema(format!("{what}: non-finite entry")));
        }
    }
    if let Some(w) = width {
        if w != cols {
            return Err(ParseError::Schema(format!(
                "{what}: rows have {w} columns, expected {cols}"
            )));
        }
    }
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(ParseError::Schema(format!("{what}: non-finite right-hand side")));
    }
    Ok(())
}

fn check_cost_term(t: &CostTermDoc, owner_dim: usize, what: &str) -> Result<(), ParseError> {
    if t.m.is_empty() {
        return Err(ParseError::Schema(format!("{what}: empty cost matrix")));
    }
    check_matrix(&t.m, &t.offset, owner_dim, what)?;
    if t.kind == CostKind::Linear && t.m.len() != 1 {
        return Err(ParseError::Schema(format!("{what}: linear term must have one row")));
    }
    if !t.weight.is_finite() || t.weight < 0.0 {
        return Err(ParseError::Schema(format!("{what}: weight must be finite and nonnegative")));
    }
    Ok(())
}

/// Decode the JSON text and check the encoding-level integrity of every
/// matrix and cost term. Graph-level coherence is not checked here.
pub fn parse_document(text: &str) -> Result<InstanceDoc, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    for (i, v) in doc.vertices.iter().enumerate() {
        let at = format!("vertices[{i}]");
        check_matrix(&v.a, &v.b, v.dim, &format!("{at}.A"))?;
        check_matrix(&v.c, &v.d, v.dim, &format!("{at}.C"))?;
        for (j, t) in v.cost_terms.iter().enumerate() {
            check_cost_term(t, v.dim, &format!("{at}.cost_terms[{j}]"))?;
        }
        for &coord in &v.closure_mask {
            if coord >= v.dim {
                return Err(ParseError::Schema(format!(
                    "{at}.closure_mask: coordinate {coord} out of range (dim {})",
                    v.dim
                )));
            }
        }
    }
    // Edge matrix widths depend on endpoint dims and are checked at build.
    Ok(doc)
}

/// Graph-level violations of a decoded document, all of them.
pub fn validate_document(doc: &InstanceDoc) -> Vec<String> {
    let mut out = Vec::new();
    let mut ids = std::collections::HashMap::new();
    for v in &doc.vertices {
        if ids.insert(v.id.as_str(), v.dim).is_some() {
            out.push(format!("duplicate vertex id {:?}", v.id));
        }
    }
    let mut pairs = std::collections::HashSet::new();
    for e in &doc.edges {
        for end in [&e.from, &e.to] {
            if !ids.contains_key(end.as_str()) {
                out.push(format!("unknown endpoint {end:?}"));
            }
        }
        if e.from == e.to {
            out.push(format!("self-loop on {:?}", e.from));
        }
        if !pairs.insert((e.from.as_str(), e.to.as_str())) {
            out.push(format!("duplicate edge ({:?}, {:?})", e.from, e.to));
        }
        if let (Some(&du), Some(&dv)) = (ids.get(e.from.as_str()), ids.get(e.to.as_str())) {
            let pair_dim = du + dv;
            let at = format!("edge ({:?}, {:?})", e.from, e.to);
            if let Err(err) = check_matrix(&e.a, &e.b, pair_dim, &format!("{at}.A"))
                .and_then(|_| check_matrix(&e.c, &e.d, pair_dim, &format!("{at}.C")))
            {
                out.push(err.to_string());
            }
            for (j, t) in e.cost_terms.iter().enumerate() {
                if let Err(err) = check_cost_term(t, pair_dim, &format!("{at}.cost_terms[{j}]")) {
                    out.push(err.to_string());
                }
            }
        }
    }
    out
}

fn term_from_doc(t: &CostTermDoc) -> CostTerm {
    CostTerm { kind: t.kind, m_matrix: t.m.clone(), m_offset: t.offset.clone(), weight: t.weight }
}

/// Build the in-memory instance, rejecting documents with graph-level
/// violations.
pub fn build_instance(doc: &InstanceDoc) -> Result<GcsInstance, ParseError> {
    let violations = validate_document(doc);
    if !violations.is_empty() {
        return Err(ParseError::Schema(violations.join("; ")));
    }
    let vertices = doc
        .vertices
        .iter()
        .map(|v| Vertex {
            id: v.id.clone(),
            set: ConvexSet {
                dim: v.dim,
                a: v.a.clone(),
                b: v.b.clone(),
                c: v.c.clone(),
                d: v.d.clone(),
            },
            cost_terms: v.cost_terms.iter().map(term_from_doc).collect(),
            closure_mask: v.closure_mask.clone(),
        })
        .collect();
    let edges = doc
        .edges
        .iter()
        .map(|e| {
            let du = doc.vertices.iter().find(|v| v.id == e.from).map(|v| v.dim).unwrap_or(0);
            let dv = doc.vertices.iter().find(|v| v.id == e.to).map(|v| v.dim).unwrap_or(0);
            (
                e.from.clone(),
                e.to.clone(),
                ConvexSet {
                    dim: du + dv,
                    a: e.a.clone(),
                    b: e.b.clone(),
                    c: e.c.clone(),
                    d: e.d.clone(),
                },
                e.cost_terms.iter().map(term_from_doc).collect(),
            )
        })
        .collect();
    GcsInstance::new(doc.name.clone(), doc.layout, vertices, edges)
        .map_err(|e| ParseError::Schema(e.to_string()))
}

pub fn parse_instance(text: &str) -> Result<GcsInstance, ParseError> {
    build_instance(&parse_document(text)?)
}

fn term_to_doc(t: &CostTerm) -> CostTermDoc {
    CostTermDoc { kind: t.kind, m: t.m_matrix.clone(), offset: t.m_offset.clone(), weight: t.weight }
}

pub fn instance_to_document(instance: &GcsInstance) -> InstanceDoc {
    InstanceDoc {
        name: instance.name.clone(),
        layout: instance.layout,
        vertices: instance
            .vertices()
            .iter()
            .map(|v| VertexDoc {
                id: v.id.clone(),
                dim: v.set.dim,
                a: v.set.a.clone(),
                b: v.set.b.clone(),
                c: v.set.c.clone(),
                d: v.set.d.clone(),
                cost_terms: v.cost_terms.iter().map(term_to_doc).collect(),
                closure_mask: v.closure_mask.clone(),
            })
            .collect(),
        edges: instance
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                from: instance.vertex(e.from).id.clone(),
                to: instance.vertex(e.to).id.clone(),
                a: e.set.a.clone(),
                b: e.set.b.clone(),
                c: e.set.c.clone(),
                d: e.set.d.clone(),
                cost_terms: e.cost_terms.iter().map(term_to_doc).collect(),
            })
            .collect(),
    }
}

/// Canonical form: fixed field order, shortest float encoding that
/// round-trips bit-exactly, trailing newline.
pub fn serialize_instance(instance: &GcsInstance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_to_document(instance)).expect("serialize");
    s.push('\n');
    s
}

/// Semantic validation of a built instance: set emptiness, vertex-set
/// boundedness, sign of linear cost terms over their owner's feasible set,
/// and strong connectivity. Requires conic solves; returns every violation.
pub fn validate_instance(instance: &GcsInstance) -> Vec<String> {
    let mut out = Vec::new();
    for v in instance.vertices() {
        match conic::set_is_empty(&v.set) {
            Some(true) => out.push(format!("vertex {:?}: empty set", v.id)),
            Some(false) => {
                if let Some(coord) = conic::unbounded_coordinate(&v.set) {
                    out.push(format!(
                        "vertex {:?}: set unbounded in coordinate {coord}",
                        v.id
                    ));
                } else {
                    for (j, t) in v.cost_terms.iter().enumerate() {
                        if t.kind == CostKind::Linear
                            && !conic::linear_term_nonnegative(&v.set, &[], t)
                        {
                            out.push(format!(
                                "vertex {:?}: linear cost term {j} can be negative",
                                v.id
                            ));
                        }
                    }
                }
            }
            None => out.push(format!("vertex {:?}: feasibility check failed numerically", v.id)),
        }
    }
    for e in instance.edges() {
        let u = instance.vertex(e.from);
        let v = instance.vertex(e.to);
        let label = format!("edge ({:?}, {:?})", u.id, v.id);
        match conic::set_is_empty(&e.set) {
            Some(true) => out.push(format!("{label}: empty set")),
            Some(false) => {
                for (j, t) in e.cost_terms.iter().enumerate() {
                    if t.kind == CostKind::Linear
                        && !conic::linear_term_nonnegative(&e.set, &[&u.set, &v.set], t)
                    {
                        out.push(format!("{label}: linear cost term {j} can be negative"));
                    }
                }
            }
            None => out.push(format!("{label}: feasibility check failed numerically")),
        }
    }
    if !instance.strongly_connected() {
        out.push("not strongly connected".to_string());
    }
    out
}

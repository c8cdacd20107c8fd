//! Exact and bounded-suboptimal tours over graphs of convex sets.
//!
//! An instance is a directed graph whose vertices and edges carry convex
//! sets and convex cost terms. A solution is a closed walk visiting every
//! vertex at least once together with one point per occurrence, minimizing
//! the summed edge and vertex costs. The solver builds a hypergraph of
//! per-passage lower bounds, searches visit orders with an integer program
//! over vertex triplets, unfolds orders into concrete walks with best-first
//! search, and certifies costs with second-order-cone trajectory solves.

pub mod baselines;
pub mod bounds;
pub mod chain;
pub mod conic;
pub mod ilp;
mod linalg;
pub mod model;
pub mod oracle;
pub mod ordering;
pub mod problems;
pub mod schema;
pub mod solution;
pub mod solver;
pub mod stats;
pub mod unfold;

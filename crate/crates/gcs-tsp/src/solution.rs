//! Solution records: the JSON artifact a solve produces.

use serde::{Deserialize, Serialize};

use crate::schema::ParseError;
use crate::stats::SolveStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    BoundedSuboptimal,
    TimeLimit,
    Infeasible,
    Heuristic,
}

/// Fields are null rather than omitted when a run produced no tour, so a
/// record always has the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub status: Status,
    pub cost: Option<f64>,
    pub lb_star: Option<f64>,
    pub rho: Option<f64>,
    /// Visit order, one id per vertex, without the closing repeat.
    pub tour: Option<Vec<String>>,
    /// Occurrence sequence of the walk, closing repeat included.
    pub path: Option<Vec<String>>,
    /// One point per occurrence of `path`.
    pub trajectory: Option<Vec<Vec<f64>>>,
    pub stats: SolveStats,
}

pub fn parse_solution(text: &str) -> Result<SolutionRecord, ParseError> {
    let rec: SolutionRecord = serde_json::from_str(text)?;
    let finite = |x: &Option<f64>| x.map_or(true, f64::is_finite);
    if !finite(&rec.cost) || !finite(&rec.lb_star) || !finite(&rec.rho) {
        return Err(ParseError::Schema("non-finite summary value".into()));
    }
    if let Some(traj) = &rec.trajectory {
        if traj.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ParseError::Schema("non-finite trajectory point".into()));
        }
    }
    if !rec.stats.wall_time_s.is_finite() {
        return Err(ParseError::Schema("non-finite wall time".into()));
    }
    Ok(rec)
}

pub fn serialize_solution(record: &SolutionRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("serialize");
    s.push('\n');
    s
}

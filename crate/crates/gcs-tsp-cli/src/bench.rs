//! Benchmark manifests and the grid runner.
//!
//! A manifest is a JSON list of cells, each naming a generated instance
//! (family, size, seed) and an algorithm to run on it. Every cell produces
//! a row in the summary, errors included, so a partial sweep still yields
//! a complete table.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use gcs_tsp::baselines::{solve_ecg, solve_greedy};
use gcs_tsp::model::GcsInstance;
use gcs_tsp::oracle::{brute_force, OracleLimits};
use gcs_tsp::problems::{gen_bezier, gen_linear, gen_point};
use gcs_tsp::solution::SolutionRecord;
use gcs_tsp::solver::{solve, SolveOptions, Solved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Point,
    Linear,
    Bezier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Ghost,
    EpsGhost,
    Ecg,
    Greedy,
    Oracle,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Ghost => "ghost",
            Algo::EpsGhost => "eps-ghost",
            Algo::Ecg => "ecg",
            Algo::Greedy => "greedy",
            Algo::Oracle => "oracle",
        }
    }
}

fn default_time_limit() -> f64 {
    100.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub family: Family,
    pub size: usize,
    pub seed: u64,
    pub algo: Algo,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub continuity: u8,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub cells: Vec<Cell>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cell {0}: {1}")]
    Cell(usize, String),
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let manifest: Manifest = serde_json::from_str(text)?;
    for (i, cell) in manifest.cells.iter().enumerate() {
        if !(0.0..1.0).contains(&cell.epsilon) {
            return Err(ManifestError::Cell(i, format!("epsilon {} outside [0, 1)", cell.epsilon)));
        }
        if cell.continuity > 1 {
            return Err(ManifestError::Cell(i, format!("continuity {} is not 0 or 1", cell.continuity)));
        }
        if !cell.time_limit.is_finite() || cell.time_limit < 0.0 {
            return Err(ManifestError::Cell(i, format!("bad time limit {}", cell.time_limit)));
        }
        if cell.continuity == 1 && cell.family != Family::Bezier {
            return Err(ManifestError::Cell(i, "continuity only applies to bezier".into()));
        }
    }
    Ok(manifest)
}

pub struct CellOutcome {
    /// Instance name, or the cell's parameters when generation failed.
    pub instance: String,
    pub algo: &'static str,
    pub epsilon: f64,
    pub record: Result<SolutionRecord, String>,
}

pub fn generate(cell: &Cell) -> Result<GcsInstance, String> {
    match cell.family {
        Family::Point => gen_point(cell.size, cell.seed),
        Family::Linear => gen_linear(cell.size, cell.seed),
        Family::Bezier => gen_bezier(cell.size, cell.seed, cell.continuity == 1),
    }
    .map_err(|e| e.to_string())
}

pub fn run_algo(instance: &GcsInstance, cell: &Cell) -> Result<Solved, String> {
    let time_limit = Some(Duration::from_secs_f64(cell.time_limit));
    match cell.algo {
        Algo::Ghost => Ok(solve(instance, &SolveOptions { time_limit, ..Default::default() })),
        Algo::EpsGhost => Ok(solve(
            instance,
            &SolveOptions { epsilon: cell.epsilon, time_limit, ..Default::default() },
        )),
        Algo::Ecg => Ok(solve_ecg(instance, time_limit)),
        Algo::Greedy => Ok(solve_greedy(instance, time_limit)),
        Algo::Oracle => brute_force(instance, OracleLimits::default()).map_err(|e| e.to_string()),
    }
}

fn run_cell(cell: &Cell) -> CellOutcome {
    let fallback = format!("{:?}-{}-s{}", cell.family, cell.size, cell.seed).to_lowercase();
    match generate(cell) {
        Err(e) => CellOutcome {
            instance: fallback,
            algo: cell.algo.name(),
            epsilon: cell.epsilon,
            record: Err(e),
        },
        Ok(instance) => {
            let record = run_algo(&instance, cell).map(|solved| solved.to_record(&instance));
            CellOutcome {
                instance: instance.name.clone(),
                algo: cell.algo.name(),
                epsilon: cell.epsilon,
                record,
            }
        }
    }
}

/// Run every cell on up to `parallel` worker threads (further capped by the
/// GCS_TSP_SOLVER_THREADS environment variable), preserving manifest order.
pub fn run_manifest(manifest: &Manifest, parallel: usize) -> Vec<CellOutcome> {
    let cap = std::env::var("GCS_TSP_SOLVER_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(usize::MAX);
    let workers = parallel.min(cap).max(1).min(manifest.cells.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<CellOutcome>>> =
        manifest.cells.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = manifest.cells.get(i) else { break };
                *slots[i].lock().expect("slot lock") = Some(run_cell(cell));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// One line per cell; errors land in the note column with an "error"
/// status so the table shape never depends on which cells succeeded.
pub fn summary_csv(outcomes: &[CellOutcome]) -> String {
    let mut out = String::from(
        "instance,algo,epsilon,status,cost,lb_star,rho,wall_time_s,tours_explored,paths_unfolded,conic_solves,cache_hits,rtsp_solves,note\n",
    );
    for o in outcomes {
        match &o.record {
            Ok(r) => {
                let status = serde_json::to_value(r.status).expect("status serializes");
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},\n",
                    o.instance,
                    o.algo,
                    o.epsilon,
                    status.as_str().expect("status is a string"),
                    fmt_opt(r.cost),
                    fmt_opt(r.lb_star),
                    fmt_opt(r.rho),
                    r.stats.wall_time_s,
                    r.stats.tours_explored,
                    r.stats.paths_unfolded,
                    r.stats.conic_solves,
                    r.stats.cache_hits,
                    r.stats.rtsp_solves,
                ));
            }
            Err(e) => {
                let note = e.replace([',', '\n'], ";");
                out.push_str(&format!(
                    "{},{},{},error,,,,,,,,,,{}\n",
                    o.instance, o.algo, o.epsilon, note
                ));
            }
        }
    }
    out
}

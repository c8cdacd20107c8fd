//! Shared run counters. Every search component bumps these through an
//! `Arc<RunStats>` so parallel workers can report into one place; a
//! `SolveStats` snapshot is what ends up in solution records and CSV rows.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

#[derive(Debug, Default)]
pub struct RunStats {
    pub tours_explored: AtomicU64,
    pub paths_unfolded: AtomicU64,
    pub conic_solves: AtomicU64,
    pub cache_hits: AtomicU64,
    pub rtsp_solves: AtomicU64,
}

impl RunStats {
    pub fn snapshot(&self, wall_time_s: f64) -> SolveStats {
        SolveStats {
            tours_explored: self.tours_explored.load(Ordering::Relaxed),
            paths_unfolded: self.paths_unfolded.load(Ordering::Relaxed),
            conic_solves: self.conic_solves.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            rtsp_solves: self.rtsp_solves.load(Ordering::Relaxed),
            wall_time_s,
        }
    }
}

pub(crate) fn bump(counter: &AtomicU64) {
    counter.fetch_add(1, Ordering::Relaxed);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub tours_explored: u64,
    pub paths_unfolded: u64,
    pub conic_solves: u64,
    pub cache_hits: u64,
    pub rtsp_solves: u64,
    pub wall_time_s: f64,
}

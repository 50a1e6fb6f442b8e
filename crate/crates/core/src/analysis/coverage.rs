use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grouping::{cell_dominance, cell_summaries, grid_aggregate, neighbor_stats, CellSummary, NeighborStats};
use super::AnalysisError;
use crate::record::{EndToEndRecord, MeasurementRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// RSRQ strictly below this is poor.
    pub rsrq_poor_db: f64,
    /// Throughput at or above this passes, both directions.
    pub tp_min_mbps: f64,
    /// Median RTT at or below this passes.
    pub rtt_max_ms: f64,
    /// Weight every occupied voxel equally instead of every sample.
    pub by_voxel: bool,
    pub grid_ground_m: f64,
    pub grid_alt_m: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            rsrq_poor_db: -19.0,
            tp_min_mbps: 5.0,
            rtt_max_ms: 150.0,
            by_voxel: false,
            grid_ground_m: 25.0,
            grid_alt_m: 10.0,
        }
    }
}

/// Fractions are `None` when the trace they depend on is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub thresholds: Thresholds,
    pub n_ran_samples: usize,
    pub n_e2e_samples: usize,
    pub frac_rsrq_poor: Option<f64>,
    pub frac_dl_ge: Option<f64>,
    pub frac_ul_ge: Option<f64>,
    /// Records that lost every probe count as failing.
    pub frac_rtt_le: Option<f64>,
    pub dominance: BTreeMap<u32, f64>,
    pub cells: Vec<CellSummary>,
    pub neighbors: Vec<NeighborStats>,
}

fn fraction<T>(items: &[T], pred: impl Fn(&T) -> bool) -> Option<f64> {
    (!items.is_empty()).then(|| items.iter().filter(|x| pred(x)).count() as f64 / items.len() as f64)
}

fn rsrq_poor_fraction(ran: &[MeasurementRecord], th: &Thresholds) -> Result<Option<f64>, AnalysisError> {
    let poor = |r: &MeasurementRecord| r.serving.rsrq_db.value() < th.rsrq_poor_db;
    if !th.by_voxel || ran.is_empty() {
        return Ok(fraction(ran, poor));
    }
    let grid = grid_aggregate(ran, th.grid_ground_m, th.grid_alt_m)?;
    let mut per_voxel: BTreeMap<(i64, i64, i64), (usize, usize)> = BTreeMap::new();
    for r in ran {
        let e = per_voxel.entry(grid.index_of(r)).or_default();
        e.0 += usize::from(poor(r));
        e.1 += 1;
    }
    let sum: f64 = per_voxel.values().map(|&(p, n)| p as f64 / n as f64).sum();
    Ok(Some(sum / per_voxel.len() as f64))
}

pub fn coverage_report(
    ran: &[MeasurementRecord],
    e2e: &[EndToEndRecord],
    thresholds: &Thresholds,
) -> Result<CoverageReport, AnalysisError> {
    if ran.is_empty() && e2e.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let th = thresholds;
    let (dominance, cells, neighbors) = if ran.is_empty() {
        Default::default()
    } else {
        let neighbors = match neighbor_stats(ran) {
            Ok(m) => m.into_values().collect(),
            Err(AnalysisError::EmptyInput) => Vec::new(),
            Err(e) => return Err(e),
        };
        (cell_dominance(ran)?, cell_summaries(ran)?, neighbors)
    };
    Ok(CoverageReport {
        thresholds: *th,
        n_ran_samples: ran.len(),
        n_e2e_samples: e2e.len(),
        frac_rsrq_poor: rsrq_poor_fraction(ran, th)?,
        frac_dl_ge: fraction(e2e, |r| r.dl_mbps >= th.tp_min_mbps),
        frac_ul_ge: fraction(e2e, |r| r.ul_mbps >= th.tp_min_mbps),
        frac_rtt_le: fraction(e2e, |r| r.rtt.p50_ms.is_some_and(|p| p <= th.rtt_max_ms)),
        dominance,
        cells,
        neighbors,
    })
}

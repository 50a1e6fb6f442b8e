//! Coverage statistics over RAN and end-to-end traces: empirical
//! distributions, altitude and per-cell grouping, neighbor statistics,
//! threshold reports, voxel aggregation, and rank correlation.
//!
//! Every function here is a deterministic pure function of its inputs.

mod correlation;
mod coverage;
mod distribution;
mod grouping;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::MeasurementRecord;

pub use correlation::spearman_rho;
pub use coverage::{coverage_report, CoverageReport, Thresholds};
pub use distribution::{ecdf, histogram_pdf, EcdfPoint, EcdfTable, HistogramBin};
pub use grouping::{
    altitude_bins, cell_dominance, cell_summaries, grid_aggregate, neighbor_stats, per_cell_stats, CellSummary,
    NeighborStats, Voxel, VoxelGrid, LOW_CONTRIBUTION_SHARE,
};
pub use report::{analyze, write_csv_tables, AltitudeProfile, AnalysisDocument, AnalysisOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("empty input")]
    EmptyInput,
    #[error("bin width must be positive, got {0}")]
    NonpositiveBinWidth(f64),
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("unknown metric {0:?} (expected rsrp, rsrq, rssi or sinr)")]
    UnknownMetric(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("rank correlation undefined for constant input")]
    ConstantInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rsrp,
    Rsrq,
    Rssi,
    Sinr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Rsrp, Metric::Rsrq, Metric::Rssi, Metric::Sinr];

    /// Serving-cell value of this metric.
    pub fn value(self, rec: &MeasurementRecord) -> f64 {
        let s = &rec.serving;
        match self {
            Metric::Rsrp => s.rsrp_dbm.value(),
            Metric::Rsrq => s.rsrq_db.value(),
            Metric::Rssi => s.rssi_dbm.value(),
            Metric::Sinr => s.sinr_db.value(),
        }
    }

    /// Record field name, e.g. `rsrp_dbm`.
    pub fn field(self) -> &'static str {
        match self {
            Metric::Rsrp => "rsrp_dbm",
            Metric::Rsrq => "rsrq_db",
            Metric::Rssi => "rssi_dbm",
            Metric::Sinr => "sinr_db",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rsrp => "rsrp",
            Metric::Rsrq => "rsrq",
            Metric::Rssi => "rssi",
            Metric::Sinr => "sinr",
        })
    }
}

impl FromStr for Metric {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| s.eq_ignore_ascii_case(&m.to_string()) || s == m.field())
            .ok_or_else(|| AnalysisError::UnknownMetric(s.to_string()))
    }
}

/// Count, mean, sample standard deviation and range of a group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Absent below two samples.
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        let mean = (sum / n as f64).clamp(min, max);
        let std = (n >= 2).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Some(Stats { count: n, mean, std, min, max })
    }
}

/// Statistics for one bin starting at `lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lower: f64,
    #[serde(flatten)]
    pub stats: Stats,
}

fn check_finite(xs: &[f64]) -> Result<(), AnalysisError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AnalysisError::NonFinite)
    }
}

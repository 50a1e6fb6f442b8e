use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::correlation::spearman_rho;
use super::coverage::{coverage_report, CoverageReport, Thresholds};
use super::distribution::{ecdf, histogram_pdf, EcdfTable, HistogramBin};
use super::grouping::{altitude_bins, grid_aggregate};
use super::{AnalysisError, BinStats, Metric};
use crate::record::{EndToEndRecord, MeasurementRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub thresholds: Thresholds,
    pub alt_bin_m: f64,
    pub rtt_bin_ms: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { thresholds: Thresholds::default(), alt_bin_m: 10.0, rtt_bin_ms: 10.0 }
    }
}

/// Altitude-bin statistics of one metric and the rank correlation between
/// bin altitude and bin mean (absent below three bins).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltitudeProfile {
    pub bins: Vec<BinStats>,
    pub spearman_rho: Option<f64>,
}

impl AltitudeProfile {
    pub fn from_bins(bins: Vec<BinStats>) -> Self {
        let x: Vec<f64> = bins.iter().map(|b| b.lower).collect();
        let y: Vec<f64> = bins.iter().map(|b| b.stats.mean).collect();
        AltitudeProfile { spearman_rho: spearman_rho(&x, &y).ok(), bins }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDocument {
    pub report: CoverageReport,
    /// Keyed by metric name (rsrp, rsrq, rssi, sinr, dl_mbps, ul_mbps, rtt_p50_ms).
    pub ecdf: BTreeMap<String, EcdfTable>,
    pub rtt_pdf: Option<Vec<HistogramBin>>,
    pub altitude: BTreeMap<String, AltitudeProfile>,
    pub occupied_voxels: Option<usize>,
}

pub fn analyze(
    ran: &[MeasurementRecord],
    e2e: &[EndToEndRecord],
    opts: &AnalysisOptions,
) -> Result<AnalysisDocument, AnalysisError> {
    let report = coverage_report(ran, e2e, &opts.thresholds)?;
    let mut ecdfs = BTreeMap::new();
    let mut altitude = BTreeMap::new();
    let mut occupied_voxels = None;
    if !ran.is_empty() {
        for m in Metric::ALL {
            let values: Vec<f64> = ran.iter().map(|r| m.value(r)).collect();
            ecdfs.insert(m.to_string(), ecdf(&values)?);
            altitude.insert(m.to_string(), AltitudeProfile::from_bins(altitude_bins(ran, m, opts.alt_bin_m)?));
        }
        let grid = grid_aggregate(ran, opts.thresholds.grid_ground_m, opts.thresholds.grid_alt_m)?;
        occupied_voxels = Some(grid.voxels.len());
    }
    let mut rtt_pdf = None;
    if !e2e.is_empty() {
        let dl: Vec<f64> = e2e.iter().map(|r| r.dl_mbps).collect();
        let ul: Vec<f64> = e2e.iter().map(|r| r.ul_mbps).collect();
        ecdfs.insert("dl_mbps".into(), ecdf(&dl)?);
        ecdfs.insert("ul_mbps".into(), ecdf(&ul)?);
        let rtt: Vec<f64> = e2e.iter().filter_map(|r| r.rtt.p50_ms).collect();
        if !rtt.is_empty() {
            ecdfs.insert("rtt_p50_ms".into(), ecdf(&rtt)?);
            rtt_pdf = Some(histogram_pdf(&rtt, opts.rtt_bin_ms)?);
        }
    }
    Ok(AnalysisDocument { report, ecdf: ecdfs, rtt_pdf, altitude, occupied_voxels })
}

fn csv_writer(path: &Path) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the document's tables as flat CSV files into `dir` and returns
/// their paths.
pub fn write_csv_tables(doc: &AnalysisDocument, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    for (name, table) in &doc.ecdf {
        let path = dir.join(format!("ecdf_{name}.csv"));
        let mut w = csv_writer(&path)?;
        w.write_record(["x", "f"])?;
        for p in &table.points {
            w.write_record([p.x.to_string(), p.f.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }

    if let Some(pdf) = &doc.rtt_pdf {
        let path = dir.join("pdf_rtt_p50_ms.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["bin_start", "count", "density"])?;
        for b in pdf {
            w.write_record([b.start.to_string(), b.count.to_string(), b.density.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }

    for (name, profile) in &doc.altitude {
        let path = dir.join(format!("altitude_{name}.csv"));
        let mut w = csv_writer(&path)?;
        w.write_record(["bin_lower_m", "count", "mean", "std", "min", "max"])?;
        for b in &profile.bins {
            let s = &b.stats;
            w.write_record([
                b.lower.to_string(),
                s.count.to_string(),
                s.mean.to_string(),
                fmt_opt(s.std),
                s.min.to_string(),
                s.max.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }

    if !doc.report.cells.is_empty() {
        let path = dir.join("cells.csv");
        let mut w = csv_writer(&path)?;
        let mut header = vec!["cell_id".to_string(), "pci".into(), "share".into(), "low_coverage_contribution".into()];
        for m in Metric::ALL {
            for s in ["mean", "std", "min", "max"] {
                header.push(format!("{m}_{s}"));
            }
        }
        w.write_record(&header)?;
        for c in &doc.report.cells {
            let mut row = vec![
                c.cell_id.to_string(),
                c.pci.to_string(),
                c.share.to_string(),
                c.low_coverage_contribution.to_string(),
            ];
            for s in [&c.rsrp, &c.rsrq, &c.rssi, &c.sinr] {
                row.extend([s.mean.to_string(), fmt_opt(s.std), s.min.to_string(), s.max.to_string()]);
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }

    if !doc.report.neighbors.is_empty() {
        let path = dir.join("neighbors.csv");
        let mut w = csv_writer(&path)?;
        w.write_record([
            "pci", "count", "rsrp_mean", "rsrp_std", "rsrq_mean", "rsrq_std", "rssi_mean", "rssi_std",
        ])?;
        for n in &doc.report.neighbors {
            w.write_record([
                n.pci.to_string(),
                n.count.to_string(),
                n.rsrp.mean.to_string(),
                fmt_opt(n.rsrp.std),
                n.rsrq.mean.to_string(),
                fmt_opt(n.rsrq.std),
                n.rssi.mean.to_string(),
                fmt_opt(n.rssi.std),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }

    Ok(written)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, BinStats, Metric, Stats};
use crate::geo::LocalFrame;
use crate::record::MeasurementRecord;

/// Cells serving less than this share of samples are candidates for the
/// low-coverage-contribution flag.
pub const LOW_CONTRIBUTION_SHARE: f64 = 0.05;

fn nonempty(records: &[MeasurementRecord]) -> Result<(), AnalysisError> {
    if records.is_empty() {
        Err(AnalysisError::EmptyInput)
    } else {
        Ok(())
    }
}

/// Per-altitude-bin statistics of a serving-cell metric. Bins are
/// `bin_m` wide starting at 0 m AGL; AMSL is used for records without AGL.
pub fn altitude_bins(records: &[MeasurementRecord], metric: Metric, bin_m: f64) -> Result<Vec<BinStats>, AnalysisError> {
    if !(bin_m > 0.0 && bin_m.is_finite()) {
        return Err(AnalysisError::NonpositiveBinWidth(bin_m));
    }
    nonempty(records)?;
    let missing_agl = records.iter().filter(|r| r.pos.alt_m_agl.is_none()).count();
    if missing_agl > 0 {
        log::warn!("{missing_agl} records lack alt_m_agl; binning those by alt_m_amsl");
    }
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for r in records {
        let alt = r.pos.alt_m_agl.unwrap_or(r.pos.alt_m_amsl);
        groups.entry((alt / bin_m).floor() as i64).or_default().push(metric.value(r));
    }
    Ok(groups
        .into_iter()
        .map(|(k, vs)| BinStats { lower: k as f64 * bin_m, stats: Stats::from_values(&vs).expect("group nonempty") })
        .collect())
}

/// Share of samples served by each cell id.
pub fn cell_dominance(records: &[MeasurementRecord]) -> Result<BTreeMap<u32, f64>, AnalysisError> {
    nonempty(records)?;
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.serving.cell_id).or_default() += 1;
    }
    let n = records.len() as f64;
    Ok(counts.into_iter().map(|(c, k)| (c, k as f64 / n)).collect())
}

pub fn per_cell_stats(records: &[MeasurementRecord], metric: Metric) -> Result<BTreeMap<u32, Stats>, AnalysisError> {
    nonempty(records)?;
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.serving.cell_id).or_default().push(metric.value(r));
    }
    Ok(groups.into_iter().map(|(c, vs)| (c, Stats::from_values(&vs).expect("group nonempty"))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell_id: u32,
    pub pci: u16,
    pub share: f64,
    pub rsrp: Stats,
    pub rsrq: Stats,
    pub rssi: Stats,
    pub sinr: Stats,
    /// Strong received signal (mean RSSI at or above the all-sample mean)
    /// while serving under 5% of samples.
    pub low_coverage_contribution: bool,
}

pub fn cell_summaries(records: &[MeasurementRecord]) -> Result<Vec<CellSummary>, AnalysisError> {
    let shares = cell_dominance(records)?;
    let stats: Vec<BTreeMap<u32, Stats>> =
        Metric::ALL.iter().map(|&m| per_cell_stats(records, m)).collect::<Result<_, _>>()?;
    let pooled_rssi = Stats::from_values(&records.iter().map(|r| Metric::Rssi.value(r)).collect::<Vec<_>>())
        .expect("nonempty")
        .mean;
    let mut pci_of: BTreeMap<u32, u16> = BTreeMap::new();
    for r in records {
        pci_of.entry(r.serving.cell_id).or_insert(r.serving.pci);
    }
    Ok(shares
        .into_iter()
        .map(|(cell_id, share)| {
            let rssi = stats[2][&cell_id];
            CellSummary {
                cell_id,
                pci: pci_of[&cell_id],
                share,
                rsrp: stats[0][&cell_id],
                rsrq: stats[1][&cell_id],
                rssi,
                sinr: stats[3][&cell_id],
                low_coverage_contribution: share < LOW_CONTRIBUTION_SHARE && rssi.mean >= pooled_rssi,
            }
        })
        .collect())
}

/// Neighbor statistics pooled over every neighbor entry with a given pci.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborStats {
    pub pci: u16,
    pub count: usize,
    pub rsrp: Stats,
    pub rsrq: Stats,
    pub rssi: Stats,
}

pub fn neighbor_stats(records: &[MeasurementRecord]) -> Result<BTreeMap<u16, NeighborStats>, AnalysisError> {
    let mut groups: BTreeMap<u16, [Vec<f64>; 3]> = BTreeMap::new();
    for r in records {
        for n in &r.neighbors {
            let g = groups.entry(n.pci).or_default();
            g[0].push(n.rsrp_dbm.value());
            g[1].push(n.rsrq_db.value());
            g[2].push(n.rssi_dbm.value());
        }
    }
    if groups.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    Ok(groups
        .into_iter()
        .map(|(pci, [rsrp, rsrq, rssi])| {
            let s = |v: &[f64]| Stats::from_values(v).expect("group nonempty");
            (pci, NeighborStats { pci, count: rsrp.len(), rsrp: s(&rsrp), rsrq: s(&rsrq), rssi: s(&rssi) })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voxel {
    pub ix: i64,
    pub iy: i64,
    pub iz: i64,
    pub count: usize,
    pub rsrp: Stats,
    pub rsrq: Stats,
    pub rssi: Stats,
    pub sinr: Stats,
}

impl Voxel {
    pub fn stats(&self, metric: Metric) -> &Stats {
        match metric {
            Metric::Rsrp => &self.rsrp,
            Metric::Rsrq => &self.rsrq,
            Metric::Rssi => &self.rssi,
            Metric::Sinr => &self.sinr,
        }
    }
}

/// Records grouped into ground_m × ground_m × alt_m boxes. Horizontal
/// indices are meters east/north of the anchor (the first record) divided
/// by `ground_m`; the vertical index is AMSL altitude divided by `alt_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub ground_m: f64,
    pub alt_m: f64,
    pub anchor_lat_deg: f64,
    pub anchor_lon_deg: f64,
    /// Sorted by (ix, iy, iz).
    pub voxels: Vec<Voxel>,
}

impl VoxelGrid {
    fn frame(&self) -> LocalFrame {
        LocalFrame::new(self.anchor_lat_deg, self.anchor_lon_deg)
    }

    pub fn index_of(&self, rec: &MeasurementRecord) -> (i64, i64, i64) {
        voxel_index(&self.frame(), self.ground_m, self.alt_m, rec)
    }

    /// Voxel center as (lat, lon, alt AMSL).
    pub fn centroid(&self, ix: i64, iy: i64, iz: i64) -> (f64, f64, f64) {
        let (lat, lon) =
            self.frame().inverse((ix as f64 + 0.5) * self.ground_m, (iy as f64 + 0.5) * self.ground_m);
        (lat, lon, (iz as f64 + 0.5) * self.alt_m)
    }

    pub fn get(&self, ix: i64, iy: i64, iz: i64) -> Option<&Voxel> {
        self.voxels
            .binary_search_by(|v| (v.ix, v.iy, v.iz).cmp(&(ix, iy, iz)))
            .ok()
            .map(|i| &self.voxels[i])
    }

    pub fn total_count(&self) -> usize {
        self.voxels.iter().map(|v| v.count).sum()
    }
}

fn voxel_index(frame: &LocalFrame, ground_m: f64, alt_m: f64, rec: &MeasurementRecord) -> (i64, i64, i64) {
    let (e, n) = frame.forward(rec.pos.lat_deg, rec.pos.lon_deg);
    (
        (e / ground_m).floor() as i64,
        (n / ground_m).floor() as i64,
        (rec.pos.alt_m_amsl / alt_m).floor() as i64,
    )
}

pub fn grid_aggregate(records: &[MeasurementRecord], ground_m: f64, alt_m: f64) -> Result<VoxelGrid, AnalysisError> {
    for w in [ground_m, alt_m] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(AnalysisError::NonpositiveBinWidth(w));
        }
    }
    nonempty(records)?;
    let frame = LocalFrame::new(records[0].pos.lat_deg, records[0].pos.lon_deg);
    let mut groups: BTreeMap<(i64, i64, i64), [Vec<f64>; 4]> = BTreeMap::new();
    for r in records {
        let g = groups.entry(voxel_index(&frame, ground_m, alt_m, r)).or_default();
        for (slot, m) in g.iter_mut().zip(Metric::ALL) {
            slot.push(m.value(r));
        }
    }
    let voxels = groups
        .into_iter()
        .map(|((ix, iy, iz), [rsrp, rsrq, rssi, sinr])| {
            let s = |v: &[f64]| Stats::from_values(v).expect("group nonempty");
            Voxel { ix, iy, iz, count: rsrp.len(), rsrp: s(&rsrp), rsrq: s(&rsrq), rssi: s(&rssi), sinr: s(&sinr) }
        })
        .collect();
    let (anchor_lat_deg, anchor_lon_deg) = frame.anchor();
    Ok(VoxelGrid { ground_m, alt_m, anchor_lat_deg, anchor_lon_deg, voxels })
}

//! Comparisons between the library and the reference implementations,
//! shared by the per-area tests and the acceptance run.

use std::collections::BTreeMap;

use skylog_core::analysis::{
    cell_dominance, ecdf, grid_aggregate, histogram_pdf, neighbor_stats, per_cell_stats, spearman_rho, Metric, Stats,
};
use skylog_core::geo::LocalFrame;
use skylog_core::record::MeasurementRecord;

use super::oracle;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn ecdf_matches(seed: u64) -> Check {
    // rounded to tenths so duplicates occur
    let samples: Vec<f64> =
        oracle::random_samples(seed, 1000, -30.0, 0.0).into_iter().map(|x| (x * 10.0).round() / 10.0).collect();
    let got: Vec<(f64, f64)> = ecdf(&samples).map_err(|e| e.to_string())?.points.iter().map(|p| (p.x, p.f)).collect();
    ensure(got == oracle::ecdf(&samples), || format!("ecdf differs from counting oracle (seed {seed})"))
}

pub fn histogram_matches(seed: u64) -> Check {
    let samples = oracle::random_samples(seed, 1000, 0.0, 400.0);
    for width in [0.25, 1.0, 8.0] {
        let bins = histogram_pdf(&samples, width).map_err(|e| e.to_string())?;
        let got: Vec<(f64, usize)> = bins.iter().map(|b| (b.start, b.count)).collect();
        ensure(got == oracle::histogram(&samples, width), || format!("histogram width {width} differs"))?;
        let mass: f64 = bins.iter().map(|b| b.density * width).sum();
        ensure((mass - 1.0).abs() < 1e-9, || format!("histogram mass {mass}"))?;
    }
    Ok(())
}

fn stats_match(s: &Stats, values: &[f64]) -> bool {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    s.count == values.len() && s.mean == oracle::mean(values) && s.std == oracle::sample_std(values) && s.min == min && s.max == max
}

pub fn grouped_stats_match(records: &[MeasurementRecord]) -> Check {
    let n = records.len() as f64;
    let shares = cell_dominance(records).map_err(|e| e.to_string())?;
    let total: f64 = shares.values().sum();
    ensure((total - 1.0).abs() < 1e-9, || format!("shares sum to {total}"))?;
    for (&cell, &share) in &shares {
        let count = records.iter().filter(|r| r.serving.cell_id == cell).count();
        ensure(share == count as f64 / n, || format!("share of cell {cell}"))?;
    }
    for m in Metric::ALL {
        for (cell, s) in per_cell_stats(records, m).map_err(|e| e.to_string())? {
            let values: Vec<f64> = records.iter().filter(|r| r.serving.cell_id == cell).map(|r| m.value(r)).collect();
            ensure(stats_match(&s, &values), || format!("{m} stats of cell {cell}"))?;
        }
    }
    let nb = neighbor_stats(records).map_err(|e| e.to_string())?;
    let entries: usize = records.iter().map(|r| r.neighbors.len()).sum();
    ensure(nb.values().map(|s| s.count).sum::<usize>() == entries, || "neighbor counts".into())?;
    for (pci, s) in nb {
        let values: Vec<f64> =
            records.iter().flat_map(|r| &r.neighbors).filter(|x| x.pci == pci).map(|x| x.rsrp_dbm.value()).collect();
        ensure(stats_match(&s.rsrp, &values), || format!("neighbor {pci} rsrp"))?;
    }
    Ok(())
}

pub fn voxels_match(records: &[MeasurementRecord], ground_m: f64, alt_m: f64) -> Check {
    let grid = grid_aggregate(records, ground_m, alt_m).map_err(|e| e.to_string())?;
    ensure(grid.total_count() == records.len(), || "voxel counts do not sum to record count".into())?;
    let frame = LocalFrame::new(records[0].pos.lat_deg, records[0].pos.lon_deg);
    let mut groups: BTreeMap<(i64, i64, i64), Vec<f64>> = BTreeMap::new();
    for r in records {
        let (e, n) = frame.forward(r.pos.lat_deg, r.pos.lon_deg);
        let key =
            ((e / ground_m).floor() as i64, (n / ground_m).floor() as i64, (r.pos.alt_m_amsl / alt_m).floor() as i64);
        groups.entry(key).or_default().push(r.serving.rsrp_dbm.value());
    }
    ensure(groups.len() == grid.voxels.len(), || "voxel count differs".into())?;
    for ((ix, iy, iz), values) in groups {
        let v = grid.get(ix, iy, iz).ok_or_else(|| format!("missing voxel ({ix},{iy},{iz})"))?;
        ensure(stats_match(&v.rsrp, &values), || format!("voxel ({ix},{iy},{iz}) rsrp"))?;
    }
    Ok(())
}

pub fn spearman_matches(seed: u64) -> Check {
    let x = oracle::random_samples(seed, 1000, 0.0, 100.0);
    // coarse values force ties
    let y: Vec<f64> =
        oracle::random_samples(seed + 1, 1000, 0.0, 100.0).iter().zip(&x).map(|(a, b)| ((a + b) / 10.0).round()).collect();
    let got = spearman_rho(&x, &y).map_err(|e| e.to_string())?;
    let want = oracle::spearman(&x, &y);
    ensure((got - want).abs() < 1e-12, || format!("spearman {got} vs oracle {want}"))
}

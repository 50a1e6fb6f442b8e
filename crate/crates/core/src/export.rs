//! GeoJSON and CSV exports of records and voxel aggregates.
//!
//! GeoJSON points use (lon, lat, alt AMSL) order; the altitude is repeated
//! in the properties for 2D consumers.

use std::io::{Read, Write};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::analysis::{Metric, VoxelGrid};
use crate::record::{validate_record, Decibel, GeoPosition, MeasurementRecord, NeighborCellSample, ServingCellSample, Source, Violation};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("nothing to export")]
    EmptyInput,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}: {violation}")]
    Invalid { row: usize, violation: Violation },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn point(lat: f64, lon: f64, alt: f64, properties: Map<String, Value>) -> Value {
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": [lon, lat, alt] },
        "properties": properties,
    })
}

fn collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}

/// One point feature per record carrying the chosen metric.
pub fn records_geojson(records: &[MeasurementRecord], metric: Metric) -> Result<Value, ExportError> {
    if records.is_empty() {
        return Err(ExportError::EmptyInput);
    }
    let features = records
        .iter()
        .map(|r| {
            let mut p = Map::new();
            p.insert(metric.field().into(), json!(metric.value(r)));
            p.insert("ts_unix_ms".into(), json!(r.ts_unix_ms));
            p.insert("alt_m_amsl".into(), json!(r.pos.alt_m_amsl));
            if let Some(agl) = r.pos.alt_m_agl {
                p.insert("alt_m_agl".into(), json!(agl));
            }
            p.insert("cell_id".into(), json!(r.serving.cell_id));
            p.insert("pci".into(), json!(r.serving.pci));
            point(r.pos.lat_deg, r.pos.lon_deg, r.pos.alt_m_amsl, p)
        })
        .collect();
    Ok(collection(features))
}

/// One point feature per voxel, placed at the voxel center.
pub fn voxels_geojson(grid: &VoxelGrid, metric: Metric) -> Result<Value, ExportError> {
    if grid.voxels.is_empty() {
        return Err(ExportError::EmptyInput);
    }
    let features = grid
        .voxels
        .iter()
        .map(|v| {
            let (lat, lon, alt) = grid.centroid(v.ix, v.iy, v.iz);
            let s = v.stats(metric);
            let mut p = Map::new();
            p.insert("metric".into(), json!(metric.field()));
            p.insert(format!("{}_mean", metric.field()), json!(s.mean));
            p.insert(format!("{}_std", metric.field()), json!(s.std));
            p.insert(format!("{}_min", metric.field()), json!(s.min));
            p.insert(format!("{}_max", metric.field()), json!(s.max));
            p.insert("count".into(), json!(v.count));
            p.insert("ix".into(), json!(v.ix));
            p.insert("iy".into(), json!(v.iy));
            p.insert("iz".into(), json!(v.iz));
            p.insert("alt_m_amsl".into(), json!(alt));
            point(lat, lon, alt, p)
        })
        .collect();
    Ok(collection(features))
}

/// CSV header in record schema order.
pub const RECORD_CSV_HEADER: [&str; 15] = [
    "ts_unix_ms",
    "lat_deg",
    "lon_deg",
    "alt_m_amsl",
    "alt_m_agl",
    "earfcn",
    "pci",
    "cell_id",
    "tac",
    "rsrp_dbm",
    "rsrq_db",
    "rssi_dbm",
    "sinr_db",
    "neighbors",
    "source",
];

/// Neighbors packed as `earfcn:pci:rsrp:rsrq:rssi` joined with `;`.
fn encode_neighbors(ns: &[NeighborCellSample]) -> String {
    ns.iter()
        .map(|n| format!("{}:{}:{}:{}:{}", n.earfcn, n.pci, n.rsrp_dbm, n.rsrq_db, n.rssi_dbm))
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_neighbors(s: &str) -> Option<Vec<NeighborCellSample>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(';')
        .map(|item| {
            let f: Vec<&str> = item.split(':').collect();
            if f.len() != 5 {
                return None;
            }
            let db = |x: &str| x.parse::<f64>().ok().map(Decibel::from_f64);
            Some(NeighborCellSample {
                earfcn: f[0].parse().ok()?,
                pci: f[1].parse().ok()?,
                rsrp_dbm: db(f[2])?,
                rsrq_db: db(f[3])?,
                rssi_dbm: db(f[4])?,
            })
        })
        .collect()
}

pub fn records_csv(records: &[MeasurementRecord], out: impl Write) -> Result<(), ExportError> {
    if records.is_empty() {
        return Err(ExportError::EmptyInput);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_CSV_HEADER)?;
    for r in records {
        let s = &r.serving;
        w.write_record([
            r.ts_unix_ms.to_string(),
            r.pos.lat_deg.to_string(),
            r.pos.lon_deg.to_string(),
            r.pos.alt_m_amsl.to_string(),
            r.pos.alt_m_agl.map(|a| a.to_string()).unwrap_or_default(),
            s.earfcn.to_string(),
            s.pci.to_string(),
            s.cell_id.to_string(),
            s.tac.to_string(),
            s.rsrp_dbm.to_string(),
            s.rsrq_db.to_string(),
            s.rssi_dbm.to_string(),
            s.sinr_db.to_string(),
            encode_neighbors(&r.neighbors),
            r.source.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV produced by [`records_csv`] back into validated records.
pub fn import_records_csv(input: impl Read) -> Result<Vec<MeasurementRecord>, ExportError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(RECORD_CSV_HEADER) {
        return Err(ExportError::Malformed { row: 0, message: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let bad = |field: &str| ExportError::Malformed { row: row_no, message: format!("bad {field}") };
        macro_rules! num {
            ($idx:expr) => {
                row[$idx].parse().map_err(|_| bad(RECORD_CSV_HEADER[$idx]))?
            };
        }
        let db = |idx: usize| row[idx].parse::<f64>().map(Decibel::from_f64).map_err(|_| bad(RECORD_CSV_HEADER[idx]));
        let agl = match &row[4] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad("alt_m_agl"))?),
        };
        let neighbors = decode_neighbors(&row[13]).ok_or_else(|| bad("neighbors"))?;
        let rec = MeasurementRecord {
            ts_unix_ms: num!(0),
            pos: GeoPosition::new(num!(1), num!(2), num!(3), agl),
            serving: ServingCellSample {
                earfcn: num!(5),
                pci: num!(6),
                cell_id: num!(7),
                tac: num!(8),
                rsrp_dbm: db(9)?,
                rsrq_db: db(10)?,
                rssi_dbm: db(11)?,
                sinr_db: db(12)?,
            },
            neighbors,
            source: row[14].parse::<Source>().map_err(|_| bad("source"))?,
        };
        validate_record(&rec).map_err(|violation| ExportError::Invalid { row: row_no, violation })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn voxels_csv(grid: &VoxelGrid, out: impl Write) -> Result<(), ExportError> {
    if grid.voxels.is_empty() {
        return Err(ExportError::EmptyInput);
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["ix", "iy", "iz", "lat_deg", "lon_deg", "alt_m_amsl", "count"].iter().map(|s| s.to_string()).collect();
    for m in Metric::ALL {
        for s in ["mean", "std", "min", "max"] {
            header.push(format!("{}_{s}", m.field()));
        }
    }
    w.write_record(&header)?;
    for v in &grid.voxels {
        let (lat, lon, alt) = grid.centroid(v.ix, v.iy, v.iz);
        let mut row = vec![
            v.ix.to_string(),
            v.iy.to_string(),
            v.iz.to_string(),
            lat.to_string(),
            lon.to_string(),
            alt.to_string(),
            v.count.to_string(),
        ];
        for m in Metric::ALL {
            let s = v.stats(m);
            row.extend([
                s.mean.to_string(),
                s.std.map(|x| x.to_string()).unwrap_or_default(),
                s.min.to_string(),
                s.max.to_string(),
            ]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::grid_aggregate;
    use crate::geo::LocalFrame;

    fn rec(ts: i64, lat: f64, lon: f64) -> MeasurementRecord {
        MeasurementRecord {
            ts_unix_ms: ts,
            pos: GeoPosition::new(lat, lon, 310.5, Some(40.5)),
            serving: ServingCellSample {
                earfcn: 5230,
                pci: 101,
                cell_id: 27447301,
                tac: 12802,
                rsrp_dbm: Decibel::from_f64(-91.0),
                rsrq_db: Decibel::from_f64(-10.5),
                rssi_dbm: Decibel::from_f64(-62.0),
                sinr_db: Decibel::from_f64(13.2),
            },
            neighbors: vec![NeighborCellSample {
                earfcn: 5230,
                pci: 102,
                rsrp_dbm: Decibel::from_f64(-98.5),
                rsrq_db: Decibel::from_f64(-14.0),
                rssi_dbm: Decibel::from_f64(-62.0),
            }],
            source: Source::Sim,
        }
    }

    #[test]
    fn one_record_one_point() {
        let doc = records_geojson(&[rec(1, 38.93, -95.35)], Metric::Rsrp).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        let f = &doc["features"][0];
        assert_eq!(f["geometry"]["coordinates"], json!([-95.35, 38.93, 310.5]));
        assert_eq!(f["properties"]["rsrp_dbm"], json!(-91.0));
        assert!(matches!(records_geojson(&[], Metric::Rsrp), Err(ExportError::EmptyInput)));
    }

    #[test]
    fn voxel_centroid_is_inverse_projected_center() {
        let anchor = rec(1, 38.93, -95.35);
        let frame = LocalFrame::new(38.93, -95.35);
        let (lat, lon) = frame.inverse(37.0, -12.0);
        let other = rec(2, lat, lon);
        let grid = grid_aggregate(&[anchor, other], 25.0, 10.0).unwrap();
        let doc = voxels_geojson(&grid, Metric::Sinr).unwrap();
        assert_eq!(doc["features"].as_array().unwrap().len(), 2);
        // second point sits in voxel (1, -1, 31): center 37.5 m east, -12.5 m north
        let v = grid.get(1, -1, 31).unwrap();
        let (clat, clon, calt) = grid.centroid(v.ix, v.iy, v.iz);
        let (elat, elon) = frame.inverse(37.5, -12.5);
        assert!((clat - elat).abs() < 1e-12 && (clon - elon).abs() < 1e-12);
        assert_eq!(calt, 315.0);
    }

    #[test]
    fn csv_round_trip() {
        let mut recs = vec![rec(1, 38.93, -95.35), rec(2, 38.931, -95.351)];
        recs[1].neighbors.clear();
        recs[1].pos.alt_m_agl = None;
        let mut buf = Vec::new();
        records_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ts_unix_ms,lat_deg,lon_deg,alt_m_amsl,alt_m_agl,earfcn,pci,"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(import_records_csv(&buf[..]).unwrap(), recs);
    }
}

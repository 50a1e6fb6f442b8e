//! Browser bindings for the radio simulator and coverage statistics.
//!
//! Each exported function returns a JSON string; the page in `www/` draws
//! it on a canvas. The pure functions are public so they can be tested
//! natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use skylog_core::analysis::{altitude_bins, coverage_report, ecdf, spearman_rho, Metric, Thresholds};
use skylog_core::collector::assemble_record;
use skylog_core::geo::LocalFrame;
use skylog_core::sim::{flight_position, radio_sample, RadioEnvironment, SimConfig};
use skylog_core::{GeoPosition, MeasurementRecord, Source};

/// Map extent in meters around the climb point: east then north.
const EXTENT_E: (f64, f64) = (-1200.0, 600.0);
const EXTENT_N: (f64, f64) = (-900.0, 900.0);

fn canonical(seed: u64) -> (SimConfig, RadioEnvironment) {
    let cfg = SimConfig::canonical();
    let env = cfg.env.clone().with_seed(seed);
    (cfg, env)
}

fn sample_record(env: &RadioEnvironment, pos: GeoPosition, ts: i64) -> Option<MeasurementRecord> {
    assemble_record(radio_sample(env, &pos).to_report(), pos, ts, Source::Sim).ok()
}

fn origin(cfg: &SimConfig) -> (LocalFrame, f64) {
    let wp = cfg.waypoints[0].pos;
    let ground = wp.alt_m_amsl - wp.alt_m_agl.unwrap_or(0.0);
    (LocalFrame::new(wp.lat_deg, wp.lon_deg), ground)
}

/// Grid of `n`×`n` serving-cell values at a fixed height above ground,
/// rows from north to south.
pub fn field_map_json(seed: u64, agl_m: f64, metric: &str, n: u32) -> Result<String, String> {
    let metric: Metric = metric.parse().map_err(|e| format!("{e}"))?;
    if !(1..=200).contains(&n) || !(0.0..=122.0).contains(&agl_m) {
        return Err("n must be in 1..=200 and altitude in 0..=122 m".into());
    }
    let (cfg, env) = canonical(seed);
    let (frame, ground) = origin(&cfg);
    let step_e = (EXTENT_E.1 - EXTENT_E.0) / f64::from(n);
    let step_n = (EXTENT_N.1 - EXTENT_N.0) / f64::from(n);
    let mut values = Vec::with_capacity((n * n) as usize);
    let mut serving = Vec::with_capacity((n * n) as usize);
    for row in 0..n {
        let north = EXTENT_N.1 - (f64::from(row) + 0.5) * step_n;
        for col in 0..n {
            let east = EXTENT_E.0 + (f64::from(col) + 0.5) * step_e;
            let (lat, lon) = frame.inverse(east, north);
            let pos = GeoPosition::new(lat, lon, ground + agl_m, Some(agl_m));
            match sample_record(&env, pos, 0) {
                Some(r) => {
                    values.push(Value::from(metric.value(&r)));
                    serving.push(Value::from(r.serving.pci));
                }
                None => {
                    values.push(Value::Null);
                    serving.push(Value::Null);
                }
            }
        }
    }
    let stations: Vec<Value> = env
        .stations
        .iter()
        .map(|s| {
            let (e, no) = frame.forward(s.site_pos.lat_deg, s.site_pos.lon_deg);
            json!({ "pci": s.pci, "east_m": e, "north_m": no })
        })
        .collect();
    Ok(json!({
        "metric": metric.field(),
        "n": n,
        "extent_east_m": [EXTENT_E.0, EXTENT_E.1],
        "extent_north_m": [EXTENT_N.0, EXTENT_N.1],
        "values": values,
        "serving_pci": serving,
        "stations": stations,
    })
    .to_string())
}

fn climb_records(env: &RadioEnvironment, cfg: &SimConfig) -> Result<Vec<MeasurementRecord>, String> {
    let plan = cfg.plan().map_err(|e| e.to_string())?;
    let secs = plan.duration_s().floor() as i64;
    Ok((0..secs).filter_map(|t| sample_record(env, flight_position(&plan, t as f64), t * 1000)).collect())
}

/// Per-altitude-bin statistics along the bundled climb, pooled over
/// `seeds` consecutive seeds starting at `seed`.
pub fn altitude_profile_json(seed: u64, seeds: u32, metric: &str) -> Result<String, String> {
    let metric: Metric = metric.parse().map_err(|e| format!("{e}"))?;
    if !(1..=50).contains(&seeds) {
        return Err("seeds must be in 1..=50".into());
    }
    let mut records = Vec::new();
    for s in seed..seed + u64::from(seeds) {
        let (cfg, env) = canonical(s);
        records.extend(climb_records(&env, &cfg)?);
    }
    let bins = altitude_bins(&records, metric, 10.0).map_err(|e| e.to_string())?;
    let x: Vec<f64> = bins.iter().map(|b| b.lower).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.stats.mean).collect();
    let rho = spearman_rho(&x, &y).ok();
    Ok(json!({ "metric": metric.field(), "bins": bins, "spearman_rho": rho }).to_string())
}

/// RSRQ ECDF over the climb and the share of samples below the threshold.
pub fn rsrq_coverage_json(seed: u64, poor_db: f64) -> Result<String, String> {
    let (cfg, env) = canonical(seed);
    let records = climb_records(&env, &cfg)?;
    let th = Thresholds { rsrq_poor_db: poor_db, ..Thresholds::default() };
    let report = coverage_report(&records, &[], &th).map_err(|e| e.to_string())?;
    let rsrq: Vec<f64> = records.iter().map(|r| Metric::Rsrq.value(r)).collect();
    let table = ecdf(&rsrq).map_err(|e| e.to_string())?;
    Ok(json!({
        "threshold_db": poor_db,
        "frac_rsrq_poor": report.frac_rsrq_poor,
        "n": records.len(),
        "ecdf": table.points,
        "dominance": report.dominance,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn field_map(seed: u32, agl_m: f64, metric: &str, n: u32) -> Result<String, JsValue> {
    field_map_json(u64::from(seed), agl_m, metric, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn altitude_profile(seed: u32, seeds: u32, metric: &str) -> Result<String, JsValue> {
    altitude_profile_json(u64::from(seed), seeds, metric).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rsrq_coverage(seed: u32, poor_db: f64) -> Result<String, JsValue> {
    rsrq_coverage_json(u64::from(seed), poor_db).map_err(|e| JsValue::from_str(&e))
}

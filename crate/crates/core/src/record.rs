//! Canonical measurement records, their validity envelope, and the
//! line-delimited trace format shared by every other module.
//!
//! A trace file holds one JSON object per LF-terminated line. RAN traces
//! carry [`MeasurementRecord`]s and end-to-end traces carry
//! [`EndToEndRecord`]s. Unknown top-level keys are ignored on decode so
//! newer writers stay readable by older readers.

use std::fmt;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const RSRP_RANGE: (f64, f64) = (-140.0, -44.0);
pub const RSRQ_RANGE: (f64, f64) = (-24.0, -3.0);
pub const RSSI_RANGE: (f64, f64) = (-120.0, -10.0);
pub const SINR_RANGE: (f64, f64) = (-20.0, 40.0);
pub const PCI_MAX: u16 = 503;
pub const CELL_ID_MAX: u32 = (1 << 28) - 1;
pub const MAX_NEIGHBORS: usize = 8;
/// Highest accepted height above ground: the 122 m flight ceiling plus margin.
pub const AGL_MAX_M: f64 = 200.0;

/// A power or ratio in dB/dBm, stored in tenths so that text round-trips
/// are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decibel(i32);

impl Decibel {
    pub const fn from_tenths(tenths: i32) -> Self {
        Decibel(tenths)
    }

    /// Rounds to the nearest tenth.
    pub fn from_f64(value: f64) -> Self {
        Decibel((value * 10.0).round() as i32)
    }

    pub const fn tenths(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }
}

impl fmt::Display for Decibel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{}", abs / 10, abs % 10)
    }
}

impl From<f64> for Decibel {
    fn from(value: f64) -> Self {
        Decibel::from_f64(value)
    }
}

impl Serialize for Decibel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Decibel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        if !v.is_finite() || v.abs() > 1.0e6 {
            return Err(serde::de::Error::custom(format!("decibel value {v} out of representable range")));
        }
        Ok(Decibel::from_f64(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPosition {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m_amsl: f64,
    #[serde(default)]
    pub alt_m_agl: Option<f64>,
}

impl GeoPosition {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m_amsl: f64, alt_m_agl: Option<f64>) -> Self {
        GeoPosition { lat_deg, lon_deg, alt_m_amsl, alt_m_agl }
    }

    pub fn validate(&self) -> Result<(), Violation> {
        if !(self.lat_deg.is_finite() && (-90.0..=90.0).contains(&self.lat_deg)) {
            return Err(Violation::new("lat_deg", self.lat_deg, "out of [-90,90]"));
        }
        if !(self.lon_deg.is_finite() && (-180.0..=180.0).contains(&self.lon_deg)) {
            return Err(Violation::new("lon_deg", self.lon_deg, "out of [-180,180]"));
        }
        if !self.alt_m_amsl.is_finite() {
            return Err(Violation::new("alt_m_amsl", self.alt_m_amsl, "not finite"));
        }
        if let Some(agl) = self.alt_m_agl {
            if !(agl.is_finite() && (0.0..=AGL_MAX_M).contains(&agl)) {
                return Err(Violation::new("alt_m_agl", agl, "out of [0,200]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServingCellSample {
    pub earfcn: u32,
    pub pci: u16,
    pub cell_id: u32,
    pub tac: u16,
    pub rsrp_dbm: Decibel,
    pub rsrq_db: Decibel,
    pub rssi_dbm: Decibel,
    pub sinr_db: Decibel,
}

impl ServingCellSample {
    pub fn validate(&self) -> Result<(), Violation> {
        check_pci("serving.pci", self.pci)?;
        if self.cell_id > CELL_ID_MAX {
            return Err(Violation::new("serving.cell_id", self.cell_id, "out of [0,268435455]"));
        }
        check_power("rsrp_dbm", self.rsrp_dbm, RSRP_RANGE)?;
        check_power("rsrq_db", self.rsrq_db, RSRQ_RANGE)?;
        check_power("rssi_dbm", self.rssi_dbm, RSSI_RANGE)?;
        check_power("sinr_db", self.sinr_db, SINR_RANGE)?;
        check_rssi_covers_rsrp(self.rsrp_dbm, self.rssi_dbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborCellSample {
    pub earfcn: u32,
    pub pci: u16,
    pub rsrp_dbm: Decibel,
    pub rsrq_db: Decibel,
    pub rssi_dbm: Decibel,
}

impl NeighborCellSample {
    pub fn validate(&self) -> Result<(), Violation> {
        check_pci("neighbor.pci", self.pci)?;
        check_power("neighbor.rsrp_dbm", self.rsrp_dbm, RSRP_RANGE)?;
        check_power("neighbor.rsrq_db", self.rsrq_db, RSRQ_RANGE)?;
        check_power("neighbor.rssi_dbm", self.rssi_dbm, RSSI_RANGE)?;
        check_rssi_covers_rsrp(self.rsrp_dbm, self.rssi_dbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sim,
    Replay,
    Hw,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Sim => "sim",
            Source::Replay => "replay",
            Source::Hw => "hw",
        })
    }
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(Source::Sim),
            "replay" => Ok(Source::Replay),
            "hw" => Ok(Source::Hw),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

/// One geo-tagged RAN sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub ts_unix_ms: i64,
    #[serde(flatten)]
    pub pos: GeoPosition,
    pub serving: ServingCellSample,
    pub neighbors: Vec<NeighborCellSample>,
    pub source: Source,
}

/// Validates the cell-level fields shared by records and modem reports.
pub fn validate_cells(serving: &ServingCellSample, neighbors: &[NeighborCellSample]) -> Result<(), Violation> {
    serving.validate()?;
    if neighbors.len() > MAX_NEIGHBORS {
        return Err(Violation::new("neighbors", neighbors.len(), "more than 8 entries"));
    }
    for n in neighbors {
        n.validate()?;
        if n.earfcn == serving.earfcn && n.pci == serving.pci {
            return Err(Violation::new(
                "neighbors",
                format!("({},{})", n.earfcn, n.pci),
                "neighbor duplicates serving cell",
            ));
        }
    }
    Ok(())
}

pub fn validate_record(rec: &MeasurementRecord) -> Result<(), Violation> {
    rec.pos.validate()?;
    validate_cells(&rec.serving, &rec.neighbors)
}

/// Round-trip-time summary over one probe burst. Statistics are `None`
/// when no reply arrived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RttSummary {
    pub sent: u32,
    pub received: u32,
    pub min_ms: Option<f64>,
    pub mean_ms: Option<f64>,
    pub p50_ms: Option<f64>,
    pub max_ms: Option<f64>,
    pub loss_fraction: f64,
}

impl RttSummary {
    /// Builds a summary from the RTTs of the replies that arrived.
    pub fn from_samples(sent: u32, rtts_ms: &[f64]) -> Self {
        let received = rtts_ms.len() as u32;
        let loss_fraction = if sent == 0 { 0.0 } else { f64::from(sent - received.min(sent)) / f64::from(sent) };
        if rtts_ms.is_empty() {
            return RttSummary {
                sent,
                received: 0,
                min_ms: None,
                mean_ms: None,
                p50_ms: None,
                max_ms: None,
                loss_fraction,
            };
        }
        let mut sorted = rtts_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let p50 = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        let mean = (sorted.iter().sum::<f64>() / n as f64).clamp(sorted[0], sorted[n - 1]);
        RttSummary {
            sent,
            received,
            min_ms: Some(sorted[0]),
            mean_ms: Some(mean),
            p50_ms: Some(p50),
            max_ms: Some(sorted[n - 1]),
            loss_fraction,
        }
    }

    pub fn validate(&self) -> Result<(), Violation> {
        if self.received > self.sent {
            return Err(Violation::new("rtt.received", self.received, "exceeds sent"));
        }
        if !(0.0..=1.0).contains(&self.loss_fraction) {
            return Err(Violation::new("rtt.loss_fraction", self.loss_fraction, "out of [0,1]"));
        }
        let stats = [self.min_ms, self.mean_ms, self.p50_ms, self.max_ms];
        if self.received == 0 {
            if stats.iter().any(Option::is_some) {
                return Err(Violation::new("rtt", "statistics", "present although nothing was received"));
            }
            return Ok(());
        }
        match stats {
            [Some(min), Some(mean), Some(p50), Some(max)] => {
                if !(min <= p50 && p50 <= max) {
                    return Err(Violation::new("rtt.p50_ms", p50, "outside [min_ms, max_ms]"));
                }
                if !(min <= mean && mean <= max) {
                    return Err(Violation::new("rtt.mean_ms", mean, "outside [min_ms, max_ms]"));
                }
                Ok(())
            }
            _ => Err(Violation::new("rtt", "statistics", "missing although replies were received")),
        }
    }
}

/// One geo-tagged end-to-end service sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndRecord {
    pub ts_unix_ms: i64,
    #[serde(flatten)]
    pub pos: GeoPosition,
    pub rtt: RttSummary,
    pub dl_mbps: f64,
    pub ul_mbps: f64,
    pub duration_s: f64,
}

pub fn validate_e2e(rec: &EndToEndRecord) -> Result<(), Violation> {
    rec.pos.validate()?;
    rec.rtt.validate()?;
    if !(rec.dl_mbps.is_finite() && rec.dl_mbps >= 0.0) {
        return Err(Violation::new("dl_mbps", rec.dl_mbps, "negative"));
    }
    if !(rec.ul_mbps.is_finite() && rec.ul_mbps >= 0.0) {
        return Err(Violation::new("ul_mbps", rec.ul_mbps, "negative"));
    }
    if !(rec.duration_s.is_finite() && rec.duration_s > 0.0) {
        return Err(Violation::new("duration_s", rec.duration_s, "not positive"));
    }
    Ok(())
}

/// The first invariant a value breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field} {message}: {value}")]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, value: impl fmt::Display, message: impl Into<String>) -> Self {
        Violation { field: field.into(), value: value.to_string(), message: message.into() }
    }
}

fn check_pci(field: &str, pci: u16) -> Result<(), Violation> {
    if pci > PCI_MAX {
        return Err(Violation::new(field, pci, "out of [0,503]"));
    }
    Ok(())
}

fn check_power(field: &str, v: Decibel, (lo, hi): (f64, f64)) -> Result<(), Violation> {
    let x = v.value();
    if x < lo || x > hi {
        return Err(Violation::new(field, v, format!("out of [{lo},{hi}]")));
    }
    Ok(())
}

fn check_rssi_covers_rsrp(rsrp: Decibel, rssi: Decibel) -> Result<(), Violation> {
    if rssi < rsrp {
        return Err(Violation::new("rssi_dbm", rssi, format!("below rsrp_dbm {rsrp}")));
    }
    Ok(())
}

/// A record type stored one-per-line in a trace file.
pub trait TraceRecord: Serialize + DeserializeOwned {
    fn ts_unix_ms(&self) -> i64;
    fn validate(&self) -> Result<(), Violation>;
}

impl TraceRecord for MeasurementRecord {
    fn ts_unix_ms(&self) -> i64 {
        self.ts_unix_ms
    }

    fn validate(&self) -> Result<(), Violation> {
        validate_record(self)
    }
}

impl TraceRecord for EndToEndRecord {
    fn ts_unix_ms(&self) -> i64 {
        self.ts_unix_ms
    }

    fn validate(&self) -> Result<(), Violation> {
        validate_e2e(self)
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: {violation}")]
    Invalid { line: usize, violation: Violation },
    #[error("line {line}: timestamp {ts} does not increase past {prev}")]
    NonMonotonic { line: usize, ts: i64, prev: i64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DecodeError {
    fn at_line(self, line: usize) -> Self {
        match self {
            DecodeError::Syntax { column, message, .. } => DecodeError::Syntax { line, column, message },
            DecodeError::Invalid { violation, .. } => DecodeError::Invalid { line, violation },
            other => other,
        }
    }
}

/// Encodes one record as a single trace line without the trailing LF.
pub fn encode_record<R: TraceRecord>(rec: &R) -> String {
    serde_json::to_string(rec).expect("trace records always serialize")
}

/// Decodes and validates one trace line. Errors report line 1; trace
/// readers rewrite the line number.
pub fn decode_record<R: TraceRecord>(line: &str) -> Result<R, DecodeError> {
    let rec: R = serde_json::from_str(line).map_err(|e| DecodeError::Syntax {
        line: 1,
        column: e.column(),
        message: e.to_string(),
    })?;
    rec.validate().map_err(|violation| DecodeError::Invalid { line: 1, violation })?;
    Ok(rec)
}

/// Reads an entire trace, enforcing validity and strictly increasing
/// timestamps. Blank lines are skipped.
pub fn read_trace<R: TraceRecord>(reader: impl BufRead) -> Result<Vec<R>, DecodeError> {
    let mut out: Vec<R> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: R = decode_record(&line).map_err(|e| e.at_line(lineno))?;
        if let Some(prev) = out.last() {
            if rec.ts_unix_ms() <= prev.ts_unix_ms() {
                return Err(DecodeError::NonMonotonic { line: lineno, ts: rec.ts_unix_ms(), prev: prev.ts_unix_ms() });
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_trace_file<R: TraceRecord>(path: impl AsRef<std::path::Path>) -> Result<Vec<R>, DecodeError> {
    let f = std::fs::File::open(path)?;
    read_trace(std::io::BufReader::new(f))
}

pub fn write_trace<R: TraceRecord>(mut w: impl Write, records: &[R]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", encode_record(r))?;
    }
    Ok(())
}

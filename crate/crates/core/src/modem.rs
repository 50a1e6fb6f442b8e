//! Modem backend contract and the line-oriented report grammar.
//!
//! ```text
//! response      = serving-line *8(neighbor-line) ok-line / error-line
//! serving-line  = "+SRV: " earfcn "," pci "," cellid "," tac "," db1 "," db1 "," db1 "," db1 CRLF
//! neighbor-line = "+NBR: " earfcn "," pci "," db1 "," db1 "," db1 CRLF
//! ok-line       = "OK" CRLF
//! error-line    = "ERROR: " 1*3DIGIT CRLF
//! db1           = ["-"] 1*3DIGIT "." DIGIT
//! ```
//!
//! The grammar is vendor neutral. A hardware backend only has to
//! translate whatever the modem speaks into these lines.

use std::path::Path;

use thiserror::Error;

use crate::record::{
    validate_cells, Decibel, DecodeError, GeoPosition, MeasurementRecord, NeighborCellSample, ServingCellSample,
    Source, Violation, CELL_ID_MAX, MAX_NEIGHBORS, PCI_MAX, RSRP_RANGE, RSRQ_RANGE, RSSI_RANGE, SINR_RANGE,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModemReport {
    pub serving: ServingCellSample,
    pub neighbors: Vec<NeighborCellSample>,
}

impl ModemReport {
    pub fn validate(&self) -> Result<(), Violation> {
        validate_cells(&self.serving, &self.neighbors)
    }
}

impl From<&MeasurementRecord> for ModemReport {
    fn from(rec: &MeasurementRecord) -> Self {
        ModemReport { serving: rec.serving, neighbors: rec.neighbors.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: expected {expected}")]
    Syntax { line: usize, column: usize, expected: &'static str },
    #[error("{field} out of range: {value}")]
    Range { field: &'static str, value: String },
    #[error("invalid report: {0}")]
    Invalid(Violation),
    #[error("modem reported ERROR {0}")]
    Modem(u16),
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0, line: 1, column: 1 }
    }

    fn peek(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }

    fn starts_with(&self, lit: &[u8]) -> bool {
        self.buf[self.pos..].starts_with(lit)
    }

    fn bump(&mut self) {
        if self.buf[self.pos] == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        self.pos += 1;
    }

    fn error(&self, expected: &'static str) -> ParseError {
        ParseError::Syntax { line: self.line, column: self.column, expected }
    }

    fn literal(&mut self, lit: &[u8], expected: &'static str) -> Result<(), ParseError> {
        for &b in lit {
            if self.peek() != Some(b) {
                return Err(self.error(expected));
            }
            self.bump();
        }
        Ok(())
    }

    fn crlf(&mut self) -> Result<(), ParseError> {
        self.literal(b"\r\n", "CRLF")
    }

    fn comma(&mut self) -> Result<(), ParseError> {
        self.literal(b",", "','")
    }

    fn digits(&mut self, max_digits: usize, expected: &'static str) -> Result<u64, ParseError> {
        let mut value: u64 = 0;
        let mut n = 0;
        while let Some(b @ b'0'..=b'9') = self.peek() {
            if n == max_digits {
                return Err(self.error(expected));
            }
            value = value * 10 + u64::from(b - b'0');
            n += 1;
            self.bump();
        }
        if n == 0 {
            return Err(self.error(expected));
        }
        Ok(value)
    }

    fn unsigned(&mut self) -> Result<u64, ParseError> {
        self.digits(10, "unsigned decimal integer")
    }

    fn db1(&mut self) -> Result<Decibel, ParseError> {
        let negative = self.peek() == Some(b'-');
        if negative {
            self.bump();
        }
        let whole = self.digits(3, "1-3 digit decibel value")?;
        self.literal(b".", "'.' and one fractional digit")?;
        let frac = self.digits(1, "one fractional digit")?;
        let tenths = (whole * 10 + frac) as i32;
        Ok(Decibel::from_tenths(if negative { -tenths } else { tenths }))
    }

    fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn bounded<T: TryFrom<u64>>(field: &'static str, value: u64, max: u64) -> Result<T, ParseError> {
    if value > max {
        return Err(ParseError::Range { field, value: value.to_string() });
    }
    T::try_from(value).map_err(|_| ParseError::Range { field, value: value.to_string() })
}

fn in_range(field: &'static str, v: Decibel, (lo, hi): (f64, f64)) -> Result<Decibel, ParseError> {
    if v.value() < lo || v.value() > hi {
        return Err(ParseError::Range { field, value: v.to_string() });
    }
    Ok(v)
}

/// Parses one complete modem response.
pub fn parse_report(raw: &[u8]) -> Result<ModemReport, ParseError> {
    let mut c = Cursor::new(raw);
    if c.starts_with(b"ERROR: ") {
        c.literal(b"ERROR: ", "\"ERROR: \"")?;
        let code = c.digits(3, "1-3 digit error code")?;
        c.crlf()?;
        if !c.at_end() {
            return Err(c.error("end of response"));
        }
        return Err(ParseError::Modem(code as u16));
    }

    c.literal(b"+SRV: ", "\"+SRV: \" or \"ERROR: \"")?;
    let earfcn = bounded("earfcn", c.unsigned()?, u64::from(u32::MAX))?;
    c.comma()?;
    let pci = bounded("pci", c.unsigned()?, u64::from(PCI_MAX))?;
    c.comma()?;
    let cell_id = bounded("cell_id", c.unsigned()?, u64::from(CELL_ID_MAX))?;
    c.comma()?;
    let tac = bounded("tac", c.unsigned()?, u64::from(u16::MAX))?;
    c.comma()?;
    let rsrp_dbm = in_range("rsrp_dbm", c.db1()?, RSRP_RANGE)?;
    c.comma()?;
    let rsrq_db = in_range("rsrq_db", c.db1()?, RSRQ_RANGE)?;
    c.comma()?;
    let rssi_dbm = in_range("rssi_dbm", c.db1()?, RSSI_RANGE)?;
    c.comma()?;
    let sinr_db = in_range("sinr_db", c.db1()?, SINR_RANGE)?;
    c.crlf()?;
    let serving = ServingCellSample { earfcn, pci, cell_id, tac, rsrp_dbm, rsrq_db, rssi_dbm, sinr_db };

    let mut neighbors = Vec::new();
    while c.starts_with(b"+NBR: ") {
        if neighbors.len() == MAX_NEIGHBORS {
            return Err(c.error("\"OK\" after at most 8 neighbor lines"));
        }
        c.literal(b"+NBR: ", "\"+NBR: \"")?;
        let earfcn = bounded("earfcn", c.unsigned()?, u64::from(u32::MAX))?;
        c.comma()?;
        let pci = bounded("pci", c.unsigned()?, u64::from(PCI_MAX))?;
        c.comma()?;
        let rsrp_dbm = in_range("rsrp_dbm", c.db1()?, RSRP_RANGE)?;
        c.comma()?;
        let rsrq_db = in_range("rsrq_db", c.db1()?, RSRQ_RANGE)?;
        c.comma()?;
        let rssi_dbm = in_range("rssi_dbm", c.db1()?, RSSI_RANGE)?;
        c.crlf()?;
        neighbors.push(NeighborCellSample { earfcn, pci, rsrp_dbm, rsrq_db, rssi_dbm });
    }
    c.literal(b"OK", "\"+NBR: \" or \"OK\"")?;
    c.crlf()?;
    if !c.at_end() {
        return Err(c.error("end of response"));
    }

    let report = ModemReport { serving, neighbors };
    report.validate().map_err(ParseError::Invalid)?;
    Ok(report)
}

/// Renders a report in the wire grammar: serving line, neighbors in
/// order, then `OK`.
pub fn render_report(report: &ModemReport) -> Vec<u8> {
    let s = &report.serving;
    let mut out = format!(
        "+SRV: {},{},{},{},{},{},{},{}\r\n",
        s.earfcn, s.pci, s.cell_id, s.tac, s.rsrp_dbm, s.rsrq_db, s.rssi_dbm, s.sinr_db
    );
    for n in &report.neighbors {
        out.push_str(&format!("+NBR: {},{},{},{},{}\r\n", n.earfcn, n.pci, n.rsrp_dbm, n.rsrq_db, n.rssi_dbm));
    }
    out.push_str("OK\r\n");
    out.into_bytes()
}

#[derive(Debug, Error)]
pub enum PollError {
    #[error("backend exhausted")]
    Exhausted,
    #[error(transparent)]
    Report(#[from] ParseError),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

/// A source of modem reports. One poller owns a backend at a time.
pub trait ModemBackend: Send {
    fn descriptor(&self) -> Source;

    /// Tells the backend where the airframe currently is. Physical modems
    /// ignore this; the simulator samples its radio field here.
    fn set_position(&mut self, _pos: &GeoPosition) {}

    fn poll(&mut self) -> Result<ModemReport, PollError>;
}

/// Raw byte exchange with a modem; each call returns one complete response.
pub trait ModemTransport: Send {
    fn query(&mut self) -> std::io::Result<Vec<u8>>;
}

/// Backend that parses raw responses from a transport.
pub struct TransportBackend<T> {
    transport: T,
    source: Source,
}

impl<T: ModemTransport> TransportBackend<T> {
    pub fn new(transport: T, source: Source) -> Self {
        TransportBackend { transport, source }
    }
}

impl<T: ModemTransport> ModemBackend for TransportBackend<T> {
    fn descriptor(&self) -> Source {
        self.source
    }

    fn poll(&mut self) -> Result<ModemReport, PollError> {
        let raw = self.transport.query().map_err(|e| PollError::Unavailable(e.to_string()))?;
        Ok(parse_report(&raw)?)
    }
}

/// Hardware backend contract. No vendor transport ships with this crate,
/// so every poll reports the backend as unavailable.
#[derive(Debug, Clone)]
pub struct HwBackend {
    pub endpoint: String,
}

impl ModemBackend for HwBackend {
    fn descriptor(&self) -> Source {
        Source::Hw
    }

    fn poll(&mut self) -> Result<ModemReport, PollError> {
        Err(PollError::Unavailable(format!("no hardware transport for {}", self.endpoint)))
    }
}

/// Replays the cell portion of a recorded trace, in file order.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    reports: std::vec::IntoIter<ModemReport>,
}

impl ReplayBackend {
    pub fn from_records(records: &[MeasurementRecord]) -> Self {
        let reports: Vec<_> = records.iter().map(ModemReport::from).collect();
        ReplayBackend { reports: reports.into_iter() }
    }

    /// Ingests the whole trace up front so that malformed files fail here
    /// rather than mid-run.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DecodeError> {
        let records: Vec<MeasurementRecord> = crate::record::read_trace_file(path)?;
        Ok(Self::from_records(&records))
    }

    pub fn remaining(&self) -> usize {
        self.reports.len()
    }
}

impl ModemBackend for ReplayBackend {
    fn descriptor(&self) -> Source {
        Source::Replay
    }

    fn poll(&mut self) -> Result<ModemReport, PollError> {
        self.reports.next().ok_or(PollError::Exhausted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_NEIGHBOR: &[u8] =
        b"+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n+NBR: 5230,102,-98.5,-14.0,-62.0\r\nOK\r\n";

    #[test]
    fn parses_report_with_one_neighbor() {
        let r = parse_report(ONE_NEIGHBOR).unwrap();
        assert_eq!(r.serving.earfcn, 5230);
        assert_eq!(r.serving.pci, 101);
        assert_eq!(r.serving.cell_id, 27_447_301);
        assert_eq!(r.serving.tac, 12802);
        assert_eq!(r.serving.rsrp_dbm, Decibel::from_tenths(-910));
        assert_eq!(r.serving.rsrq_db, Decibel::from_tenths(-105));
        assert_eq!(r.serving.rssi_dbm, Decibel::from_tenths(-620));
        assert_eq!(r.serving.sinr_db, Decibel::from_tenths(132));
        assert_eq!(r.neighbors.len(), 1);
        assert_eq!(r.neighbors[0].pci, 102);
        assert_eq!(r.neighbors[0].rsrp_dbm, Decibel::from_tenths(-985));
        assert_eq!(render_report(&r), ONE_NEIGHBOR);
    }

    #[test]
    fn error_line_is_modem_error() {
        assert_eq!(parse_report(b"ERROR: 7\r\n"), Err(ParseError::Modem(7)));
        assert!(matches!(parse_report(b"ERROR: 1234\r\n"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn pci_above_503_is_range_error() {
        let raw = b"+SRV: 5230,600,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n";
        assert_eq!(parse_report(raw), Err(ParseError::Range { field: "pci", value: "600".into() }));
    }

    #[test]
    fn empty_neighbor_list_renders_serving_and_ok_only() {
        let mut r = parse_report(ONE_NEIGHBOR).unwrap();
        r.neighbors.clear();
        assert_eq!(render_report(&r), b"+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n".to_vec());
    }

    #[test]
    fn eight_neighbors_render_nine_data_lines() {
        let mut r = parse_report(ONE_NEIGHBOR).unwrap();
        let n = r.neighbors[0];
        r.neighbors = (0..8).map(|i| NeighborCellSample { pci: 200 + i, ..n }).collect();
        let text = String::from_utf8(render_report(&r)).unwrap();
        let lines: Vec<_> = text.split_terminator("\r\n").collect();
        assert_eq!(lines.len(), 10);
        assert!(lines[0].starts_with("+SRV: "));
        assert!(lines[1..9].iter().all(|l| l.starts_with("+NBR: ")));
        assert_eq!(lines[9], "OK");
        assert_eq!(parse_report(text.as_bytes()).unwrap(), r);
    }

    #[test]
    fn two_fractional_digits_are_rejected() {
        let raw = b"+SRV: 5230,101,27447301,12802,-91.05,-10.5,-62.0,13.2\r\nOK\r\n";
        assert_eq!(parse_report(raw), Err(ParseError::Syntax { line: 1, column: 36, expected: "one fractional digit" }));
    }

    #[test]
    fn sign_on_unsigned_field_is_rejected() {
        let raw = b"+SRV: -5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n";
        assert_eq!(
            parse_report(raw),
            Err(ParseError::Syntax { line: 1, column: 7, expected: "unsigned decimal integer" })
        );
    }

    #[test]
    fn neighbor_equal_to_serving_is_invalid() {
        let raw = b"+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n+NBR: 5230,101,-98.5,-14.0,-62.0\r\nOK\r\n";
        assert!(matches!(parse_report(raw), Err(ParseError::Invalid(_))));
    }

    #[test]
    fn replay_yields_in_order_then_exhausted() {
        let base = parse_report(ONE_NEIGHBOR).unwrap();
        let records: Vec<_> = (0..3)
            .map(|i| MeasurementRecord {
                ts_unix_ms: i,
                pos: GeoPosition::new(0.0, 0.0, 0.0, None),
                serving: ServingCellSample { pci: 10 + i as u16, ..base.serving },
                neighbors: base.neighbors.clone(),
                source: Source::Sim,
            })
            .collect();
        let mut b = ReplayBackend::from_records(&records);
        for i in 0..3 {
            assert_eq!(b.poll().unwrap().serving.pci, 10 + i);
        }
        assert!(matches!(b.poll(), Err(PollError::Exhausted)));
    }
}

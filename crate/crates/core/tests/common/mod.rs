#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use proptest::collection::vec;
use proptest::prelude::*;

use skylog_core::modem::ModemReport;
use skylog_core::record::{
    EndToEndRecord, GeoPosition, MeasurementRecord, NeighborCellSample, RttSummary, ServingCellSample, Source,
};
use skylog_core::Decibel;

pub fn db(lo: f64, hi: f64) -> impl Strategy<Value = Decibel> {
    ((lo * 10.0) as i32..=(hi * 10.0) as i32).prop_map(Decibel::from_tenths)
}

/// RSRP and an RSSI at or above it (RSSI includes the reference signal).
pub fn rsrp_rssi() -> impl Strategy<Value = (Decibel, Decibel)> {
    (-1400i32..=-440).prop_flat_map(|rsrp| {
        (Just(Decibel::from_tenths(rsrp)), (rsrp.max(-1200)..=-100).prop_map(Decibel::from_tenths))
    })
}

pub fn serving() -> impl Strategy<Value = ServingCellSample> {
    (0u32..=262_143, 0u16..=503, 0u32..(1 << 28), any::<u16>(), rsrp_rssi(), db(-24.0, -3.0), db(-20.0, 40.0))
        .prop_map(|(earfcn, pci, cell_id, tac, (rsrp_dbm, rssi_dbm), rsrq_db, sinr_db)| ServingCellSample {
            earfcn,
            pci,
            cell_id,
            tac,
            rsrp_dbm,
            rsrq_db,
            rssi_dbm,
            sinr_db,
        })
}

pub fn neighbor() -> impl Strategy<Value = NeighborCellSample> {
    (0u32..=262_143, 0u16..=503, rsrp_rssi(), db(-24.0, -3.0)).prop_map(
        |(earfcn, pci, (rsrp_dbm, rssi_dbm), rsrq_db)| NeighborCellSample { earfcn, pci, rsrp_dbm, rsrq_db, rssi_dbm },
    )
}

/// Valid report: neighbors are distinct from each other and from serving.
pub fn report() -> impl Strategy<Value = ModemReport> {
    (serving(), vec(neighbor(), 0..=8)).prop_map(|(serving, ns)| {
        let mut seen = vec![(serving.earfcn, serving.pci)];
        let mut neighbors = Vec::new();
        for n in ns {
            if !seen.contains(&(n.earfcn, n.pci)) {
                seen.push((n.earfcn, n.pci));
                neighbors.push(n);
            }
        }
        ModemReport { serving, neighbors }
    })
}

pub fn position() -> impl Strategy<Value = GeoPosition> {
    (-90.0..=90.0f64, -180.0..=180.0f64, -400.0..9000.0f64, prop::option::of(0.0..=200.0f64))
        .prop_map(|(lat, lon, amsl, agl)| GeoPosition::new(lat, lon, amsl, agl))
}

pub fn source() -> impl Strategy<Value = Source> {
    prop_oneof![Just(Source::Sim), Just(Source::Replay), Just(Source::Hw)]
}

pub fn record() -> impl Strategy<Value = MeasurementRecord> {
    (0i64..4_000_000_000_000, position(), report(), source()).prop_map(|(ts_unix_ms, pos, r, source)| {
        MeasurementRecord { ts_unix_ms, pos, serving: r.serving, neighbors: r.neighbors, source }
    })
}

pub fn e2e_record() -> impl Strategy<Value = EndToEndRecord> {
    (0i64..4_000_000_000_000, position(), 1u32..50, vec(0.1..2000.0f64, 0..50), 0.0..1000.0f64, 0.0..1000.0f64)
        .prop_map(|(ts_unix_ms, pos, sent, rtts, dl_mbps, ul_mbps)| {
            let rtts: Vec<f64> = rtts.into_iter().take(sent as usize).collect();
            EndToEndRecord {
                ts_unix_ms,
                pos,
                rtt: RttSummary::from_samples(sent, &rtts),
                dl_mbps,
                ul_mbps,
                duration_s: 5.0,
            }
        })
}

pub const GOOD_REPORT: &str =
    "+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n+NBR: 5230,102,-98.5,-14.0,-62.0\r\nOK\r\n";

/// Malformed modem responses with the 1-based (line, column) where the
/// parser must stop, or `None` for errors reported by field name.
pub const MALFORMED_REPORTS: &[(&str, Option<(usize, usize)>)] = &[
    ("", Some((1, 1))),
    ("OK\r\n", Some((1, 1))),
    ("+SRV 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n", Some((1, 5))),
    ("+SRV: 5230;101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n", Some((1, 11))),
    ("+SRV: 5230,101,27447301,12802,-91,-10.5,-62.0,13.2\r\nOK\r\n", Some((1, 34))),
    ("+SRV: 5230,101,27447301,12802,-91.05,-10.5,-62.0,13.2\r\nOK\r\n", Some((1, 36))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0\r\nOK\r\n", Some((1, 48))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\nOK\r\n", Some((1, 53))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n", Some((2, 1))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK", Some((2, 3))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\nextra", Some((3, 1))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n+NBR: 5230,102,-98.5,-14.0\r\nOK\r\n", Some((2, 27))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n+NBX: 5230,102,-98.5,-14.0,-62.0\r\nOK\r\n", Some((2, 1))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\n+NBR: 5230,102,--98.5,-14.0,-62.0\r\nOK\r\n", Some((2, 17))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0, 13.2\r\nOK\r\n", Some((1, 49))),
    ("+SRV: 5230,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nok\r\n", Some((2, 1))),
    ("ERROR 5\r\n", Some((1, 1))),
    ("ERROR: \r\n", Some((1, 8))),
    ("+SRV: ,101,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n", Some((1, 7))),
    ("+SRV: 5230,101,27447301,12802,-9a.0,-10.5,-62.0,13.2\r\nOK\r\n", Some((1, 33))),
    ("+SRV: 5230,504,27447301,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n", None),
    ("+SRV: 5230,101,27447301,12802,-30.0,-10.5,-62.0,13.2\r\nOK\r\n", None),
    ("+SRV: 5230,101,27447301,12802,-91.0,-2.0,-62.0,13.2\r\nOK\r\n", None),
    ("+SRV: 5230,101,268435456,12802,-91.0,-10.5,-62.0,13.2\r\nOK\r\n", None),
];

mod common;

use skylog_core::modem::{parse_report, ParseError};
use skylog_core::record::{decode_record, read_trace, DecodeError, MeasurementRecord};

#[test]
fn malformed_reports_fail_at_the_expected_position() {
    assert!(common::MALFORMED_REPORTS.len() >= 20);
    for (raw, at) in common::MALFORMED_REPORTS {
        let err = parse_report(raw.as_bytes()).expect_err(raw);
        match (err, at) {
            (ParseError::Syntax { line, column, .. }, Some(pos)) => {
                assert_eq!((line, column), *pos, "{raw:?}")
            }
            (ParseError::Range { .. } | ParseError::Invalid(_), None) => {}
            (other, _) => panic!("{raw:?}: unexpected {other:?}"),
        }
    }
}

#[test]
fn modem_error_line_is_reported() {
    assert_eq!(parse_report(b"ERROR: 30\r\n"), Err(ParseError::Modem(30)));
}

const GOOD_LINE: &str = r#"{"ts_unix_ms":1,"lat_deg":38.93,"lon_deg":-95.35,"alt_m_amsl":300.0,"alt_m_agl":30.0,"serving":{"earfcn":5230,"pci":101,"cell_id":27447301,"tac":12802,"rsrp_dbm":-91.0,"rsrq_db":-10.5,"rssi_dbm":-62.0,"sinr_db":13.2},"neighbors":[],"source":"sim"}"#;

#[test]
fn malformed_trace_lines() {
    decode_record::<MeasurementRecord>(GOOD_LINE).unwrap();
    let syntax = [
        GOOD_LINE.replace("\"source\":\"sim\"", "\"source\":sim"),
        GOOD_LINE[..GOOD_LINE.len() - 1].to_string(),
        GOOD_LINE.replace("\"pci\":101", "\"pci\":-1"),
        GOOD_LINE.replace(",\"neighbors\":[]", ""),
    ];
    for line in &syntax {
        assert!(
            matches!(decode_record::<MeasurementRecord>(line), Err(DecodeError::Syntax { line: 1, column, .. }) if column > 0),
            "{line}"
        );
    }
    let invalid = [
        GOOD_LINE.replace("-91.0", "-30.0"),
        GOOD_LINE.replace("\"alt_m_agl\":30.0", "\"alt_m_agl\":250.0"),
        GOOD_LINE.replace("\"lat_deg\":38.93", "\"lat_deg\":98.93"),
    ];
    for line in &invalid {
        assert!(matches!(decode_record::<MeasurementRecord>(line), Err(DecodeError::Invalid { .. })), "{line}");
    }
}

#[test]
fn trace_errors_carry_line_numbers() {
    let text = format!("{GOOD_LINE}\n\n{}\n", GOOD_LINE.replace("\"ts_unix_ms\":1", "\"ts_unix_ms\":x"));
    match read_trace::<MeasurementRecord>(text.as_bytes()) {
        Err(DecodeError::Syntax { line: 3, column: 15, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
    let text = format!("{GOOD_LINE}\n{GOOD_LINE}\n");
    assert!(matches!(read_trace::<MeasurementRecord>(text.as_bytes()), Err(DecodeError::NonMonotonic { line: 2, .. })));
}

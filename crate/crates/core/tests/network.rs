use std::io::{BufRead, BufReader, Write};
use std::net::{IpAddr, Ipv4Addr, TcpListener};

use skylog_core::probe::{rtt_probe, run_server, throughput_test, Direction, ProbeConfig, ProbeError};

const LOCALHOST: IpAddr = IpAddr::V4(Ipv4Addr::LOCALHOST);

fn probe_cfg(rtt_port: u16, tp_port: u16) -> ProbeConfig {
    ProbeConfig {
        rtt_port,
        tp_port,
        rtt_count: 20,
        rtt_interval_ms: 10,
        rtt_timeout_ms: 500,
        tp_duration_s: 2,
        ..ProbeConfig::new("127.0.0.1")
    }
}

#[test]
fn loopback_echo_loses_nothing() {
    let server = run_server(LOCALHOST, 0, 0).unwrap();
    let cfg = probe_cfg(server.rtt_addr.port(), server.tp_addr.port());
    let s = rtt_probe(&cfg).unwrap();
    server.shutdown();
    assert_eq!(s.received, s.sent);
    assert_eq!(s.sent, 20);
    assert_eq!(s.loss_fraction, 0.0);
    assert!(s.p50_ms.unwrap() < 5.0, "{s:?}");
}

#[test]
fn silent_server_counts_every_probe_as_lost() {
    // bound but never answered
    let sock = std::net::UdpSocket::bind((LOCALHOST, 0)).unwrap();
    let cfg = ProbeConfig { rtt_count: 3, rtt_timeout_ms: 100, ..probe_cfg(sock.local_addr().unwrap().port(), 1) };
    let s = rtt_probe(&cfg).unwrap();
    assert_eq!((s.sent, s.received, s.loss_fraction), (3, 0, 1.0));
    assert_eq!(s.p50_ms, None);
}

#[test]
fn throttled_transfers_in_both_directions() {
    let server = run_server(LOCALHOST, 0, 0).unwrap();
    let cfg = ProbeConfig {
        throttle_mbps: Some(10.0),
        tp_block_bytes: 16 * 1024,
        ..probe_cfg(server.rtt_addr.port(), server.tp_addr.port())
    };
    let ul = throughput_test(&cfg, Direction::Ul).unwrap();
    let dl = throughput_test(&cfg, Direction::Dl).unwrap();
    server.shutdown();
    for r in [&ul, &dl] {
        assert_eq!(r.bytes_sent, r.bytes_received, "{r:?}");
        assert!((8.0..=10.5).contains(&r.mbps), "{r:?}");
    }
}

#[test]
fn rejected_header_is_a_handshake_error() {
    let listener = TcpListener::bind((LOCALHOST, 0)).unwrap();
    let port = listener.local_addr().unwrap().port();
    let t = std::thread::spawn(move || {
        let (s, _) = listener.accept().unwrap();
        let mut line = String::new();
        BufReader::new(s.try_clone().unwrap()).read_line(&mut line).unwrap();
        (&s).write_all(b"{\"error\":\"busy\"}\n").unwrap();
    });
    let err = throughput_test(&probe_cfg(1, port), Direction::Ul).unwrap_err();
    t.join().unwrap();
    assert!(matches!(err, ProbeError::Handshake(ref m) if m == "busy"), "{err}");
}

#[test]
fn dropped_dl_stream_reports_partial_bytes() {
    let listener = TcpListener::bind((LOCALHOST, 0)).unwrap();
    let port = listener.local_addr().unwrap().port();
    let t = std::thread::spawn(move || {
        let (s, _) = listener.accept().unwrap();
        let mut line = String::new();
        BufReader::new(s.try_clone().unwrap()).read_line(&mut line).unwrap();
        (&s).write_all(b"{\"ok\":true}\n").unwrap();
        (&s).write_all(&[0u8; 5000]).unwrap();
    });
    let err = throughput_test(&probe_cfg(1, port), Direction::Dl).unwrap_err();
    t.join().unwrap();
    match err {
        ProbeError::PartialTransfer { bytes_so_far, .. } => assert_eq!(bytes_so_far, 5000),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn unknown_direction_is_refused_by_the_server() {
    let server = run_server(LOCALHOST, 0, 0).unwrap();
    let mut s = std::net::TcpStream::connect(server.tp_addr).unwrap();
    s.write_all(b"{\"dir\":\"XX\",\"duration_s\":1,\"block_bytes\":10}\n").unwrap();
    let mut line = String::new();
    BufReader::new(&s).read_line(&mut line).unwrap();
    server.shutdown();
    assert!(line.starts_with("{\"error\":"), "{line}");
}

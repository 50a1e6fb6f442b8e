use std::hash::{BuildHasher, Hasher};
use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

use super::{ProbeConfig, ProbeError};
use crate::record::RttSummary;

/// "SKLG"
pub const ECHO_MAGIC: u32 = 0x534B_4C47;
pub const ECHO_VERSION: u8 = 1;
pub const ECHO_PACKET_LEN: usize = 64;

/// Echo datagram: magic, version, session, seq, client send time in µs,
/// zero padding to 64 bytes. All integers big-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EchoPacket {
    pub session: u32,
    pub seq: u32,
    pub send_time_us: u64,
}

impl EchoPacket {
    pub fn encode(&self) -> [u8; ECHO_PACKET_LEN] {
        let mut buf = [0u8; ECHO_PACKET_LEN];
        buf[0..4].copy_from_slice(&ECHO_MAGIC.to_be_bytes());
        buf[4] = ECHO_VERSION;
        buf[5..9].copy_from_slice(&self.session.to_be_bytes());
        buf[9..13].copy_from_slice(&self.seq.to_be_bytes());
        buf[13..21].copy_from_slice(&self.send_time_us.to_be_bytes());
        buf
    }

    /// Accepts only full-length datagrams with the right magic and version.
    pub fn decode(buf: &[u8]) -> Option<Self> {
        if buf.len() != ECHO_PACKET_LEN {
            return None;
        }
        if u32::from_be_bytes(buf[0..4].try_into().ok()?) != ECHO_MAGIC || buf[4] != ECHO_VERSION {
            return None;
        }
        Some(EchoPacket {
            session: u32::from_be_bytes(buf[5..9].try_into().ok()?),
            seq: u32::from_be_bytes(buf[9..13].try_into().ok()?),
            send_time_us: u64::from_be_bytes(buf[13..21].try_into().ok()?),
        })
    }
}

/// Result of one probe burst plus the send-schedule error of each probe.
#[derive(Debug, Clone, PartialEq)]
pub struct RttRun {
    pub summary: RttSummary,
    /// Actual minus scheduled send time, per probe, in milliseconds.
    pub send_lag_ms: Vec<f64>,
}

fn bind_for(addr: &SocketAddr) -> std::io::Result<UdpSocket> {
    match addr {
        SocketAddr::V4(_) => UdpSocket::bind("0.0.0.0:0"),
        SocketAddr::V6(_) => UdpSocket::bind("[::]:0"),
    }
}

fn is_transient(kind: ErrorKind) -> bool {
    matches!(kind, ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::ConnectionRefused | ErrorKind::Interrupted)
}

pub fn rtt_probe(cfg: &ProbeConfig) -> Result<RttSummary, ProbeError> {
    rtt_probe_detailed(cfg).map(|r| r.summary)
}

/// Sends `rtt_count` probes on a fixed schedule and matches replies by
/// (session, seq). Late replies count as lost; duplicates are ignored.
pub fn rtt_probe_detailed(cfg: &ProbeConfig) -> Result<RttRun, ProbeError> {
    cfg.validate()?;
    let addr = cfg.resolve(cfg.rtt_port)?;
    let sock = bind_for(&addr)?;
    sock.connect(addr)?;

    let count = cfg.rtt_count as usize;
    let interval = Duration::from_millis(cfg.rtt_interval_ms);
    let timeout = Duration::from_millis(cfg.rtt_timeout_ms);
    // fresh per-process random keys, no extra RNG needed
    let session = std::collections::hash_map::RandomState::new().build_hasher().finish() as u32;
    let t0 = Instant::now();
    let end = t0 + interval * (cfg.rtt_count - 1) + timeout;

    let mut sent_at: Vec<Option<Instant>> = vec![None; count];
    let mut rtt_ms: Vec<Option<f64>> = vec![None; count];
    let mut send_lag_ms = Vec::with_capacity(count);
    let mut next = 0usize;
    let mut buf = [0u8; 512];

    loop {
        let now = Instant::now();
        if next < count && now >= t0 + interval * next as u32 {
            let pkt = EchoPacket { session, seq: next as u32, send_time_us: now.duration_since(t0).as_micros() as u64 };
            let scheduled = t0 + interval * next as u32;
            send_lag_ms.push(now.duration_since(scheduled).as_secs_f64() * 1000.0);
            match sock.send(&pkt.encode()) {
                Ok(_) => sent_at[next] = Some(now),
                Err(e) if is_transient(e.kind()) => log::debug!("probe {next} not sent: {e}"),
                Err(e) => return Err(e.into()),
            }
            next += 1;
            continue;
        }
        let done = next == count && rtt_ms.iter().zip(&sent_at).all(|(r, s)| r.is_some() || s.is_none());
        if now >= end || done {
            break;
        }
        let wake = if next < count { (t0 + interval * next as u32).min(end) } else { end };
        let wait = wake.saturating_duration_since(now).max(Duration::from_millis(1));
        sock.set_read_timeout(Some(wait))?;
        match sock.recv(&mut buf) {
            Ok(n) => {
                let at = Instant::now();
                let Some(pkt) = EchoPacket::decode(&buf[..n]) else { continue };
                let seq = pkt.seq as usize;
                if pkt.session != session || seq >= count || rtt_ms[seq].is_some() {
                    continue;
                }
                if let Some(sent) = sent_at[seq] {
                    let rtt = at.duration_since(sent);
                    if rtt <= timeout {
                        rtt_ms[seq] = Some(rtt.as_secs_f64() * 1000.0);
                    }
                }
            }
            Err(e) if is_transient(e.kind()) => {}
            Err(e) => return Err(e.into()),
        }
    }

    let received: Vec<f64> = rtt_ms.into_iter().flatten().collect();
    Ok(RttRun { summary: RttSummary::from_samples(cfg.rtt_count, &received), send_lag_ms })
}

//! Single-stream bulk transfer over TCP.
//!
//! The client opens a connection and sends one JSON control line:
//! `{"dir":"UL"|"DL","duration_s":N,"block_bytes":N}` (optionally
//! `"rate_mbps"` to throttle a DL sender). The server answers `{"ok":true}`
//! or `{"error":"..."}`. Then the sender streams zero-filled blocks for the
//! duration and the side that did not send reports
//! `{"bytes":N,"duration_s":X}`:
//!
//! * UL: the client half-closes after streaming; the server counts bytes
//!   to EOF and replies with the result line.
//! * DL: the server streams, appends its own result line, and closes. The
//!   payload never contains `{`, so the client splits the trailer off the
//!   tail of the stream.
//!
//! Goodput is the receiver's byte count over the sender's active duration.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::throttle::TokenBucket;
use super::{ProbeConfig, ProbeError};

const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);
const MAX_CONTROL_LINE: u64 = 1024;
const TRAILER_WINDOW: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "UL")]
    Ul,
    #[serde(rename = "DL")]
    Dl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlHeader {
    pub dir: Direction,
    pub duration_s: u32,
    pub block_bytes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mbps: Option<f64>,
}

impl ControlHeader {
    pub fn validate(&self) -> Result<(), String> {
        if self.duration_s == 0 {
            return Err("duration_s must be positive".into());
        }
        if self.block_bytes == 0 || self.block_bytes > 16 << 20 {
            return Err("block_bytes must be in 1..=16777216".into());
        }
        if let Some(r) = self.rate_mbps {
            if !(r > 0.0 && r.is_finite()) {
                return Err("rate_mbps must be positive".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub bytes: u64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum Ack {
    Ok { ok: bool },
    Error { error: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputResult {
    pub direction: Direction,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub sender_duration_s: f64,
    pub mbps: f64,
}

pub(crate) fn read_control_line(r: &mut impl BufRead) -> std::io::Result<String> {
    let mut line = String::new();
    r.take(MAX_CONTROL_LINE).read_line(&mut line)?;
    Ok(line)
}

pub(crate) fn write_json_line(w: &mut impl Write, v: &impl Serialize) -> std::io::Result<()> {
    let mut s = serde_json::to_string(v).expect("control messages serialize");
    s.push('\n');
    w.write_all(s.as_bytes())?;
    w.flush()
}

/// Streams zero-filled blocks for `duration`. On failure returns the bytes
/// written so far with the error.
pub(crate) fn stream_blocks(
    w: &mut impl Write,
    duration: Duration,
    block_bytes: usize,
    rate_mbps: Option<f64>,
) -> Result<TransferResult, (u64, std::io::Error)> {
    let block = vec![0u8; block_bytes];
    let mut bucket = rate_mbps.map(TokenBucket::new);
    let start = Instant::now();
    let mut sent = 0u64;
    while start.elapsed() < duration {
        if let Some(b) = bucket.as_mut() {
            b.acquire(block_bytes);
            if start.elapsed() >= duration {
                break;
            }
        }
        w.write_all(&block).map_err(|e| (sent, e))?;
        sent += block_bytes as u64;
    }
    w.flush().map_err(|e| (sent, e))?;
    Ok(TransferResult { bytes: sent, duration_s: start.elapsed().as_secs_f64() })
}

/// Counts bytes until EOF, returning the count and the elapsed time
/// between the first byte and EOF.
pub(crate) fn drain(r: &mut impl Read) -> std::io::Result<TransferResult> {
    let mut buf = vec![0u8; 64 * 1024];
    let mut bytes = 0u64;
    let mut first: Option<Instant> = None;
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        first.get_or_insert_with(Instant::now);
        bytes += n as u64;
    }
    Ok(TransferResult { bytes, duration_s: first.map_or(0.0, |t| t.elapsed().as_secs_f64()) })
}

fn mbps(bytes: u64, secs: f64) -> f64 {
    if secs <= 0.0 {
        0.0
    } else {
        bytes as f64 * 8.0 / secs / 1e6
    }
}

/// Runs one throughput test in the given direction.
pub fn throughput_test(cfg: &ProbeConfig, direction: Direction) -> Result<ThroughputResult, ProbeError> {
    cfg.validate()?;
    let header = ControlHeader {
        dir: direction,
        duration_s: cfg.tp_duration_s,
        block_bytes: cfg.tp_block_bytes,
        rate_mbps: match direction {
            Direction::Dl => cfg.throttle_mbps,
            Direction::Ul => None,
        },
    };
    header.validate().map_err(ProbeError::Config)?;
    let addr = cfg.resolve(cfg.tp_port)?;
    let mut stream = TcpStream::connect_timeout(&addr, HANDSHAKE_TIMEOUT)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(HANDSHAKE_TIMEOUT))?;
    write_json_line(&mut stream, &header).map_err(|e| ProbeError::Handshake(e.to_string()))?;

    let mut reader = BufReader::new(stream.try_clone()?);
    let ack = read_control_line(&mut reader).map_err(|e| ProbeError::Handshake(e.to_string()))?;
    match serde_json::from_str::<Ack>(ack.trim_end()) {
        Ok(Ack::Ok { ok: true }) => {}
        Ok(Ack::Error { error }) => return Err(ProbeError::Handshake(error)),
        _ => return Err(ProbeError::Handshake(format!("unexpected reply {ack:?}"))),
    }

    let duration = Duration::from_secs(u64::from(cfg.tp_duration_s));
    let settle = duration + HANDSHAKE_TIMEOUT;
    match direction {
        Direction::Ul => {
            let sent = stream_blocks(&mut stream, duration, cfg.tp_block_bytes, cfg.throttle_mbps).map_err(
                |(bytes_so_far, e)| ProbeError::PartialTransfer { bytes_so_far, reason: e.to_string() },
            )?;
            stream.shutdown(Shutdown::Write)?;
            stream.set_read_timeout(Some(settle))?;
            let line = read_control_line(&mut reader).map_err(|e| ProbeError::PartialTransfer {
                bytes_so_far: sent.bytes,
                reason: e.to_string(),
            })?;
            let result: TransferResult = serde_json::from_str(line.trim_end()).map_err(|_| {
                ProbeError::PartialTransfer { bytes_so_far: sent.bytes, reason: format!("no result line: {line:?}") }
            })?;
            Ok(ThroughputResult {
                direction,
                bytes_sent: sent.bytes,
                bytes_received: result.bytes,
                sender_duration_s: sent.duration_s,
                mbps: mbps(result.bytes, sent.duration_s),
            })
        }
        Direction::Dl => {
            stream.set_read_timeout(Some(settle))?;
            let mut buf = vec![0u8; 64 * 1024];
            let mut total = 0u64;
            let mut tail: Vec<u8> = Vec::with_capacity(2 * TRAILER_WINDOW);
            loop {
                let n = match reader.read(&mut buf) {
                    Ok(n) => n,
                    Err(e) => {
                        return Err(ProbeError::PartialTransfer { bytes_so_far: total, reason: e.to_string() })
                    }
                };
                if n == 0 {
                    break;
                }
                total += n as u64;
                tail.extend_from_slice(&buf[n.saturating_sub(TRAILER_WINDOW)..n]);
                if tail.len() > TRAILER_WINDOW {
                    tail.drain(..tail.len() - TRAILER_WINDOW);
                }
            }
            let trailer = tail.iter().rposition(|&b| b == b'{').map(|i| &tail[i..]);
            let parsed = trailer
                .filter(|t| t.ends_with(b"\n"))
                .and_then(|t| serde_json::from_slice::<TransferResult>(t).ok().map(|r| (r, t.len() as u64)));
            let Some((sender, trailer_len)) = parsed else {
                return Err(ProbeError::PartialTransfer {
                    bytes_so_far: total,
                    reason: "stream ended without a result line".into(),
                });
            };
            let received = total - trailer_len;
            Ok(ThroughputResult {
                direction,
                bytes_sent: sender.bytes,
                bytes_received: received,
                sender_duration_s: sender.duration_s,
                mbps: mbps(received, sender.duration_s),
            })
        }
    }
}

//! End-to-end probing against a dedicated measurement server: datagram
//! echo for round-trip time and a single-stream TCP bulk transfer for
//! uplink/downlink goodput.

mod echo;
mod server;
mod throttle;
mod throughput;

use std::net::{SocketAddr, ToSocketAddrs};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collector::{E2eEngine, E2eOutcome};
use crate::record::GeoPosition;

pub use echo::{rtt_probe, rtt_probe_detailed, EchoPacket, RttRun, ECHO_MAGIC, ECHO_PACKET_LEN, ECHO_VERSION};
pub use server::{run_server, ServerHandle};
pub use throttle::TokenBucket;
pub use throughput::{throughput_test, ControlHeader, Direction, TransferResult, ThroughputResult};

pub const DEFAULT_RTT_PORT: u16 = 7701;
pub const DEFAULT_TP_PORT: u16 = 7702;

fn default_rtt_port() -> u16 {
    DEFAULT_RTT_PORT
}
fn default_tp_port() -> u16 {
    DEFAULT_TP_PORT
}
fn default_rtt_count() -> u32 {
    20
}
fn default_rtt_interval() -> u64 {
    200
}
fn default_rtt_timeout() -> u64 {
    1000
}
fn default_tp_duration() -> u32 {
    5
}
fn default_block() -> usize {
    65536
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub server_host: String,
    #[serde(default = "default_rtt_port")]
    pub rtt_port: u16,
    #[serde(default = "default_tp_port")]
    pub tp_port: u16,
    #[serde(default = "default_rtt_count")]
    pub rtt_count: u32,
    #[serde(default = "default_rtt_interval")]
    pub rtt_interval_ms: u64,
    #[serde(default = "default_rtt_timeout")]
    pub rtt_timeout_ms: u64,
    #[serde(default = "default_tp_duration")]
    pub tp_duration_s: u32,
    #[serde(default = "default_block")]
    pub tp_block_bytes: usize,
    /// Sender-side rate limit. Exists to give throughput tests a known
    /// ground truth; leave unset for real measurements.
    #[serde(default)]
    pub throttle_mbps: Option<f64>,
}

impl ProbeConfig {
    pub fn new(server_host: impl Into<String>) -> Self {
        ProbeConfig {
            server_host: server_host.into(),
            rtt_port: DEFAULT_RTT_PORT,
            tp_port: DEFAULT_TP_PORT,
            rtt_count: default_rtt_count(),
            rtt_interval_ms: default_rtt_interval(),
            rtt_timeout_ms: default_rtt_timeout(),
            tp_duration_s: default_tp_duration(),
            tp_block_bytes: default_block(),
            throttle_mbps: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: &str| Err(ProbeError::Config(m.to_string()));
        if self.rtt_count == 0 {
            return bad("rtt_count must be positive");
        }
        if self.rtt_interval_ms == 0 || self.rtt_timeout_ms == 0 {
            return bad("rtt_interval_ms and rtt_timeout_ms must be positive");
        }
        if self.rtt_timeout_ms < self.rtt_interval_ms {
            return bad("rtt_timeout_ms must be >= rtt_interval_ms");
        }
        if self.tp_duration_s == 0 {
            return bad("tp_duration_s must be positive");
        }
        if self.tp_block_bytes == 0 {
            return bad("tp_block_bytes must be positive");
        }
        if let Some(r) = self.throttle_mbps {
            if !(r > 0.0 && r.is_finite()) {
                return bad("throttle_mbps must be positive");
            }
        }
        Ok(())
    }

    pub(crate) fn resolve(&self, port: u16) -> Result<SocketAddr, ProbeError> {
        (self.server_host.as_str(), port)
            .to_socket_addrs()
            .map_err(|e| ProbeError::Resolve(format!("{}: {e}", self.server_host)))?
            .next()
            .ok_or_else(|| ProbeError::Resolve(format!("{}: no address", self.server_host)))
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid probe configuration: {0}")]
    Config(String),
    #[error("cannot resolve {0}")]
    Resolve(String),
    #[error("socket error: {0}")]
    Socket(#[from] std::io::Error),
    #[error("control handshake failed: {0}")]
    Handshake(String),
    #[error("transfer interrupted after {bytes_so_far} bytes: {reason}")]
    PartialTransfer { bytes_so_far: u64, reason: String },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}

/// End-to-end engine that measures against a live server.
#[derive(Debug, Clone)]
pub struct NetworkE2eEngine {
    pub cfg: ProbeConfig,
}

impl E2eEngine for NetworkE2eEngine {
    fn run(&mut self, _pos: &GeoPosition, _ts: i64) -> Result<E2eOutcome, String> {
        let rtt = rtt_probe(&self.cfg).map_err(|e| e.to_string())?;
        let ul = throughput_test(&self.cfg, Direction::Ul).map_err(|e| e.to_string())?;
        let dl = throughput_test(&self.cfg, Direction::Dl).map_err(|e| e.to_string())?;
        Ok(E2eOutcome { rtt, dl_mbps: dl.mbps, ul_mbps: ul.mbps, duration_s: f64::from(self.cfg.tp_duration_s) })
    }
}

use std::sync::Arc;

use super::{radio_sample, synth_e2e, synth_rtt_summary, RadioEnvironment};
use crate::collector::{E2eEngine, E2eOutcome};
use crate::modem::{ModemBackend, ModemReport, PollError};
use crate::record::{GeoPosition, Source};

/// Modem backend that samples the simulated radio field at the position
/// last set by the collector.
#[derive(Debug, Clone)]
pub struct SimBackend {
    env: Arc<RadioEnvironment>,
    pos: Option<GeoPosition>,
}

impl SimBackend {
    pub fn new(env: Arc<RadioEnvironment>) -> Self {
        SimBackend { env, pos: None }
    }
}

impl ModemBackend for SimBackend {
    fn descriptor(&self) -> Source {
        Source::Sim
    }

    fn set_position(&mut self, pos: &GeoPosition) {
        self.pos = Some(*pos);
    }

    fn poll(&mut self) -> Result<ModemReport, PollError> {
        let pos = self.pos.ok_or_else(|| PollError::Unavailable("no position set".into()))?;
        Ok(radio_sample(&self.env, &pos).to_report())
    }
}

/// End-to-end engine driven by the simulated SINR at the test position.
#[derive(Debug, Clone)]
pub struct SimE2eEngine {
    env: Arc<RadioEnvironment>,
    rtt_count: u32,
    duration_s: f64,
}

impl SimE2eEngine {
    pub fn new(env: Arc<RadioEnvironment>, rtt_count: u32, duration_s: f64) -> Self {
        SimE2eEngine { env, rtt_count, duration_s }
    }
}

impl E2eEngine for SimE2eEngine {
    fn run(&mut self, pos: &GeoPosition, ts_unix_ms: i64) -> Result<E2eOutcome, String> {
        let sinr = radio_sample(&self.env, pos).sinr_db;
        let key = ts_unix_ms as u64;
        let rates = synth_e2e(&self.env, sinr, key);
        Ok(E2eOutcome {
            rtt: synth_rtt_summary(&self.env, sinr, key, self.rtt_count),
            dl_mbps: rates.dl_mbps,
            ul_mbps: rates.ul_mbps,
            duration_s: self.duration_s,
        })
    }
}

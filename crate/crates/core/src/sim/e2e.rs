use super::propagation::{hash_words, unit_uniform};
use super::RadioEnvironment;
use crate::record::RttSummary;

const TAG_JITTER: u64 = 0x4a49_5454;

/// Device rate caps (LTE FDD category limits).
pub const DL_CAP_MBPS: f64 = 150.0;
pub const UL_CAP_MBPS: f64 = 50.0;

const CARRIER_MHZ: f64 = 10.0;
const MAX_SPECTRAL_EFFICIENCY: f64 = 6.0;
const DL_UTILIZATION: f64 = 0.6;
const UL_UTILIZATION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E2eSample {
    pub dl_mbps: f64,
    pub ul_mbps: f64,
    pub rtt_ms: f64,
}

fn spectral_efficiency(sinr_db: f64) -> f64 {
    let s = (1.0 + 10f64.powf(sinr_db / 10.0)).log2();
    if s.is_nan() {
        0.0
    } else {
        s.min(MAX_SPECTRAL_EFFICIENCY)
    }
}

fn base_rtt_ms(dl_mbps: f64) -> f64 {
    40.0 + 2000.0 / dl_mbps.max(0.5)
}

fn jitter_ms(env: &RadioEnvironment, key: u64, probe: u64) -> f64 {
    20.0 * unit_uniform(hash_words(&[env.seed, TAG_JITTER, key, probe]))
}

/// Maps SINR to goodput and round-trip time. `key` selects the jitter draw
/// (the collector uses the test timestamp).
pub fn synth_e2e(env: &RadioEnvironment, sinr_db: f64, key: u64) -> E2eSample {
    let s = spectral_efficiency(sinr_db);
    let dl_mbps = (CARRIER_MHZ * s * DL_UTILIZATION).min(DL_CAP_MBPS);
    let ul_mbps = (CARRIER_MHZ * s * UL_UTILIZATION).min(UL_CAP_MBPS);
    let rtt_ms = base_rtt_ms(dl_mbps) + jitter_ms(env, key, 0);
    E2eSample { dl_mbps, ul_mbps, rtt_ms }
}

/// A simulated probe burst: `count` probes, each with its own jitter draw.
pub fn synth_rtt_summary(env: &RadioEnvironment, sinr_db: f64, key: u64, count: u32) -> RttSummary {
    let base = synth_e2e(env, sinr_db, key);
    let rtts: Vec<f64> = (0..u64::from(count))
        .map(|i| base.rtt_ms - jitter_ms(env, key, 0) + jitter_ms(env, key, i))
        .collect();
    RttSummary::from_samples(count, &rtts)
}

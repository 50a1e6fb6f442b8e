//! Ready-made collection runs: the simulator driven by a virtual clock, and
//! replay of a recorded trace through the collector.

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::collector::{run_collection, CollectError, CollectorConfig, PlanPositions, RunControl, RunSummary, SimClock, TracePositions};
use crate::modem::ReplayBackend;
use crate::record::{read_trace_file, DecodeError, MeasurementRecord};
use crate::sim::{FlightPlan, RadioEnvironment, SimBackend, SimE2eEngine, SimError};

/// Virtual take-off time of simulated runs (2023-11-14T22:13:20Z).
pub const SIM_EPOCH_MS: i64 = 1_700_000_000_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("trace {0} is empty")]
    EmptyTrace(String),
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub duration_s: f64,
    /// Replaces the environment seed when set.
    pub seed: Option<u64>,
    pub rtt_count: u32,
    pub tp_duration_s: f64,
    pub collector: CollectorConfig,
}

impl SimulateOptions {
    pub fn new(duration_s: f64, output_dir: impl Into<std::path::PathBuf>) -> Self {
        SimulateOptions {
            duration_s,
            seed: None,
            rtt_count: 20,
            tp_duration_s: 5.0,
            collector: CollectorConfig { output_dir: output_dir.into(), ..CollectorConfig::default() },
        }
    }
}

/// Flies `plan` through `env` on a virtual clock and writes RAN and
/// end-to-end traces. Output depends only on the inputs and the seed.
pub fn simulate(env: &RadioEnvironment, plan: &FlightPlan, opts: &SimulateOptions) -> Result<RunSummary, PipelineError> {
    let mut env = env.clone();
    if let Some(seed) = opts.seed {
        env.seed = seed;
    }
    env.validate()?;
    let env = Arc::new(env);
    let mut cfg = opts.collector.clone();
    cfg.run_id.get_or_insert_with(|| format!("sim-{}", env.seed));
    let e2e = (cfg.e2e_interval_s > 0).then(|| {
        Box::new(SimE2eEngine::new(env.clone(), opts.rtt_count, opts.tp_duration_s)) as Box<dyn crate::collector::E2eEngine>
    });
    let summary = run_collection(
        &cfg,
        Arc::new(SimClock::new(SIM_EPOCH_MS)),
        Box::new(SimBackend::new(env)),
        Arc::new(PlanPositions { plan: plan.clone(), start_ms: SIM_EPOCH_MS }),
        e2e,
        &RunControl::for_duration_s(opts.duration_s),
    )?;
    Ok(summary)
}

/// Most common spacing between consecutive records, or 1000 ms for a
/// single record.
pub fn trace_interval_ms(records: &[MeasurementRecord]) -> u64 {
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for w in records.windows(2) {
        *counts.entry(w[1].ts_unix_ms - w[0].ts_unix_ms).or_default() += 1;
    }
    counts.into_iter().max_by_key(|&(gap, n)| (n, -gap)).map_or(1000, |(gap, _)| gap.max(1) as u64)
}

/// Feeds recorded reports back through the collector with the recorded
/// positions. The tick schedule starts at the first record and uses the
/// trace's dominant spacing, so a gap-free trace is reproduced exactly
/// apart from `source`. End-to-end tests are not replayed.
pub fn replay_records(records: &[MeasurementRecord], cfg: &CollectorConfig) -> Result<RunSummary, PipelineError> {
    let first = records.first().ok_or_else(|| PipelineError::EmptyTrace("<records>".into()))?;
    let mut cfg = cfg.clone();
    cfg.sample_interval_ms = trace_interval_ms(records);
    cfg.e2e_interval_s = 0;
    cfg.run_id.get_or_insert_with(|| format!("replay-{}", first.ts_unix_ms));
    Ok(run_collection(
        &cfg,
        Arc::new(SimClock::new(first.ts_unix_ms)),
        Box::new(ReplayBackend::from_records(records)),
        Arc::new(TracePositions::from_records(records)),
        None,
        &RunControl::default(),
    )?)
}

pub fn replay_file(path: &Path, cfg: &CollectorConfig) -> Result<RunSummary, PipelineError> {
    let records: Vec<MeasurementRecord> = read_trace_file(path)?;
    if records.is_empty() {
        return Err(PipelineError::EmptyTrace(path.display().to_string()));
    }
    replay_records(&records, cfg)
}

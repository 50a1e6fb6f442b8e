//! The sampling daemon: polls a modem backend and a position source on a
//! fixed absolute schedule, assembles validated records, and appends them
//! to rotating trace files.
//!
//! Three tasks cooperate: the RAN poller, the end-to-end runner, and a
//! single writer that owns every file handle. Both producers feed the
//! writer through one ordered channel. End-to-end tests run on their own
//! thread so a multi-second throughput test never delays a RAN tick.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modem::{ModemBackend, ModemReport, PollError};
use crate::record::{
    encode_record, validate_e2e, validate_record, EndToEndRecord, GeoPosition, MeasurementRecord, RttSummary,
    Source, TraceRecord, Violation,
};
use crate::sim::{flight_position, FlightPlan};

/// Injected time source. Timestamps are UTC milliseconds.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> i64;

    /// Blocks until `deadline_ms` and returns the time of wake-up.
    fn wait_until(&self, deadline_ms: i64) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> i64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
    }

    fn wait_until(&self, deadline_ms: i64) -> i64 {
        let now = self.now_ms();
        if deadline_ms > now {
            std::thread::sleep(Duration::from_millis((deadline_ms - now) as u64));
        }
        self.now_ms()
    }
}

/// Virtual clock: waiting returns immediately at exactly the deadline.
#[derive(Debug)]
pub struct SimClock {
    latest_ms: AtomicI64,
}

impl SimClock {
    pub fn new(start_ms: i64) -> Self {
        SimClock { latest_ms: AtomicI64::new(start_ms) }
    }
}

impl Clock for SimClock {
    fn now_ms(&self) -> i64 {
        self.latest_ms.load(Ordering::SeqCst)
    }

    fn wait_until(&self, deadline_ms: i64) -> i64 {
        self.latest_ms.fetch_max(deadline_ms, Ordering::SeqCst);
        deadline_ms
    }
}

/// Where the airframe is at a given time. `None` means no fix.
pub trait PositionSource: Send + Sync {
    fn position_at(&self, ts_unix_ms: i64) -> Option<GeoPosition>;
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPosition(pub GeoPosition);

impl PositionSource for FixedPosition {
    fn position_at(&self, _ts: i64) -> Option<GeoPosition> {
        Some(self.0)
    }
}

/// Follows a flight plan that takes off at `start_ms`.
#[derive(Debug, Clone)]
pub struct PlanPositions {
    pub plan: FlightPlan,
    pub start_ms: i64,
}

impl PositionSource for PlanPositions {
    fn position_at(&self, ts: i64) -> Option<GeoPosition> {
        Some(flight_position(&self.plan, (ts - self.start_ms) as f64 / 1000.0))
    }
}

/// Positions recorded in a trace: the latest fix at or before the query time.
#[derive(Debug, Clone)]
pub struct TracePositions {
    fixes: Vec<(i64, GeoPosition)>,
}

impl TracePositions {
    pub fn from_records(records: &[MeasurementRecord]) -> Self {
        TracePositions { fixes: records.iter().map(|r| (r.ts_unix_ms, r.pos)).collect() }
    }
}

impl PositionSource for TracePositions {
    fn position_at(&self, ts: i64) -> Option<GeoPosition> {
        let i = self.fixes.partition_point(|(t, _)| *t <= ts);
        i.checked_sub(1).map(|i| self.fixes[i].1)
    }
}

/// Contract for a GNSS receiver; no driver ships with this crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct HwPositions;

impl PositionSource for HwPositions {
    fn position_at(&self, _ts: i64) -> Option<GeoPosition> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2eOutcome {
    pub rtt: RttSummary,
    pub dl_mbps: f64,
    pub ul_mbps: f64,
    pub duration_s: f64,
}

/// Runs one end-to-end test (RTT burst plus UL and DL throughput).
pub trait E2eEngine: Send {
    fn run(&mut self, pos: &GeoPosition, ts_unix_ms: i64) -> Result<E2eOutcome, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sim,
    Replay,
    Hw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionSpec {
    /// Flight plan file (waypoints) followed by the simulated airframe.
    Plan(PathBuf),
    Fixed(GeoPosition),
    Hw,
}

fn default_interval_ms() -> u64 {
    1000
}
fn default_e2e_interval() -> u64 {
    60
}
fn default_max_records() -> usize {
    100_000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("traces")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectorConfig {
    #[serde(default = "default_interval_ms")]
    pub sample_interval_ms: u64,
    /// 0 disables end-to-end tests.
    #[serde(default = "default_e2e_interval")]
    pub e2e_interval_s: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_max_records")]
    pub max_file_records: usize,
    #[serde(default)]
    pub backend: Option<BackendKind>,
    #[serde(default)]
    pub position_source: Option<PositionSpec>,
    /// File name prefix; derived from the start time when absent.
    #[serde(default)]
    pub run_id: Option<String>,
}

impl Default for CollectorConfig {
    fn default() -> Self {
        CollectorConfig {
            sample_interval_ms: default_interval_ms(),
            e2e_interval_s: default_e2e_interval(),
            output_dir: default_output_dir(),
            max_file_records: default_max_records(),
            backend: None,
            position_source: None,
            run_id: None,
        }
    }
}

impl CollectorConfig {
    pub fn validate(&self) -> Result<(), CollectError> {
        if self.sample_interval_ms < 100 {
            return Err(CollectError::Config(format!(
                "sample_interval_ms must be >= 100, got {}",
                self.sample_interval_ms
            )));
        }
        if self.max_file_records == 0 {
            return Err(CollectError::Config("max_file_records must be >= 1".into()));
        }
        Ok(())
    }
}

/// Stop conditions for a run: a virtual duration, an external flag, or
/// backend exhaustion, whichever comes first.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    pub duration_ms: Option<u64>,
    pub stop: Arc<AtomicBool>,
}

impl RunControl {
    pub fn for_duration_s(seconds: f64) -> Self {
        RunControl { duration_ms: Some((seconds * 1000.0).round() as u64), stop: Arc::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub polls_attempted: u64,
    pub records_written: u64,
    pub polls_failed: u64,
    pub e2e_tests_run: u64,
    pub e2e_failed: u64,
    pub start_ts_ms: i64,
    pub end_ts_ms: i64,
    pub ran_files: Vec<PathBuf>,
    pub e2e_files: Vec<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("invalid collector configuration: {0}")]
    Config(String),
    #[error("output {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

/// Builds a record from a modem report and the position/time of the poll.
pub fn assemble_record(
    report: ModemReport,
    pos: GeoPosition,
    ts_unix_ms: i64,
    source: Source,
) -> Result<MeasurementRecord, Violation> {
    let rec = MeasurementRecord { ts_unix_ms, pos, serving: report.serving, neighbors: report.neighbors, source };
    validate_record(&rec)?;
    Ok(rec)
}

/// Appends trace lines to `<prefix>-<seq>.trace`, starting a new file
/// every `max_records` records.
pub struct RotatingWriter {
    dir: PathBuf,
    prefix: String,
    max_records: usize,
    in_file: usize,
    current: Option<BufWriter<File>>,
    files: Vec<PathBuf>,
}

impl RotatingWriter {
    pub fn new(dir: impl Into<PathBuf>, prefix: impl Into<String>, max_records: usize) -> Self {
        RotatingWriter {
            dir: dir.into(),
            prefix: prefix.into(),
            max_records: max_records.max(1),
            in_file: 0,
            current: None,
            files: Vec::new(),
        }
    }

    fn io_err(&self, source: std::io::Error) -> CollectError {
        let path = self.files.last().cloned().unwrap_or_else(|| self.dir.clone());
        CollectError::Output { path, source }
    }

    /// Closes the current file and opens the next one in sequence.
    pub fn rotate_output(&mut self) -> Result<&Path, CollectError> {
        if let Some(mut w) = self.current.take() {
            w.flush().map_err(|e| self.io_err(e))?;
        }
        let path = self.dir.join(format!("{}-{:04}.trace", self.prefix, self.files.len()));
        let file = File::create(&path).map_err(|source| CollectError::Output { path: path.clone(), source })?;
        self.current = Some(BufWriter::new(file));
        self.files.push(path);
        self.in_file = 0;
        Ok(self.files.last().expect("just pushed"))
    }

    pub fn write_line(&mut self, line: &str) -> Result<(), CollectError> {
        if self.current.is_none() || self.in_file >= self.max_records {
            self.rotate_output()?;
        }
        let w = self.current.as_mut().expect("file open");
        let res = w.write_all(line.as_bytes()).and_then(|_| w.write_all(b"\n"));
        res.map_err(|e| self.io_err(e))?;
        self.in_file += 1;
        Ok(())
    }

    pub fn write_record<R: TraceRecord>(&mut self, rec: &R) -> Result<(), CollectError> {
        self.write_line(&encode_record(rec))
    }

    pub fn finish(mut self) -> Result<Vec<PathBuf>, CollectError> {
        if let Some(mut w) = self.current.take() {
            w.flush().map_err(|e| self.io_err(e))?;
        }
        Ok(self.files)
    }
}

enum Msg {
    Ran(MeasurementRecord),
    E2e(EndToEndRecord),
}

/// Progress of the RAN poller in clock time, so the end-to-end runner
/// never executes a test scheduled after the last RAN tick.
struct Progress {
    state: Mutex<(i64, bool)>,
    cv: Condvar,
}

impl Progress {
    fn advance(&self, t: i64) {
        let mut s = self.state.lock().expect("progress lock");
        s.0 = s.0.max(t);
        self.cv.notify_all();
    }

    fn finish(&self) {
        self.state.lock().expect("progress lock").1 = true;
        self.cv.notify_all();
    }

    /// True once the poller has reached `t`; false if it finished before.
    fn reached(&self, t: i64) -> bool {
        let mut s = self.state.lock().expect("progress lock");
        loop {
            if s.0 >= t {
                return true;
            }
            if s.1 {
                return false;
            }
            s = self.cv.wait(s).expect("progress lock");
        }
    }
}

#[derive(Default)]
struct PollCounts {
    attempted: u64,
    failed: u64,
}

fn tick_allowed(control: &RunControl, offset_ms: u64) -> bool {
    if control.stop.load(Ordering::SeqCst) {
        return false;
    }
    control.duration_ms.map_or(true, |d| offset_ms < d)
}

/// Runs a collection campaign until the duration elapses, the stop flag is
/// raised, or the backend is exhausted. Per-poll failures are counted and
/// skipped; only output errors abort the run.
pub fn run_collection(
    cfg: &CollectorConfig,
    clock: Arc<dyn Clock>,
    mut modem: Box<dyn ModemBackend>,
    positions: Arc<dyn PositionSource>,
    e2e: Option<Box<dyn E2eEngine>>,
    control: &RunControl,
) -> Result<RunSummary, CollectError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|source| CollectError::Output { path: cfg.output_dir.clone(), source })?;

    let start = clock.now_ms();
    let run_id = cfg.run_id.clone().unwrap_or_else(|| format!("run-{start}"));
    let source = modem.descriptor();
    let interval = cfg.sample_interval_ms;
    let progress = Progress { state: Mutex::new((i64::MIN, false)), cv: Condvar::new() };
    let (tx, rx) = mpsc::channel::<Msg>();

    let mut ran = RotatingWriter::new(&cfg.output_dir, run_id.clone(), cfg.max_file_records);
    let mut e2e_writer = RotatingWriter::new(&cfg.output_dir, format!("{run_id}-e2e"), cfg.max_file_records);

    let clock: &dyn Clock = &*clock;
    let positions: &dyn PositionSource = &*positions;
    let progress = &progress;

    let (counts, e2e_counts, written, write_result) = std::thread::scope(|scope| {
        let poller_tx = tx.clone();
        let poller = scope.spawn(move || {
            let tx = poller_tx;
            let mut counts = PollCounts::default();
            let mut n: u64 = 0;
            loop {
                let offset = n * interval;
                if !tick_allowed(control, offset) {
                    break;
                }
                let ts = clock.wait_until(start + offset as i64);
                n += 1;
                let Some(pos) = positions.position_at(ts) else {
                    counts.attempted += 1;
                    counts.failed += 1;
                    log::warn!("poll at {ts}: no position fix");
                    progress.advance(ts);
                    continue;
                };
                modem.set_position(&pos);
                let polled = modem.poll();
                if matches!(polled, Err(PollError::Exhausted)) {
                    break;
                }
                counts.attempted += 1;
                let rec = polled
                    .map_err(|e| e.to_string())
                    .and_then(|report| assemble_record(report, pos, ts, source).map_err(|v| v.to_string()));
                match rec {
                    Ok(rec) => {
                        if tx.send(Msg::Ran(rec)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        counts.failed += 1;
                        log::warn!("poll at {ts} skipped: {e}");
                    }
                }
                progress.advance(ts);
            }
            progress.finish();
            counts
        });

        let runner_tx = tx.clone();
        let runner = scope.spawn(move || {
            let mut run = 0u64;
            let mut failed = 0u64;
            let (Some(mut engine), true) = (e2e, cfg.e2e_interval_s > 0) else {
                return (run, failed);
            };
            let every = cfg.e2e_interval_s * 1000;
            let mut k: u64 = 0;
            loop {
                let offset = k * every;
                if !tick_allowed(control, offset) || !progress.reached(start + offset as i64) {
                    break;
                }
                let ts = clock.wait_until(start + offset as i64);
                k += 1;
                run += 1;
                let Some(pos) = positions.position_at(ts) else {
                    failed += 1;
                    continue;
                };
                let rec = engine.run(&pos, ts).and_then(|o| {
                    let rec = EndToEndRecord {
                        ts_unix_ms: ts,
                        pos,
                        rtt: o.rtt,
                        dl_mbps: o.dl_mbps,
                        ul_mbps: o.ul_mbps,
                        duration_s: o.duration_s,
                    };
                    validate_e2e(&rec).map(|_| rec).map_err(|v| v.to_string())
                });
                match rec {
                    Ok(rec) => {
                        if runner_tx.send(Msg::E2e(rec)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        failed += 1;
                        log::warn!("end-to-end test at {ts} failed: {e}");
                    }
                }
            }
            (run, failed)
        });
        drop(tx);

        let mut written = (0u64, 0u64);
        let mut write_result = Ok(());
        for msg in rx {
            let r = match &msg {
                Msg::Ran(rec) => ran.write_record(rec).map(|_| written.0 += 1),
                Msg::E2e(rec) => e2e_writer.write_record(rec).map(|_| written.1 += 1),
            };
            if let Err(e) = r {
                write_result = Err(e);
                control.stop.store(true, Ordering::SeqCst);
                break;
            }
        }
        let counts = poller.join().expect("poller thread panicked");
        let e2e_counts = runner.join().expect("end-to-end thread panicked");
        (counts, e2e_counts, written, write_result)
    });
    write_result?;

    let ran_files = ran.finish()?;
    let e2e_files = e2e_writer.finish()?;
    Ok(RunSummary {
        run_id,
        polls_attempted: counts.attempted,
        records_written: written.0,
        polls_failed: counts.failed,
        e2e_tests_run: e2e_counts.0,
        e2e_failed: e2e_counts.1,
        start_ts_ms: start,
        end_ts_ms: clock.now_ms(),
        ran_files,
        e2e_files,
    })
}

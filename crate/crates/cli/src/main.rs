use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use skylog_core::analysis::{analyze, grid_aggregate, write_csv_tables, AnalysisOptions, Metric, Thresholds};
use skylog_core::collector::{
    run_collection, BackendKind, Clock, CollectorConfig, E2eEngine, FixedPosition, HwPositions, PlanPositions,
    PositionSource, PositionSpec, RunControl, SimClock, SystemClock,
};
use skylog_core::export::{records_csv, records_geojson, voxels_csv, voxels_geojson};
use skylog_core::modem::HwBackend;
use skylog_core::pipeline::{replay_file, simulate, SimulateOptions};
use skylog_core::probe::{rtt_probe, run_server, throughput_test, Direction, NetworkE2eEngine, ProbeConfig};
use skylog_core::record::{encode_record, read_trace_file, validate_e2e, EndToEndRecord, GeoPosition, MeasurementRecord};
use skylog_core::sim::{load_plan, FlightPlan, RadioEnvironment, SimBackend, SimConfig, SimE2eEngine};

/// Geo-tagged LTE measurement logger, prober and coverage analyzer.
#[derive(Debug, Parser)]
#[command(name = "skylog", version)]
struct Cli {
    /// Log filter, e.g. warn, info, debug or skylog_core=trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    /// JSON config file. Optional sections "collector" and "probe"; a
    /// "stations" key makes it a radio environment as well.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the radio environment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Poll a modem backend at a fixed cadence and write traces.
    Collect(CollectArgs),
    /// Run the echo and throughput responders.
    Serve(ServeArgs),
    /// Run one end-to-end test and print it as a trace line.
    Probe(ProbeArgs),
    /// Fly a plan through the simulated radio environment.
    Simulate(SimulateArgs),
    /// Compute the coverage report and plotting tables.
    Analyze(AnalyzeArgs),
    /// Export records or voxel aggregates as GeoJSON or CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Sim,
    Replay,
    Hw,
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// Stop after this many seconds; runs until the backend is exhausted otherwise.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Flight plan followed by the simulated airframe.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Output directory for trace files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Radio environment for the sim backend (bundled three-cell environment by default).
    #[arg(long)]
    env: Option<PathBuf>,
    /// Trace to replay with --backend replay.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Measurement server for end-to-end tests with the replay or hw backend.
    #[arg(long)]
    server: Option<String>,
    /// Modem device for the hw backend.
    #[arg(long, default_value = "/dev/ttyUSB2")]
    device: String,
    /// Run the sim backend on a virtual clock instead of wall time.
    #[arg(long)]
    virtual_clock: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "0.0.0.0")]
    bind: IpAddr,
    #[arg(long, default_value_t = 7701)]
    rtt_port: u16,
    #[arg(long, default_value_t = 7702)]
    tp_port: u16,
    /// Stop after this many seconds; serves until killed otherwise.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long)]
    server: String,
    #[arg(long, default_value_t = 7701)]
    rtt_port: u16,
    #[arg(long, default_value_t = 7702)]
    tp_port: u16,
    /// Echo probes per RTT burst.
    #[arg(long, default_value_t = 20)]
    count: u32,
    /// Seconds per throughput direction.
    #[arg(long, default_value_t = 5)]
    tp_duration: u32,
    /// Cap the sender rate in Mbit/s.
    #[arg(long)]
    throttle: Option<f64>,
    /// Position tag as lat,lon,alt_amsl[,alt_agl].
    #[arg(long, default_value = "0,0,0")]
    position: String,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Radio environment file (bundled three-cell environment by default).
    #[arg(long)]
    env: Option<PathBuf>,
    /// Flight plan file; defaults to the waypoints in the environment file.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Simulated seconds; defaults to the plan duration.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, default_value = "traces")]
    out: PathBuf,
    #[arg(long)]
    interval_ms: Option<u64>,
    /// Seconds between end-to-end tests, 0 disables them.
    #[arg(long)]
    e2e_interval: Option<u64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// RAN trace files.
    #[arg(long, num_args = 1.., required = true)]
    ran: Vec<PathBuf>,
    /// End-to-end trace files.
    #[arg(long, num_args = 1..)]
    e2e: Vec<PathBuf>,
    /// Output report (JSON).
    #[arg(long)]
    report: PathBuf,
    /// Directory for CSV tables; defaults to `<report stem>-tables` next to the report.
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(long, default_value_t = -19.0, allow_negative_numbers = true)]
    rsrq_poor: f64,
    #[arg(long, default_value_t = 5.0)]
    tp_min: f64,
    #[arg(long, default_value_t = 150.0)]
    rtt_max: f64,
    #[arg(long, default_value_t = 10.0)]
    alt_bin: f64,
    /// Voxel size as ground_m,alt_m.
    #[arg(long, default_value = "25,10")]
    grid: String,
    /// Weight occupied voxels equally when computing the poor-RSRQ fraction.
    #[arg(long)]
    by_voxel: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Geojson,
    Csv,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, num_args = 1.., required = true)]
    ran: Vec<PathBuf>,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long, default_value = "rsrp")]
    metric: String,
    /// Aggregate into voxels of ground_m,alt_m before exporting.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Sections of the shared config file.
#[derive(Debug, Default)]
struct FileConfig {
    collector: Option<CollectorConfig>,
    probe: Option<ProbeConfig>,
    sim: Option<SimConfig>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    let section = |key: &str| value.get(key).cloned();
    let mut cfg = FileConfig::default();
    if let Some(v) = section("collector") {
        cfg.collector = Some(serde_json::from_value(v).with_context(|| format!("{}: collector", path.display()))?);
    }
    if let Some(v) = section("probe") {
        cfg.probe = Some(serde_json::from_value(v).with_context(|| format!("{}: probe", path.display()))?);
    }
    if value.get("stations").is_some() {
        cfg.sim = Some(SimConfig::parse(&path.display().to_string(), &text)?);
    }
    Ok(cfg)
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(',').with_context(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_position(s: &str) -> Result<GeoPosition> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?;
    let pos = match v[..] {
        [lat, lon, alt] => GeoPosition::new(lat, lon, alt, None),
        [lat, lon, alt, agl] => GeoPosition::new(lat, lon, alt, Some(agl)),
        _ => bail!("expected lat,lon,alt_amsl[,alt_agl], got {s:?}"),
    };
    pos.validate()?;
    Ok(pos)
}

fn read_traces<R: skylog_core::record::TraceRecord>(paths: &[PathBuf]) -> Result<Vec<R>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_trace_file::<R>(p).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(out)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

/// Environment from an explicit file, the config file, or the bundled
/// fixture, in that order.
fn sim_config(env: Option<&Path>, file: &FileConfig, seed: Option<u64>) -> Result<SimConfig> {
    let mut cfg = match (env, &file.sim) {
        (Some(p), _) => SimConfig::load(p)?,
        (None, Some(c)) => c.clone(),
        (None, None) => SimConfig::canonical(),
    };
    if let Some(seed) = seed {
        cfg.env.seed = seed;
    }
    Ok(cfg)
}

fn sim_inputs(env: Option<&Path>, plan: Option<&Path>, file: &FileConfig, seed: Option<u64>) -> Result<(RadioEnvironment, FlightPlan)> {
    let cfg = sim_config(env, file, seed)?;
    let plan = match plan {
        Some(p) => load_plan(p)?,
        None => cfg.plan().context("the environment has no waypoints; pass --plan")?,
    };
    Ok((cfg.env, plan))
}

fn cmd_simulate(args: SimulateArgs, file: &FileConfig, seed: Option<u64>) -> Result<()> {
    let (env, plan) = sim_inputs(args.env.as_deref(), args.plan.as_deref(), file, seed)?;
    let duration = args.duration.unwrap_or_else(|| plan.duration_s());
    let mut opts = SimulateOptions::new(duration, &args.out);
    if let Some(c) = &file.collector {
        opts.collector = CollectorConfig { output_dir: args.out.clone(), ..c.clone() };
    }
    if let Some(ms) = args.interval_ms {
        opts.collector.sample_interval_ms = ms;
    }
    if let Some(s) = args.e2e_interval {
        opts.collector.e2e_interval_s = s;
    }
    let summary = simulate(&env, &plan, &opts)?;
    print_json(&summary)
}

fn cmd_collect(args: CollectArgs, file: &FileConfig, seed: Option<u64>) -> Result<()> {
    let mut cfg = file.collector.clone().unwrap_or_default();
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(b) = args.backend {
        cfg.backend = Some(match b {
            BackendArg::Sim => BackendKind::Sim,
            BackendArg::Replay => BackendKind::Replay,
            BackendArg::Hw => BackendKind::Hw,
        });
    }
    if let Some(plan) = &args.plan {
        cfg.position_source = Some(PositionSpec::Plan(plan.clone()));
    }
    let probe_cfg = args.server.map(ProbeConfig::new).or_else(|| file.probe.clone());
    let network_e2e = || -> Option<Box<dyn E2eEngine>> {
        probe_cfg.clone().map(|cfg| Box::new(NetworkE2eEngine { cfg }) as Box<dyn E2eEngine>)
    };

    let summary = match cfg.backend.unwrap_or(BackendKind::Sim) {
        BackendKind::Replay => {
            let trace = args.trace.context("--backend replay needs --trace <file>")?;
            replay_file(&trace, &cfg)?
        }
        kind => {
            let clock: Arc<dyn Clock> = if args.virtual_clock {
                Arc::new(SimClock::new(skylog_core::pipeline::SIM_EPOCH_MS))
            } else {
                Arc::new(SystemClock)
            };
            let start = clock.now_ms();
            let positions: Arc<dyn PositionSource> = match &cfg.position_source {
                Some(PositionSpec::Plan(p)) => Arc::new(PlanPositions { plan: load_plan(p)?, start_ms: start }),
                Some(PositionSpec::Fixed(pos)) => Arc::new(FixedPosition(*pos)),
                Some(PositionSpec::Hw) => Arc::new(HwPositions),
                None if kind == BackendKind::Sim => {
                    let (_, plan) = sim_inputs(args.env.as_deref(), None, file, seed)?;
                    Arc::new(PlanPositions { plan, start_ms: start })
                }
                None => Arc::new(HwPositions),
            };
            let (modem, e2e): (Box<dyn skylog_core::modem::ModemBackend>, _) = if kind == BackendKind::Sim {
                let env = Arc::new(sim_config(args.env.as_deref(), file, seed)?.env);
                let e2e = network_e2e().or_else(|| Some(Box::new(SimE2eEngine::new(env.clone(), 20, 5.0)) as _));
                (Box::new(SimBackend::new(env)), e2e)
            } else {
                (Box::new(HwBackend { endpoint: args.device.clone() }), network_e2e())
            };
            let control = match args.duration {
                Some(d) => RunControl::for_duration_s(d),
                None if args.virtual_clock => bail!("--virtual-clock needs --duration"),
                None => RunControl::default(),
            };
            run_collection(&cfg, clock, modem, positions, e2e, &control)?
        }
    };
    print_json(&summary)?;
    if summary.records_written == 0 {
        bail!("no records were written ({} polls failed)", summary.polls_failed);
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let handle = run_server(args.bind, args.rtt_port, args.tp_port)?;
    println!("rtt {} tp {}", handle.rtt_addr, handle.tp_addr);
    if let Some(d) = args.duration {
        let stop = handle.stop_flag();
        std::thread::spawn(move || {
            std::thread::sleep(Duration::from_secs_f64(d));
            stop.store(true, Ordering::SeqCst);
        });
    }
    handle.wait();
    Ok(())
}

fn cmd_probe(args: ProbeArgs, file: &FileConfig) -> Result<()> {
    let mut cfg = file.probe.clone().unwrap_or_else(|| ProbeConfig::new(&args.server));
    cfg.server_host = args.server;
    cfg.rtt_port = args.rtt_port;
    cfg.tp_port = args.tp_port;
    cfg.rtt_count = args.count;
    cfg.tp_duration_s = args.tp_duration;
    cfg.throttle_mbps = args.throttle.or(cfg.throttle_mbps);
    cfg.validate()?;
    let pos = parse_position(&args.position)?;
    let ts_unix_ms = SystemClock.now_ms();
    let rtt = rtt_probe(&cfg)?;
    let ul = throughput_test(&cfg, Direction::Ul)?;
    let dl = throughput_test(&cfg, Direction::Dl)?;
    let rec = EndToEndRecord {
        ts_unix_ms,
        pos,
        rtt,
        dl_mbps: dl.mbps,
        ul_mbps: ul.mbps,
        duration_s: f64::from(cfg.tp_duration_s),
    };
    validate_e2e(&rec)?;
    println!("{}", encode_record(&rec));
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let (ground, alt) = parse_pair(&args.grid)?;
    let ran: Vec<MeasurementRecord> = read_traces(&args.ran)?;
    let e2e: Vec<EndToEndRecord> = read_traces(&args.e2e)?;
    let opts = AnalysisOptions {
        thresholds: Thresholds {
            rsrq_poor_db: args.rsrq_poor,
            tp_min_mbps: args.tp_min,
            rtt_max_ms: args.rtt_max,
            by_voxel: args.by_voxel,
            grid_ground_m: ground,
            grid_alt_m: alt,
        },
        alt_bin_m: args.alt_bin,
        ..AnalysisOptions::default()
    };
    let doc = analyze(&ran, &e2e, &opts)?;
    let mut w = BufWriter::new(File::create(&args.report).with_context(|| format!("creating {}", args.report.display()))?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    let tables = args.tables.unwrap_or_else(|| {
        let stem = args.report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
        args.report.with_file_name(format!("{stem}-tables"))
    });
    let written = write_csv_tables(&doc, &tables)?;
    log::info!("wrote {} and {} tables under {}", args.report.display(), written.len(), tables.display());
    print_json(&doc.report)
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let metric: Metric = args.metric.parse()?;
    let records: Vec<MeasurementRecord> = read_traces(&args.ran)?;
    let grid = args.grid.as_deref().map(parse_pair).transpose()?;
    let mut w = BufWriter::new(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?);
    let count = match (args.format, grid) {
        (Format::Geojson, None) => {
            serde_json::to_writer(&mut w, &records_geojson(&records, metric)?)?;
            records.len()
        }
        (Format::Csv, None) => {
            records_csv(&records, &mut w)?;
            records.len()
        }
        (format, Some((ground, alt))) => {
            let grid = grid_aggregate(&records, ground, alt)?;
            match format {
                Format::Geojson => serde_json::to_writer(&mut w, &voxels_geojson(&grid, metric)?)?,
                Format::Csv => voxels_csv(&grid, &mut w)?,
            }
            grid.voxels.len()
        }
    };
    w.flush()?;
    log::info!("exported {count} features from {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Collect(a) => cmd_collect(a, &file, cli.seed),
        Command::Serve(a) => cmd_serve(a),
        Command::Probe(a) => cmd_probe(a, &file),
        Command::Simulate(a) => cmd_simulate(a, &file, cli.seed),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Export(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp_millis().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

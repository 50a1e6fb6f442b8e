use std::fs;
use std::path::Path;

use skylog_core::analysis::{analyze, cell_dominance, neighbor_stats, AnalysisOptions};
use skylog_core::collector::CollectorConfig;
use skylog_core::export::{import_records_csv, records_csv, records_geojson};
use skylog_core::analysis::Metric;
use skylog_core::pipeline::{replay_records, simulate, SimulateOptions};
use skylog_core::record::{read_trace_file, EndToEndRecord, MeasurementRecord, Source};
use skylog_core::sim::SimConfig;

fn run(dir: &Path, duration_s: f64, seed: u64) -> skylog_core::collector::RunSummary {
    let cfg = SimConfig::canonical();
    let mut opts = SimulateOptions::new(duration_s, dir);
    opts.seed = Some(seed);
    simulate(&cfg.env, &cfg.plan().unwrap(), &opts).unwrap()
}

fn read_all<R: skylog_core::record::TraceRecord>(files: &[std::path::PathBuf]) -> Vec<R> {
    files.iter().flat_map(|f| read_trace_file::<R>(f).unwrap()).collect()
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run(a.path(), 600.0, 7);
    let sb = run(b.path(), 600.0, 7);
    assert_eq!(sa.ran_files.len(), sb.ran_files.len());
    for (fa, fb) in sa.ran_files.iter().chain(&sa.e2e_files).zip(sb.ran_files.iter().chain(&sb.e2e_files)) {
        assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap());
    }
    let c = tempfile::tempdir().unwrap();
    let sc = run(c.path(), 600.0, 8);
    assert_ne!(fs::read(&sa.ran_files[0]).unwrap(), fs::read(&sc.ran_files[0]).unwrap());
}

#[test]
fn cadence_of_ran_and_e2e_records() {
    let dir = tempfile::tempdir().unwrap();
    let s = run(dir.path(), 60.0, 7);
    let recs: Vec<MeasurementRecord> = read_all(&s.ran_files);
    assert_eq!(recs.len(), 60);
    assert!(recs.windows(2).all(|w| w[1].ts_unix_ms - w[0].ts_unix_ms == 1000));

    let dir = tempfile::tempdir().unwrap();
    let s = run(dir.path(), 600.0, 7);
    let e2e: Vec<EndToEndRecord> = read_all(&s.e2e_files);
    assert_eq!(e2e.len(), 10);
    assert_eq!(s.e2e_tests_run, 10);
}

#[test]
fn replay_reproduces_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let s = run(dir.path(), 60.0, 7);
    let original: Vec<MeasurementRecord> = read_all(&s.ran_files);
    let out = tempfile::tempdir().unwrap();
    let cfg = CollectorConfig { output_dir: out.path().to_path_buf(), ..CollectorConfig::default() };
    let r = replay_records(&original, &cfg).unwrap();
    assert_eq!(r.records_written, 60);
    let replayed: Vec<MeasurementRecord> = read_all(&r.ran_files);
    assert_eq!(replayed.len(), original.len());
    for (a, b) in original.iter().zip(&replayed) {
        assert_eq!(b.source, Source::Replay);
        assert_eq!(MeasurementRecord { source: a.source, ..b.clone() }, *a);
    }
}

#[test]
fn rotation_splits_without_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig::canonical();
    let mut opts = SimulateOptions::new(25.0, dir.path());
    opts.collector.max_file_records = 10;
    let s = simulate(&cfg.env, &cfg.plan().unwrap(), &opts).unwrap();
    let sizes: Vec<usize> =
        s.ran_files.iter().map(|f| read_trace_file::<MeasurementRecord>(f).unwrap().len()).collect();
    assert_eq!(sizes, vec![10, 10, 5]);
    let all: Vec<MeasurementRecord> = read_all(&s.ran_files);
    assert!(all.windows(2).all(|w| w[0].ts_unix_ms < w[1].ts_unix_ms));
}

#[test]
fn canonical_environment_shows_a_dominant_cell_and_a_usable_neighbor() {
    let dir = tempfile::tempdir().unwrap();
    let s = run(dir.path(), 450.0, 7);
    let recs: Vec<MeasurementRecord> = read_all(&s.ran_files);
    assert!(cell_dominance(&recs).unwrap().values().any(|&share| share > 0.5));
    assert!(neighbor_stats(&recs).unwrap().values().any(|n| n.rsrp.mean > -110.0));
}

#[test]
fn exports_preserve_counts() {
    let dir = tempfile::tempdir().unwrap();
    let s = run(dir.path(), 120.0, 3);
    let recs: Vec<MeasurementRecord> = read_all(&s.ran_files);
    let e2e: Vec<EndToEndRecord> = read_all(&s.e2e_files);
    let doc = analyze(&recs, &e2e, &AnalysisOptions::default()).unwrap();
    assert_eq!(doc.report.n_ran_samples, recs.len());
    assert_eq!(doc.report.n_e2e_samples, 2);

    let gj = records_geojson(&recs, Metric::Rsrp).unwrap().to_string();
    let parsed: geojson::GeoJson = gj.parse().unwrap();
    match parsed {
        geojson::GeoJson::FeatureCollection(fc) => assert_eq!(fc.features.len(), recs.len()),
        other => panic!("not a FeatureCollection: {other:?}"),
    }

    let mut csv = Vec::new();
    records_csv(&recs, &mut csv).unwrap();
    assert_eq!(import_records_csv(&csv[..]).unwrap(), recs);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn skylog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skylog")).args(args).output().expect("spawn skylog")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).display().to_string()
}

fn path_list(v: &serde_json::Value) -> Vec<PathBuf> {
    v.as_array().unwrap().iter().map(|p| PathBuf::from(p.as_str().unwrap())).collect()
}

#[test]
fn help_on_every_subcommand() {
    for sub in ["collect", "serve", "probe", "simulate", "analyze", "export"] {
        let out = skylog(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
    assert_eq!(skylog(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(skylog(&[]).status.code(), Some(1));
    assert_eq!(skylog(&["fly"]).status.code(), Some(1));
    assert_eq!(skylog(&["analyze"]).status.code(), Some(1));
    assert_eq!(skylog(&["export", "--ran", "x", "--format", "kml", "--out", "y"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{not json").unwrap();
    let out = skylog(&["--config", cfg.to_str().unwrap(), "simulate", "--duration", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let missing = dir.path().join("missing.trace");
    let report = dir.path().join("r.json");
    let out = skylog(&["analyze", "--ran", missing.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixtures_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = skylog(&[
        "analyze",
        "--ran",
        &fixture("poor_rsrq.trace"),
        "--e2e",
        &fixture("dl_throughput.trace"),
        "--report",
        report.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["frac_rsrq_poor"], 0.15);
    assert_eq!(v["frac_dl_ge"], 0.9);
    assert!(report.exists());
    assert!(dir.path().join("report-tables").join("cells.csv").exists());

    let out = skylog(&[
        "analyze",
        "--ran",
        &fixture("poor_rsrq.trace"),
        "--report",
        report.to_str().unwrap(),
        "--rsrq-poor",
        "-18.95",
    ]);
    assert_eq!(stdout_json(&out)["frac_rsrq_poor"], 0.2);
}

#[test]
fn simulate_replay_analyze_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).display().to_string();

    let sim = stdout_json(&skylog(&["--seed", "7", "simulate", "--duration", "120", "--out", &d("sim")]));
    assert_eq!(sim["records_written"], 120);
    assert_eq!(sim["e2e_tests_run"], 2);
    let ran = path_list(&sim["ran_files"]);
    let e2e = path_list(&sim["e2e_files"]);

    let replay = stdout_json(&skylog(&[
        "collect",
        "--backend",
        "replay",
        "--trace",
        ran[0].to_str().unwrap(),
        "--out",
        &d("replay"),
    ]));
    assert_eq!(replay["records_written"], 120);
    let replayed = path_list(&replay["ran_files"]);

    let analysis = stdout_json(&skylog(&[
        "analyze",
        "--ran",
        replayed[0].to_str().unwrap(),
        "--e2e",
        e2e[0].to_str().unwrap(),
        "--report",
        &d("report.json"),
        "--tables",
        &d("tables"),
    ]));
    assert_eq!(analysis["n_ran_samples"], 120);
    assert_eq!(analysis["n_e2e_samples"], 2);
    assert!(dir.path().join("tables").join("ecdf_rsrq.csv").exists());

    let gj = d("points.geojson");
    let out = skylog(&["export", "--ran", replayed[0].to_str().unwrap(), "--format", "geojson", "--out", &gj]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    match fs::read_to_string(&gj).unwrap().parse::<geojson::GeoJson>().unwrap() {
        geojson::GeoJson::FeatureCollection(fc) => assert_eq!(fc.features.len(), 120),
        other => panic!("{other:?}"),
    }

    let csv = d("voxels.csv");
    let out = skylog(&[
        "export",
        "--ran",
        replayed[0].to_str().unwrap(),
        "--format",
        "csv",
        "--grid",
        "25,10",
        "--metric",
        "sinr",
        "--out",
        &csv,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&csv).unwrap().lines().count() > 1);
}

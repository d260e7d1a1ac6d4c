use skewlab::config::ExperimentConfig;
use skewlab::report::{emit_report, Format, ReportBundle};
use skewlab::runner::run_experiment;
use std::path::PathBuf;
use std::process::Command;

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.apply(pairs.iter().copied()).unwrap();
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("skewlab-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn symmetric_skew_law_suite_passes() {
    let b = run_experiment(&config(&[("suite", "skew_law"), ("alpha", "0.5"), ("model", "trivial"), ("paths", "10000")])).unwrap();
    let ks = b.reports.iter().find(|r| r.suite == "skew_law.ks").unwrap();
    assert!(ks.pass(), "{ks:?}");
    assert!(ks.seed.is_some());
    assert_eq!((ks.n_paths, ks.n_steps), (10_000, 4096));
}

#[test]
fn identities_suite_reports_each_mesh_level() {
    let b = run_experiment(&config(&[("suite", "identities"), ("steps", "4096,16384,65536")])).unwrap();
    let medians: Vec<f64> = b
        .reports
        .iter()
        .filter(|r| r.suite.starts_with("identities.tanaka.median"))
        .map(|r| r.statistic)
        .collect();
    assert_eq!(medians.len(), 3);
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    assert!(b.curves.iter().any(|c| c.name == "identities_tanaka"));
}

#[test]
fn emitted_json_round_trips() {
    let b = run_experiment(&config(&[("suite", "skew_law"), ("paths", "1000"), ("steps", "256")])).unwrap();
    let dir = scratch("json");
    let files = emit_report(&b, Format::Json, &dir).unwrap();
    let back = ReportBundle::from_json(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(back.reports, b.reports);
    assert_eq!(back.provenance, b.provenance);
    let curve = std::fs::read_to_string(dir.join("curves/skew_law_cdf.csv")).unwrap();
    assert!(curve.starts_with("t,value,series\n"));
    std::fs::remove_dir_all(dir).unwrap();
}

fn skewlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skewlab"))
}

#[test]
fn binary_run_writes_csv_and_exit_status() {
    let dir = scratch("cli");
    let out = skewlab()
        .args(["run", "--suite", "skew_law", "--paths", "1000", "--steps", "256", "--format", "csv", "--seed", "11"])
        .env("SKEWLAB_OUT", &dir)
        .output()
        .unwrap();
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "suite,statistic,threshold,n_paths,n_steps,seed,pass");
    let all_pass = csv.lines().skip(1).all(|l| l.ends_with(",true"));
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn binary_config_file_and_overrides() {
    let dir = scratch("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# small run\nsuite=skew_law\nschedule.boundaries=0,0.5\nschedule.values=0.3,0.8\npaths=1000\n").unwrap();
    let out = skewlab()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--steps", "256", "--set", "tolerance.sign=0.05", "--out"])
        .arg(dir.join("o"))
        .output()
        .unwrap();
    let json = std::fs::read_to_string(dir.join("o/report.json")).unwrap();
    let b = ReportBundle::from_json(&json).unwrap();
    assert_eq!(b.provenance.config["schedule.values"], "0.3,0.8");
    assert_eq!(b.provenance.config["tolerance.sign"], "0.05");
    assert_eq!(out.status.code(), Some(b.exit_code()));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    let out = skewlab().args(["run", "--paths", "many"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`paths`"));
    assert_eq!(skewlab().args(["describe", "nope"]).output().unwrap().status.code(), Some(2));
    assert_eq!(skewlab().args(["frobnicate"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn list_and_describe() {
    let out = skewlab().arg("list-suites").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    let out = skewlab().args(["describe", "skew_law"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("skew_law:"));
}

#[test]
fn hypothesis_only_run_exits_with_three() {
    let dir = scratch("hyp");
    // every martingale report passes except abs_brownian, whose hypotheses
    // no zoo member meets
    let out = skewlab()
        .args(["run", "--suite", "martingale", "--set", "pathwise_paths=8"])
        .env("SKEWLAB_OUT", &dir)
        .output()
        .unwrap();
    let b = ReportBundle::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let failed: Vec<_> = b.reports.iter().filter(|r| !r.pass()).map(|r| r.suite.as_str()).collect();
    assert!(!failed.is_empty() && failed.iter().all(|s| s.contains("abs_brownian")), "{failed:?}");
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(dir).unwrap();
}

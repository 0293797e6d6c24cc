use std::path::Path;
use std::process::{Command, Output};

use wbl::classical::Reflection;
use wbl::cli::classical_report;
use wbl::observables::Observable;

fn wbl(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wbl"));
    c.args(args).arg("--out").arg(out);
    if let Some(t) = threads {
        c.env("WBL_THREADS", t);
    }
    c.output().unwrap()
}

fn manifest(out: &Path, cmd: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{cmd}_manifest.json"))).unwrap()).unwrap()
}

#[test]
fn operator_check_passes_and_restricts_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = wbl(
        &["--D", "3", "--k", "4", "operator-check", "--t-range", "-3", "5"],
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let m = manifest(dir.path(), "operator_check");
    let checks = m["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
    let pat = checks.iter().find(|c| c["name"] == "pattern_laws").unwrap();
    assert!(pat["detail"].as_str().unwrap().contains("[-3, 5]"));
    assert_eq!(m["constants"]["q"], 16.0);
}

#[test]
fn traces_table_rows_follow_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = wbl(
        &["--D", "2", "--k", "5", "traces", "--t-range", "0", "9"],
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let ts: Vec<i64> = rd.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(ts, (0..=9).collect::<Vec<_>>());
    let o = wbl(
        &["--D", "2", "--k", "5", "--format", "json", "traces"],
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traces.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 10);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = wbl(&["--D", "3", "--k", "40", "fluct"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    assert_eq!(wbl(&["--D", "1", "classical"], dir.path(), None).status.code(), Some(2));
    assert_eq!(
        wbl(&["--k", "4", "que", "--delta", "0.7"], dir.path(), None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(wbl(&["no-such-command"], dir.path(), None).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"modes":[{"m":1,"n":0,"re":1.0,"im":0.0},{"m":-1,"n":0,"re":0.5,"im":0.0}]}"#,
    )
    .unwrap();
    let o = wbl(&["--obs", bad.to_str().unwrap(), "classical"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = wbl(
        &["--D", "2", "--k", "4", "--samples", "4", "que", "--delta", "0.001"],
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL que_max"));
    assert_eq!(manifest(dir.path(), "que")["checks"][0]["pass"], false);
}

#[test]
fn fluct_is_thread_independent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--D", "3", "--k", "5", "--samples", "6", "--seed", "11", "fluct"];
    assert_eq!(wbl(&args, a.path(), Some("1")).status.code(), Some(0));
    assert_eq!(wbl(&args, b.path(), Some("4")).status.code(), Some(0));
    let fa = std::fs::read(a.path().join("fluctuations.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.path().join("fluctuations.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&fa).lines().count(), 1 + 6 * 20);

    let h: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("fluct_histogram.json")).unwrap()).unwrap();
    let total: u64 = h["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 120);
    let m = manifest(a.path(), "fluct");
    let v = m["constants"]["V"].as_f64().unwrap();
    assert!((v - wbl::classical::classical_variance(&Observable::cos(1, 0, 1.0), 3, Reflection::Walsh)).abs() < 1e-12);
    assert!(a.path().join("fluct_summary.json").exists());
}

#[test]
fn offdiag_and_classical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        wbl(&["--D", "3", "--k", "4", "--samples", "3", "offdiag"], dir.path(), None)
            .status
            .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(dir.path().join("offdiag.csv")).unwrap();
    assert!(text.starts_with("alpha,beta,re,im,re_scaled,im_scaled"));
    assert!(dir.path().join("offdiag_summary.json").exists());

    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, serde_json::to_string(&Observable::zero().to_spec()).unwrap()).unwrap();
    let o = wbl(
        &["--D", "3", "--k", "4", "--obs", zero.to_str().unwrap(), "classical"],
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(dir.path(), "classical");
    assert_eq!(m["constants"]["V"], 0.0);
    let mut rd = csv::Reader::from_path(dir.path().join("correlations.csv")).unwrap();
    for r in rd.records() {
        let r = r.unwrap();
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn classical_report_tables() {
    let obs = Observable::cos(1, 0, 1.0);
    let rep = classical_report(&obs, 3, 2, Reflection::Torus).unwrap();
    assert_eq!(rep.q, 8);
    assert!((rep.variance - 1.0).abs() < 1e-12);
    assert!((rep.variance_other - 0.3246).abs() < 1e-3);
    assert_eq!(rep.tilde_variance.len(), 8);
    for a in 0..8 {
        for b in 0..8 {
            assert!((rep.tilde_variance_unsigned[a][b] - 1.0).abs() < 1e-12);
        }
    }
    assert!(rep.fractal_average.is_none());
    assert!(classical_report(&obs, 4, 2, Reflection::Walsh)
        .unwrap()
        .fractal_average
        .is_some());
}

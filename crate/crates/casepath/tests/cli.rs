use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn casepath(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casepath"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CASEPATH_THREADS")
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = casepath(&["simulate", "--n", "20", "--p", "3", "--seed", "7"], d.path());
        assert!(o.status.success());
    }
    for f in ["data.csv", "data.meta.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let r = report(a.path());
    assert_eq!(r["status"], "ok");
    assert_eq!(r["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn fit_writes_a_passing_certificate() {
    let d = tempfile::tempdir().unwrap();
    let o = casepath(&["fit", "--simulate", "n=12,p=3", "--tau", "0.45", "--lambda", "0.8"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("fit.json")).unwrap()).unwrap();
    assert!(fit["kkt_certificate"].as_f64().unwrap() <= 1e-8);
    assert_eq!(fit["beta"].as_array().unwrap().len(), 3);
    assert_eq!(fit["partition"].as_str().unwrap().len(), 12);
}

#[test]
fn cv_grid_of_two_and_verify() {
    let d = tempfile::tempdir().unwrap();
    let o = casepath(
        &[
            "cv",
            "--simulate",
            "n=12,p=3",
            "--tau",
            "0.45",
            "--n-lambda",
            "2",
            "--lambda-min",
            "0.1",
            "--lambda-max",
            "10",
            "--verify",
            "--plot",
        ],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&d.path().join("cv_curve.csv"));
    assert_eq!(rows[0], ["lambda", "rcv", "gacv", "elbow_size"]);
    assert_eq!(rows.len(), 3);
    let r = report(d.path());
    assert!(r["summary"]["verify_max_abs_rcv_diff"].as_f64().unwrap() <= 1e-8);
    assert!(std::fs::read_to_string(d.path().join("cv_curve.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn cv_output_is_thread_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, t) in [(&a, "1"), (&b, "3")] {
        let o = casepath(
            &["cv", "--simulate", "n=20,p=4", "--seed", "2", "--tau", "0.3", "--n-lambda", "6", "--threads", t],
            d.path(),
        );
        assert!(o.status.success());
    }
    assert_eq!(
        std::fs::read(a.path().join("cv_curve.csv")).unwrap(),
        std::fs::read(b.path().join("cv_curve.csv")).unwrap()
    );
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert_eq!(ra["summary"], rb["summary"]);
    assert_eq!(ra["config"], rb["config"]);
}

#[test]
fn conflicting_inputs_are_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let csv = d.path().join("x.csv");
    std::fs::write(&csv, "a,y\n1,2\n2,3\n3,5\n").unwrap();
    let o = casepath(&["cv", "--data", csv.to_str().unwrap(), "--simulate", "n=5,p=1", "--tau", "0.5"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["error"]["category"], "usage");
    let r = report(d.path());
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["category"], "usage");

    let o = casepath(&["cv", "--simulate", "n=20,p=2", "--tau", "1.5"], d.path());
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn ridge_df_equals_the_hat_trace() {
    let d = tempfile::tempdir().unwrap();
    let o = casepath(
        &["df", "--simulate", "n=30,p=5", "--lambda", "2", "--model", "ridge", "--omegas", "0,0.3,0.6"],
        d.path(),
    );
    assert!(o.status.success());
    let rows = csv_rows(&d.path().join("df.csv"));
    assert_eq!(rows.len(), 4);
    let trace = report(d.path())["summary"]["trace_hat"].as_f64().unwrap();
    for row in &rows[1..] {
        assert!((row[1].parse::<f64>().unwrap() - trace).abs() <= 1e-8);
    }
}

#[test]
fn influence_curves_start_at_zero() {
    let d = tempfile::tempdir().unwrap();
    for model in ["qrrp", "ridge"] {
        let o = casepath(
            &[
                "influence",
                "--simulate",
                "n=15,p=3",
                "--tau",
                "0.3",
                "--lambda",
                "0.7",
                "--model",
                model,
                "--cases",
                "0,4,9",
                "--plot",
            ],
            d.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rows = csv_rows(&d.path().join("influence.csv"));
        assert_eq!(rows[0], ["case", "omega", "d_tilde"]);
        for case in ["0", "4", "9"] {
            let curve: Vec<(f64, f64)> = rows[1..]
                .iter()
                .filter(|r| r[0] == case)
                .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
                .collect();
            assert!(curve.len() >= 101);
            assert_eq!(curve[0], (1.0, 0.0));
            if model == "ridge" {
                assert!(curve.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12), "case {case}");
            }
        }
    }
    let o = casepath(&["influence", "--simulate", "n=15,p=3", "--lambda", "0.7", "--cases", "15"], d.path());
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn bench_smoke_run() {
    let d = tempfile::tempdir().unwrap();
    let o = casepath(
        &["bench", "--grid", "12x3x0.3", "--n-lambda", "3", "--replicates", "1", "--inner", "1", "--baseline", "both"],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&d.path().join("bench.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].len(), casepath::bench::RECORD_HEADER.len());
    let o = casepath(&["bench", "--grid", "1000x3x0.3", "--baseline", "refit"], d.path());
    assert!(!o.status.success());
}

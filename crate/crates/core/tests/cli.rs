//! End-to-end checks of the `sparsefit` binary.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsefit"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sparsefit-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

/// Every number in `want` must match `got` within `tol`; other leaves must be equal.
fn assert_close(got: &Value, want: &Value, tol: f64, path: &str) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= tol * b.abs().max(1.0), "{path}: {a} vs {b}");
        }
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                if k == "iterations" || k == "grad_norm_at_solution" {
                    continue;
                }
                assert_close(&a[k], v, tol, &format!("{path}.{k}"));
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(x, y, tol, &format!("{path}[{i}]"));
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

#[test]
fn fit_hurdle_reports_exact_zero_weight() {
    let dir = scratch("hurdle");
    let input = dir.join("h.csv");
    std::fs::write(&input, "feature,a,b,c,d,e,f,g,h,i,j\nx,0,0,0,0,0,0,0,2,2,2\n").unwrap();
    let v = json(&run(&["fit", input.to_str().unwrap(), "--family", "poisson", "--kind", "hurdle"]));
    assert_eq!(v["parameters"][0]["name"], "phi");
    assert_eq!(v["parameters"][0]["estimate"].as_f64().unwrap(), 0.7);
    assert_eq!(v["case"], "HurdleClosed");
}

#[test]
fn fit_empty_file_is_a_parse_error() {
    let dir = scratch("empty");
    let input = dir.join("empty.csv");
    std::fs::write(&input, "").unwrap();
    let out = run(&["fit", input.to_str().unwrap(), "--family", "poisson"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn fit_missing_file_and_bad_flags() {
    let out = run(&["fit", "/nonexistent/table.csv", "--family", "nb"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["fit", fixture("toy_table.csv").to_str().unwrap(), "--family", "gamma"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_zinb_matches_golden_json() {
    let out = run(&["fit", fixture("zinb_feature.csv").to_str().unwrap(), "--family", "nb", "--kind", "zi"]);
    let got = json(&out);
    let want: Value = serde_json::from_str(&std::fs::read_to_string(fixture("zinb_fit_golden.json")).unwrap()).unwrap();
    assert_close(&got, &want, 1e-6, "$");
}

#[test]
fn gof_is_deterministic_and_on_the_lattice() {
    let input = fixture("zinb_feature.csv");
    let args = |jobs: &'static str| {
        vec![
            "gof".to_string(),
            input.to_str().unwrap().to_string(),
            "--family".into(),
            "nb".into(),
            "--kind".into(),
            "zi".into(),
            "--bootstrap".into(),
            "99".into(),
            "--seed".into(),
            "11".into(),
            "--jobs".into(),
            jobs.into(),
        ]
    };
    let a = bin().args(args("1")).output().unwrap();
    let b = bin().args(args("1")).output().unwrap();
    let c = bin().args(args("4")).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let p = v["p_value"].as_f64().unwrap();
    let k = p * 100.0;
    assert!((k - k.round()).abs() < 1e-9 && (1.0..=100.0).contains(&k.round()), "p = {p}");
}

#[test]
fn scan_toy_table_is_deterministic_across_thread_counts() {
    let input = fixture("toy_table.csv");
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let dir = scratch(&format!("scan{i}"));
        let out = run(&[
            "scan",
            input.to_str().unwrap(),
            "--models",
            "poisson,zip,ph,nbh",
            "--bootstrap",
            "19",
            "--seed",
            "5",
            "--jobs",
            jobs,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<Vec<u8>> = ["features.csv", "summary.csv", "report.json"]
            .iter()
            .map(|f| std::fs::read(dir.join(f)).unwrap())
            .collect();
        outputs.push((out.stdout, files));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);

    let report: Value = serde_json::from_slice(&outputs[0].1[2]).unwrap();
    let features = report["features"].as_array().unwrap();
    assert_eq!(features.len(), 3 * 4);
    let ids: std::collections::BTreeSet<&str> = features.iter().map(|r| r["feature_id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 3);
    assert!(ids.contains("Streptococcus pneumoniae"));
}

#[test]
fn simulate_round_trips_through_the_parser() {
    let dir = scratch("sim");
    let path = dir.join("sim.csv");
    let out = run(&[
        "simulate", "--family", "bb", "--kind", "zi", "--phi", "0.3", "--params", "12,1.5,2", "--n", "40", "--features",
        "7", "--seed", "9", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = sparsefit::cli::CountTable::read_path(&path).unwrap();
    assert_eq!(table.n_features(), 7);
    assert_eq!(table.sample_ids.len(), 40);
    assert!(table.counts.iter().flatten().all(|&y| y <= 12));
    let again = sparsefit::cli::CountTable::parse(table.to_csv_string().as_bytes()).unwrap();
    assert_eq!(again, table);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), table.to_csv_string());

    // Same seed, same bytes.
    let out2 = run(&[
        "simulate", "--family", "bb", "--kind", "zi", "--phi", "0.3", "--params", "12,1.5,2", "--n", "40", "--features",
        "7", "--seed", "9",
    ]);
    assert_eq!(String::from_utf8(out2.stdout).unwrap(), table.to_csv_string());
}

#[test]
fn simulate_hurdle_zero_fraction() {
    let out = run(&["simulate", "--family", "poisson", "--kind", "hurdle", "--phi", "0.7", "--params", "2", "--n", "100000", "--seed", "3"]);
    let table = sparsefit::cli::CountTable::parse(out.stdout.as_slice()).unwrap();
    let zeros = table.counts[0].iter().filter(|&&y| y == 0).count() as f64;
    assert!((zeros / 1e5 - 0.7).abs() <= 0.007);
}

#[test]
fn scan_poisson_on_overdispersed_features_rarely_passes() {
    let dir = scratch("nbscan");
    let input = dir.join("nb.csv");
    let out = run(&[
        "simulate", "--family", "nb", "--params", "0.5,0.9", "--n", "100", "--features", "20", "--seed", "17", "--out",
        input.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "scan",
        input.to_str().unwrap(),
        "--models",
        "poisson",
        "--bootstrap",
        "49",
        "--seed",
        "1",
        "--out",
        dir.join("report").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&std::fs::read(dir.join("report/report.json")).unwrap()).unwrap();
    let pct = report["summary"][0]["percentage"].as_f64().unwrap();
    assert!(pct <= 5.0, "Poisson passed {pct}% of NB(0.5) features");
}

use std::process::{Command, Output};

use serde_json::Value;

fn scanstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scanstat")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const OMEGA: [&str; 6] = ["omega", "--kernel", "disc", "--reps", "400", "--seed"];

#[test]
fn same_seed_gives_identical_bytes() {
    let a = scanstat(&[&OMEGA[..], &["7"]].concat());
    let b = scanstat(&[&OMEGA[..], &["7"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = scanstat(&[&OMEGA[..], &["8"]].concat());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn worker_count_does_not_change_output() {
    let args = ["k-const", "--kernel", "box:1,1", "--law", "gaussian", "--c", "2", "--reps", "300", "--seed", "3"];
    let one = scanstat(&[&args[..], &["--workers", "1"]].concat());
    let four = scanstat(&[&args[..], &["--workers", "4"]].concat());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn envelope_records_seed_version_and_config() {
    let o = scanstat(&[&OMEGA[..], &["5"]].concat());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "omega");
    assert_eq!(v["seed"], 5);
    assert!(v["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert_eq!(v["config"]["reps"], 400);
    assert_eq!(v["config"]["kernel"]["shape"], "ball");
}

#[test]
fn threshold_below_the_mean_mass_is_a_validation_error() {
    let o = scanstat(&["approx", "--kernel", "box:1,1", "--law", "unit", "--c", "0.9", "--lambda", "10", "--domain-volume", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("c > max{0, mu*vol(B)}"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(scanstat(&["approx", "--law", "unit"]).status.code(), Some(2));
    assert_eq!(scanstat(&["omega", "--kernel", "hexagon"]).status.code(), Some(2));
    assert_eq!(scanstat(&["table1", "--reps", "many"]).status.code(), Some(2));
    assert_eq!(scanstat(&["nosuch"]).status.code(), Some(2));
    assert_eq!(scanstat(&["gauss", "--alpha", "2", "--d", "1", "--route", "bound"]).status.code(), Some(2));
}

#[test]
fn table1_writes_csv_columns() {
    let o = scanstat(&["table1", "--rows", "I,lower", "--chat", "2,4,10", "--reps", "2e2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["row", "c_hat", "value", "stderr", "reps", "diagnostics"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let lower: Vec<f64> = rows.iter().filter(|r| &r[0] == "lower").map(|r| r[2].parse().unwrap()).collect();
    for (v, printed) in lower.iter().zip([0.0235, 0.137, 0.348]) {
        assert!((v - printed).abs() < 0.001, "{v} vs {printed}");
    }
    assert!(rows.iter().filter(|r| &r[0] == "I").all(|r| &r[4] == "200"));
    assert!(text.starts_with("# command=table1"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kernel": {"shape": "box", "b": [1.0, 1.0]}, "law": "unit", "c": 2, "lambda": 30,
        "domain-volume": 9, "seed": 4}"#)
        .unwrap();
    let cfg = cfg.to_str().unwrap();
    let base: Value = serde_json::from_str(&stdout(&scanstat(&["approx", "--config", cfg]))).unwrap();
    assert_eq!(base["seed"], 4);
    assert_eq!(base["config"]["lambda"], 30.0);
    let over: Value =
        serde_json::from_str(&stdout(&scanstat(&["approx", "--config", cfg, "--lambda", "40", "--seed", "5"]))).unwrap();
    assert_eq!(over["seed"], 5);
    assert_eq!(over["config"]["lambda"], 40.0);
    assert!(over["result"]["p"].as_f64().unwrap() < base["result"]["p"].as_f64().unwrap());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kernal": "disc"}"#).unwrap();
    let o = scanstat(&["omega", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn a_result_file_reruns_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let o = scanstat(&["nu", "--law", "gaussian:0,1", "--c-hat", "2", "--reps", "300", "--seed", "11", "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = scanstat(&["nu", "--config", first.to_str().unwrap()]);
    assert_eq!(std::fs::read(&first).unwrap(), again.stdout);
}

#[test]
fn oracle_dumps_replicate_maxima() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("sups.csv");
    let o = scanstat(&[
        "oracle", "--kernel", "box:1,1", "--law", "unit", "--c", "1.8", "--lambda", "10", "--domain-side", "3",
        "--reps", "50", "--dump", dump.to_str().unwrap(), "--k-route", "rectangle",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let sups = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(sups.lines().count(), 51);
    let exceed = sups.lines().skip(1).filter(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 18.0).count();
    assert_eq!(v["result"]["oracle"]["exceedances"], exceed);
    assert!(v["result"]["approximation"]["p"].as_f64().unwrap() > 0.0);
}

#[test]
fn diagnostic_failures_still_write_the_result() {
    // a tiny rough planar region leaves most excursion sets truncated
    let o = scanstat(&["gauss", "--alpha", "1", "--d", "2", "--route", "clump", "--reps", "100", "--region", "1", "--region-step", "0.25"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["estimates"][0]["failure"].is_string());
}

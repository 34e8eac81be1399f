use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn charwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL_SWEEP: &[&str] = &[
    "sweep",
    "--a",
    "-1",
    "--b",
    "1",
    "--eps-count",
    "4",
    "--eps-ratio",
    "0.8",
    "--grid-h",
    "0.25",
    "--refine",
    "off",
    "--t-max",
    "40",
];

fn sweep_into(dir: &Path) -> Output {
    let mut args = SMALL_SWEEP.to_vec();
    args.extend(["--out", dir.to_str().unwrap()]);
    charwave(&args)
}

#[test]
fn predict_prints_power_law() {
    let out = charwave(&[
        "predict",
        "--a",
        "-1",
        "--b",
        "-1",
        "--profile",
        "zero",
        "--eps-count",
        "4",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["prediction"]["case"]["cell"], "PowPAB");
    let e = v["prediction"]["kind"]["exponent"].as_f64().unwrap();
    assert!((e - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["values"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(charwave(&["sweep", "--refine", "maybe"]).status.code(), Some(2));
    assert_eq!(charwave(&["sweep", "--eps-count", "2"]).status.code(), Some(2));
    assert_eq!(charwave(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(charwave(&["predict", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(charwave(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_writes_properties() {
    let dir = tempfile::tempdir().unwrap();
    let out = charwave(&[
        "verify",
        "--suite",
        "sequences,partition",
        "--seed",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("properties.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["suites"].as_array().unwrap().len(), 2);
    assert!(text.ends_with('\n'));
}

#[test]
fn sweep_is_deterministic_and_complete() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o1 = sweep_into(d1.path());
    assert!(o1.status.success(), "{}", String::from_utf8_lossy(&o1.stderr));
    assert!(sweep_into(d2.path()).status.success());
    for name in ["sweep.csv", "loglog.csv", "fit.json"] {
        let a = fs::read(d1.path().join(name)).unwrap();
        assert!(a.ends_with(b"\n"), "{name}");
        if name != "fit.json" {
            assert_eq!(a, fs::read(d2.path().join(name)).unwrap(), "{name}");
        }
    }
    let csv = fs::read_to_string(d1.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(d1.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["config"]["eps_count"], 4);
    assert!(fit["apriori"]["c1"].as_f64().unwrap() > 0.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"params": {"a": 1.0, "b": 1.0, "p": 2.0, "R": 2.0}, "eps_count": 6}"#,
    )
    .unwrap();
    let out = charwave(&["predict", "--config", cfg.to_str().unwrap(), "--a", "-1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["prediction"]["case"]["params"]["a"], -1.0);
    assert_eq!(v["values"].as_array().unwrap().len(), 6);
}

#[test]
fn certify_reports_global_cell() {
    let out = charwave(&["certify", "--a", "1", "--b", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("global"));
}

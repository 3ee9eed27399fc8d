use std::path::Path;
use std::process::{Command, Output};

use fluctua_cli::{run_config, ScenarioConfig};

fn fluctua(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluctua"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    std::fs::write(dir.join(name), json).unwrap();
    name.to_string()
}

const SPIN: &str = r#"{"scenario":"spin-dissipative","params":{"T":0.1,"gamma":0.5},"grid":{"t_max":4,"dt":0.1},"output":"spin.csv"}"#;

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spin.json", SPIN);
    let out = fluctua(&["run", "--config", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["scenario", "params", "max_E", "t_max_E", "E_final"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["scenario"], "spin-dissipative");
    assert_eq!(summary["params"]["J0"], 1.0);
    assert!(summary["max_E"].as_f64().unwrap() > 0.0);

    let csv = std::fs::read_to_string(dir.path().join("spin.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# scenario=spin-dissipative"));
    assert_eq!(lines.next().unwrap(), "t,E,nu1,nu2");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 41);
    let max = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert_eq!(max, summary["max_E"].as_f64().unwrap());
}

#[test]
fn csv_numbers_round_trip_against_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spin.json", SPIN);
    fluctua(&["run", "--config", &cfg], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("spin.csv")).unwrap();
    let lib = run_config(&ScenarioConfig::from_json(SPIN).unwrap()).unwrap();
    assert_eq!(csv, lib.to_csv());
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"scenario":"spin-dissipative","params":{"T":0.1,"gamma":0.7},"grid":{"t_max":1,"dt":0.1}}"#,
            "|gamma| <= 0.5",
        ),
        (
            r#"{"scenario":"oscillator-dissipative","params":{"T":0.1,"lambda":2},"grid":{"t_max":1,"dt":0.1}}"#,
            "|lambda| <= 1",
        ),
        (
            r#"{"scenario":"meanfield-fluct","params":{"a":0.2,"b":0.5,"zeta":0.5},"grid":{"t_max":1,"dt":0.1}}"#,
            "a >= b^2",
        ),
        (
            r#"{"scenario":"spin-dissipative","params":{"T":0.1,"gamma":0.1},"grid":{"t_max":0,"dt":0.1}}"#,
            "t_max > 0",
        ),
        (
            r#"{"scenario":"spin-dissipative","params":{"T":0.1,"gamma":0.1,"zeta":1},"grid":{"t_max":1,"dt":0.1}}"#,
            "unknown parameter",
        ),
        (
            r#"{"scenario":"meanfield-macro","params":{"omega1":0.1},"grid":{"t_max":1,"dt":0.1}}"#,
            "missing parameter",
        ),
    ];
    for (i, (json, needle)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), json);
        let out = fluctua(&["run", "--config", &cfg], dir.path());
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{json}: {err}");
        assert!(err.contains(needle), "{err} should mention {needle}");
    }
}

#[test]
fn numerical_abort_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // a huge in-plane start makes the macro flow overflow
    let cfg = write_config(
        dir.path(),
        "blowup.json",
        r#"{"scenario":"meanfield-macro","params":{"omega1":1e200,"omega2":1e200,"omega3":0},"grid":{"t_max":1,"dt":0.1}}"#,
    );
    let out = fluctua(&["run", "--config", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn check_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fluctua(&["check", ""], dir.path()).status.code(), Some(2));
    assert_eq!(
        fluctua(&["check", "everything"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(fluctua(&["check"], dir.path()).status.code(), Some(2));
}

#[test]
fn check_invariants_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluctua(&["check", "invariants"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS spin reference state is stationary"));
}

#[test]
fn sweep_single_point_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spin.json", SPIN);
    let out = fluctua(
        &["sweep", "--config", &cfg, "--axis", "gamma=0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = table
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    let lib = run_config(&ScenarioConfig::from_json(SPIN).unwrap())
        .unwrap()
        .summary;
    assert_eq!(row[0], 0.5);
    assert_eq!(row[1], 0.0);
    assert_eq!(row[2], lib.max_e.unwrap());
    assert_eq!(row[3], lib.t_max_e.unwrap());
    assert_eq!(row[4], lib.e_final.unwrap());
}

#[test]
fn sweep_records_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spin.json", SPIN);
    let out = fluctua(
        &[
            "sweep",
            "--config",
            &cfg,
            "--axis",
            "gamma=0.1,0.9",
            "--workers",
            "2",
            "--output",
            "t.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let table = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "gamma,error_code,max_E,t_max_E,E_final,duration");
    assert!(lines[1].starts_with("0.1,0,"));
    assert!(lines[2].starts_with("0.9,2,NaN"));
}

#[test]
fn sweep_axis_syntax_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spin.json", SPIN);
    let out = fluctua(&["sweep", "--config", &cfg, "--axis", "gamma"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = fluctua(
        &[
            "sweep",
            "--config",
            &cfg,
            "--axis",
            "gamma=0.1",
            "--workers",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn clt_and_macro_scenarios_produce_tables() {
    let clt = run_config(
        &ScenarioConfig::from_json(r#"{"scenario":"clt-check","params":{"T":0.5}}"#).unwrap(),
    )
    .unwrap();
    assert_eq!(clt.table.columns, vec!["N", "error"]);
    assert_eq!(clt.table.rows.len(), 5);
    assert!(clt.to_csv().contains("\n250,"));
    assert!(clt.summary.max_e.is_none());

    let mac = run_config(
        &ScenarioConfig::from_json(
            r#"{"scenario":"meanfield-macro","params":{"omega1":0.3,"omega2":-0.2,"omega3":0.1},"grid":{"t_max":2,"dt":0.01,"sample_stride":50}}"#,
        )
        .unwrap(),
    )
    .unwrap();
    assert_eq!(mac.table.rows.len(), 5);
    let last = mac.table.rows.last().unwrap();
    assert_eq!(last[0], 2.0);
    let norm = (last[1] * last[1] + last[2] * last[2] + last[3] * last[3]).sqrt();
    assert!((norm - (0.14_f64).sqrt()).abs() < 1e-10);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qrc_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrc-lab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

const SMALL_NARMA: &str = r#"{
  "n_qubits": 2,
  "multiplexing": [1, 2],
  "narma_orders": [2, 4],
  "seeds": [0, 1],
  "series_length": 400
}"#;

#[test]
fn unknown_experiment_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{}");
    let out = qrc_lab(&["not_an_experiment", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_an_experiment"));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"n_qubits\": 4,\n  \"seeds\": [1,\n}\n");
    let out = qrc_lab(&["narma_sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:4:"), "{err}");
}

#[test]
fn invalid_values_report_key_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{\n  \"n_qubits\": 3\n}\n");
    let out = qrc_lab(&["mg_sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c.json:2: n_qubits"), "{err}");
    assert!(!dir.path().join("mg_sweep.csv").exists());
}

#[test]
fn narma_sweep_is_reproducible_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "n.json", SMALL_NARMA);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path, jobs: &str| {
        let o = qrc_lab(&["narma_sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&a, "1");
    run(&b, "3");
    let csv_a = fs::read_to_string(a.join("narma_sweep.csv")).unwrap();
    let csv_b = fs::read_to_string(b.join("narma_sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with("# experiment=narma_sweep\n"));

    let text = body(&csv_a);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["family", "point", "e_p", "g_t", "v", "order", "seed", "train_mse", "test_mse", "status"]);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for r in &rows {
        assert!(r[6] == "0" || r[6] == "1");
        assert_eq!(r[9], "ok");
        assert!(r[8].parse::<f64>().unwrap() >= 0.0);
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("narma_sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "narma_sweep");
    assert_eq!(manifest["columns"].as_array().unwrap().len(), header.len());
    assert_eq!(manifest["columns"][6]["name"], "seed");
    assert!(manifest["git_describe"].is_string());
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["error_rows"], 0);

    let summary = fs::read_to_string(a.join("narma_sweep_summary.csv")).unwrap();
    let summary = body(&summary);
    assert!(summary.lines().next().unwrap().ends_with("mean_test_mse,std_test_mse,n_seeds,seeds"));
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",2,0;1")));
    assert!(a.join("narma_sweep_summary.manifest.json").exists());
}

#[test]
fn seed_base_shifts_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.json",
        r#"{"gate_family": {"dual_unitary": [0.2, 0.5]}, "seeds": [0, 1], "ensemble_size": 4, "samples": 4}"#,
    );
    let out = qrc_lab(&["mixing_validation", "--config", &cfg, "--seed-base", "40", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("mixing_validation.csv")).unwrap();
    let seeds: Vec<String> = body(&csv).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(seeds, ["40", "41", "40", "41"]);
}

#[test]
fn failed_points_become_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k.json",
        r#"{"n_qubits": 4, "gate_family": {"dual_unitary": [0.0, 0.4]}, "seeds": [3], "arnoldi_steps": 20, "ensemble_size": 4, "output_path": "coeffs.csv"}"#,
    );
    let out = qrc_lab(&["coeff_deviation", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("coeffs.csv")).unwrap();
    let text = body(&csv);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("0,3,") && rows[0].contains("error:"));
    assert!(rows[1..].iter().all(|r| r.starts_with("0.4,3,") && r.ends_with(",ok")));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("coeffs.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["error_rows"], 1);
}

#[test]
fn overlap_and_design_gap_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let cfg = write(dir.path(), "o.json", r#"{"n_qubits": 2, "multiplexing": 4, "seeds": [0], "samples": 20}"#);
    assert!(qrc_lab(&["overlap_saturation", "--config", &cfg, "--out", out_dir]).status.success());
    let csv = fs::read_to_string(dir.path().join("overlap_saturation.csv")).unwrap();
    assert_eq!(body(&csv).lines().count(), 1 + 4);

    let cfg = write(dir.path(), "d.json", r#"{"n_qubits": 4, "gate_family": {"solvable": 5}, "seeds": [1]}"#);
    assert!(qrc_lab(&["design_gap", "--config", &cfg, "--out", out_dir]).status.success());
    let csv = fs::read_to_string(dir.path().join("design_gap.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# haar_lambda3=")));
    assert_eq!(body(&csv).lines().count(), 1 + 5);
}

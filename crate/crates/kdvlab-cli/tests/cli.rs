use std::f64::consts::PI;
use std::process::{Command, Output};

fn kdvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdvlab")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

const ZERO: &str = r#"{"mean": 0, "modes": []}"#;
const ONE_MODE: &str = r#"{"mean": 0, "modes": [{"n": 1, "re": 0.1, "im": 0}]}"#;
const MODE_TWO: &str = r#"{"mean": 0, "modes": [{"n": 2, "re": 0.05, "im": 0}]}"#;

#[test]
fn free_spectrum_sits_at_squares() {
    let v = stdout_json(&kdvlab(&["spectrum", "--potential", ZERO, "--N", "8"]));
    assert_eq!(v["N"], 8);
    for n in 1..=8 {
        let target = (n * n) as f64 * PI * PI;
        for key in ["lambda_minus", "lambda_plus"] {
            let x = v[key][n - 1].as_f64().unwrap();
            assert!((x / target - 1.0).abs() < 1e-9, "{key}[{n}] = {x}");
        }
    }
}

#[test]
fn potential_can_be_read_from_a_file() {
    let dir = std::env::temp_dir().join(format!("kdvlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let pot = dir.join("onemode.json");
    std::fs::write(&pot, ONE_MODE).unwrap();
    let out_file = dir.join("spec.json");
    let out = kdvlab(&["spectrum", "--potential", pot.to_str().unwrap(), "--N", "3", "--out", out_file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert!(v["gamma"][0].as_f64().unwrap() > 0.19);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn frequency_table_as_csv() {
    let out = kdvlab(&["freq", "--potential", ONE_MODE, "--n", "1..8", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,I,omega1,omega1_star,omega2,omega2_star,tail");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    for (j, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (j + 1) as f64);
        let k = 2.0 * PI * r[0];
        assert!((r[2] - k.powi(3) - r[3]).abs() < 1e-9 * k.powi(3));
    }
}

#[test]
fn moment_tables_only_on_request() {
    let plain = stdout_json(&kdvlab(&["freq2", "--potential", ONE_MODE, "--N", "2"]));
    assert!(plain.get("moments").is_none());
    let full = stdout_json(&kdvlab(&["freq2", "--potential", ONE_MODE, "--N", "2", "--dump-moments"]));
    assert_eq!(full["moments"]["omega2"].as_array().unwrap().len(), 2);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["hamiltonians", "--potential", ONE_MODE, "--N", "4"];
    let a = kdvlab(&args);
    let b = kdvlab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    // 17 significant digits
    assert!(String::from_utf8(a.stdout).unwrap().contains("e-2"));
}

#[test]
fn crosscheck_agrees_on_the_second_mode() {
    let v = stdout_json(&kdvlab(&["crosscheck", "--potential", MODE_TWO, "--eq", "kdv", "--n", "2"]));
    assert_eq!(v["n"], 2);
    assert!(v["relative_difference"].as_f64().unwrap() < 0.01);
}

#[test]
fn resonance_certificate_is_empty_at_zero_mean() {
    let v = stdout_json(&kdvlab(&["resonance", "--A", "1,2", "--kmax", "6", "--window", "40"]));
    assert_eq!(v["offenders"].as_array().unwrap().len(), 0);
    assert_eq!(v["A"], serde_json::json!([1, 2]));
    assert_eq!(v["Kmax"], 6);
}

#[test]
fn normal_form_sections() {
    let v = stdout_json(&kdvlab(&["bnf", "--A", "1,2", "--comb", "6"]));
    let det = v["determinant"]["det"].as_f64().unwrap();
    assert!((det / -(160.0 * PI * PI).powi(2) - 1.0).abs() < 1e-12);
    assert_eq!(v["comb"]["xi_zero"], 0);
    let v = stdout_json(&kdvlab(&["bnf", "--actions", "0.001", "--eq", "kdv"]));
    let w = v["prediction"]["omega_bnf"][0].as_f64().unwrap();
    assert!((w - ((2.0 * PI).powi(3) - 0.006)).abs() < 1e-10);
    assert_eq!(kdvlab(&["bnf"]).status.code(), Some(2));
}

#[test]
fn flow_experiment_csv_columns() {
    let out = kdvlab(&["flow-exp", "--experiment", "kdv", "--m", "1..5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,input_gap,output_gap,verdict");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].ends_with(",pass"));
    assert!(lines[2].ends_with(",undesignated"));
}

#[test]
fn evolve_writes_json_lines() {
    let out = kdvlab(&["evolve", "--potential", ONE_MODE, "--eq", "airy", "--T", "1e-3", "--dt", "1e-4", "--M", "16", "--stride", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[2]["t"].as_f64().unwrap(), 1e-3);
    assert_eq!(lines[0]["re"].as_array().unwrap().len(), 8);
}

#[test]
fn sequence_suite_is_seeded() {
    let a = stdout_json(&kdvlab(&["seqtest", "--samples", "20", "--seed", "3"]));
    let b = stdout_json(&kdvlab(&["seqtest", "--samples", "20", "--seed", "3"]));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 3);
    assert_eq!(a["inf_product_violations"], 0);
}

#[test]
fn exit_codes() {
    // validation failures
    assert_eq!(kdvlab(&["spectrum", "--potential", "/nonexistent/q.json"]).status.code(), Some(2));
    assert_eq!(kdvlab(&["spectrum", "--potential", r#"{"mean": 0, "modes": [{"n": 0}]}"#]).status.code(), Some(2));
    assert_eq!(kdvlab(&["spectrum", "--bogus"]).status.code(), Some(2));
    assert_eq!(kdvlab(&["nonsense"]).status.code(), Some(2));
    assert_eq!(kdvlab(&["spectrum"]).status.code(), Some(2));
    assert_eq!(kdvlab(&["freq", "--potential", ZERO, "--N", "4", "--M", "2"]).status.code(), Some(2));
    assert_eq!(kdvlab(&["spectrum", "--potential", ZERO, "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(kdvlab(&["freq", "--potential", ZERO, "--n", "3..1"]).status.code(), Some(2));
    // numerical failure: explicit stepping of a huge state blows up
    let blowup = r#"{"mean": 0, "modes": [{"n": 1, "re": 1000, "im": 0}]}"#;
    let out = kdvlab(&["evolve", "--potential", blowup, "--T", "1", "--dt", "0.01", "--M", "16"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical"));
    assert_eq!(kdvlab(&["--help"]).status.code(), Some(0));
}

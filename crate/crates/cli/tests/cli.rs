use std::process::{Command, Output};

fn asis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asis")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example1_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = asis(&["example1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
    let csv = std::fs::read_to_string(dir.path().join("example1_f1_newton.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,x1,residual_norm,step_norm"));
    assert!(lines.next().unwrap().starts_with("0,0e0,"));
    let table = std::fs::read_to_string(dir.path().join("example1_log_errors.csv")).unwrap();
    assert!(table.starts_with("n,log10_error_newton,log10_error_steffensen,log10_error_asis\n"));
    assert!(dir.path().join("example1_summary.json").exists());
}

#[test]
fn example2_iteration_counts() {
    let out = asis(&["example2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let s = stdout(&out);
    assert!(s.contains("PASS steffensen first below 0.5"), "{s}");
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = asis(&["example3", "--out", d.path().to_str().unwrap(), "--seed", "none"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = asis(&["zigzag", "--b", "0.5", "--format", "json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("zigzag.json")).unwrap()).unwrap();
    assert_eq!(v["experiment"], "zigzag");
    assert_eq!(v["traces"][0]["method"], "asis");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn bounds_report_hypotheses_gate() {
    let out = asis(&["bounds-report", "--a", "0.6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypotheses not satisfied"));
    let out = asis(&["bounds-report", "--a", "0.6", "--override", "--system", "newton"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn bounds_report_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = asis(&["bounds-report", "--k2", "1", "--bound-b", "0.5", "--eta", "1", "--n", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = std::fs::read_to_string(dir.path().join("bounds-report_steffensen_bounds.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "n,a_n,b_n,c_n,d_n,r_n,d_n_eta,tail_eta");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,1e0,1.3333333333333333e0,1e0,"));
}

#[test]
fn unknown_experiment_rejected() {
    let out = asis(&["example7"]);
    assert_eq!(out.status.code(), Some(2));
    let out = asis(&["example1", "--seed", "42"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"experiment": "custom", "problem": "example3", "methods": ["newton", "asis"], "x0": [0.5, 0.5]}"#).unwrap();
    let out = asis(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS asis converges"));
    let out = asis(&["--config", path.to_str().unwrap(), "--method", "secant", "--x-prev", "0.4,0.4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("example3/secant"));
    std::fs::write(&path, r#"{"experiment": "custom", "shape": 3}"#).unwrap();
    assert_eq!(asis(&["--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    let out = asis(&["custom", "--method", "fixed-slope", "--lambda", "0.01", "--max-iter", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL fixed-slope converges"));
}

#[test]
fn custom_with_negative_start() {
    let out = asis(&["custom", "--method", "halley", "--x0", "-2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

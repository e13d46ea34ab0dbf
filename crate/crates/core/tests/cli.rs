use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_arrowroots");
const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn wilkinson(n: &str) -> String {
    let o = run(&["gen", "wilkinson", n], "");
    assert!(o.status.success());
    stdout(&o)
}

#[test]
fn wilkinson_pipeline_gives_integers() {
    let w = wilkinson("18");
    for strategy in ["auto", "derivative", "reciprocal"] {
        let o = run(&["solve", "--strategy", strategy], &w);
        assert!(o.status.success(), "{strategy}");
        let roots: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
        let want: Vec<f64> = (1..=18).rev().map(f64::from).collect();
        assert_eq!(roots, want, "{strategy}");
    }
}

#[test]
fn json_output_fields() {
    let o = run(&["solve", "--format", "json", "--verify", "--threads", "2"], &wilkinson("6"));
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 6);
    assert_eq!(roots[0]["value_hex"], "0x1.8p+2");
    assert_eq!(roots[5]["value_dec"], "1.0000000000000000e0");
    for r in roots {
        for key in ["k_b", "kappa_bound", "residual", "escalated"] {
            assert!(!r[key].is_null(), "{key}");
        }
    }
    assert_eq!(v["meta"]["degree"], 6);
    assert_eq!(v["diagnostics"]["d_points"].as_array().unwrap().len(), 5);
    assert!(v["diagnostics"]["k_alpha"].is_number());
    assert_eq!(v["verify"]["all_within_bound"], true);
}

#[test]
fn supplied_points_are_used() {
    let path = std::env::temp_dir().join(format!("arrowroots-points-{}.txt", std::process::id()));
    std::fs::write(&path, "2.5\n1.5\n").unwrap();
    let points = path.to_str().unwrap();
    let o = run(&["solve", "--points", points, "--format", "json"], "1\n-6\n11\n-6\n");
    std::fs::remove_file(&path).ok();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["diagnostics"]["strategy"], "supplied");
    let d: Vec<f64> = v["diagnostics"]["d_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["value"].as_f64().unwrap())
        .collect();
    assert_eq!(d, [2.5, 1.5]);
}

#[test]
fn non_interlacing_points_exit_2() {
    let coeffs = format!("{DATA}/example2.txt");
    let points = format!("{DATA}/example2_points.txt");
    let o = run(&["solve", "--coeffs", &coeffs, "--points", &points], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn complex_roots_exit_2() {
    let coeffs = format!("{DATA}/example2.txt");
    let o = run(&["solve", "--coeffs", &coeffs], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_input_exits_3() {
    assert_eq!(run(&["solve"], "1\nabc\n").status.code(), Some(3));
    assert_eq!(run(&["solve"], "1\n").status.code(), Some(3));
    assert_eq!(run(&["solve"], "0\n1\n").status.code(), Some(3));
    assert_eq!(run(&["solve", "--coeffs", "/nonexistent/file"], "").status.code(), Some(3));
}

#[test]
fn text_output_goes_to_stdout_and_diagnostics_to_stderr() {
    let o = run(&["solve"], "1\n0\n-4\n");
    assert!(o.status.success());
    assert_eq!(stdout(&o), "2.0000000000000000e0\n-2.0000000000000000e0\n");
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("# degree 2"));
}

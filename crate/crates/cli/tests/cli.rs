use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cr-orient"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_EDGE: &str = r#"{
  "schema": "cr-orient/1",
  "type": "complex",
  "generators": [{"id": "x", "grade": 1}, {"id": "y", "grade": 0}],
  "edges": [
    {"src": "x", "tgt": "y", "eps": 1, "delta": 1},
    {"src": "x", "tgt": "y", "eps": 1, "delta": -1}
  ]
}
"#;

#[test]
fn validate_accepts_a_complex() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", TWO_EDGE);
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("valid complex document"));
}

#[test]
fn validate_names_the_edge_with_a_grade_gap() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_EDGE.replace(r#""grade": 1"#, r#""grade": 2"#);
    let p = write(dir.path(), "c.json", &text);
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("edge 0 (x -> y) has grade gap 2"), "{err}");
    assert!(err.contains("edge 1 (x -> y) has grade gap 2"), "{err}");
    assert!(err.contains("6:5:"), "line and column of edge 0: {err}");
}

#[test]
fn validate_reports_the_non_orthogonal_sample() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"schema": "cr-orient/1", "type": "so_loop",
 "loop": {"kind": "samples", "samples": [
   [[1, 0], [0, 1]],
   [[0, -1], [1, 0]],
   [[2, 0], [0, 0.5]]
 ]}}"#;
    let p = write(dir.path(), "l.json", text);
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("sample 2"), "{err}");
    assert!(err.contains("/loop/samples/2"), "{err}");
    assert!(err.contains("5:4:"), "{err}");
}

#[test]
fn io_errors_differ_from_schema_errors() {
    let o = run(&["validate", "/nonexistent/input.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read /nonexistent/input.json"));
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.json", "{\"schema\": \"cr-orient/1\",\n  \"type\": 7}");
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema error"));
    assert!(!stderr(&o).contains("cannot read"));
}

#[test]
fn complex_command_reports_both_homologies() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", TWO_EDGE);
    let out = dir.path().join("out.json");
    let o = run(&["complex", p.to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("H(standard): H_0 = Z/2 H_1 = 0"), "{text}");
    assert!(text.contains("H(twisted): H_0 = Z H_1 = Z"), "{text}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["schema"], "cr-orient/1");
    assert_eq!(v["boundary"]["1"], serde_json::json!([[2]]));
    assert_eq!(v["twisted_boundary"]["1"], serde_json::json!([[0]]));
    assert_eq!(v["coboundary"], serde_json::Value::Null);
}

#[test]
fn spin_suite_passes() {
    let o = run(&["suite", "spin"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS [7] spin-lift"));
}

#[test]
fn low_resolution_is_rejected() {
    let o = run(&["suite", "orientation", "--resolution", "3,8,200"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("K = 3 < 4"), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"schema": "cr-orient/1", "type": "suite_config", "transport": {"K": 3, "L": 5, "Ns": 64}}"#,
    );
    let o = run(&["suite", "orientation", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/transport"), "{}", stderr(&o));
}

#[test]
fn reports_are_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"schema": "cr-orient/1", "type": "suite_config", "random_complexes": 40, "homotopy_trials": 40}"#,
    );
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let o = run(&["suite", "complex", "--seed", "17", "--config", cfg.to_str().unwrap(), "--json", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        reports.push(std::fs::read(out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let other = dir.path().join("c.json");
    run(&["suite", "complex", "--seed", "18", "--config", cfg.to_str().unwrap(), "--json", other.to_str().unwrap()]);
    assert_ne!(std::fs::read(other).unwrap(), reports[0]);
}

#[test]
fn cz_and_spin_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "s.json",
        r#"{"schema": "cr-orient/1", "type": "symmetric_loop", "loop": {"kind": "scalar", "n": 1, "c": -9.42477796076938}}"#,
    );
    let o = run(&["cz", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("CZ index -3"), "{}", stdout(&o));
    let p = write(
        dir.path(),
        "w.json",
        r#"{"schema": "cr-orient/1", "type": "so_loop", "loop": {"kind": "boundary", "unitary": {"kind": "named", "name": "W"}, "samples": 128, "pad": 1}}"#,
    );
    let o = run(&["spin", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "loop in SO(3): does not lift to Spin, delta -1\n");
}

#[test]
fn degenerate_loop_is_a_computation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "s.json",
        r#"{"schema": "cr-orient/1", "type": "symmetric_loop", "loop": {"kind": "scalar", "n": 1, "c": 0}}"#,
    );
    let o = run(&["cz", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("degenerate"));
}

#[test]
fn orient_conjugation_of_the_winding_gauge() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "u.json",
        r#"{"schema": "cr-orient/1", "type": "unitary", "unitary": {"kind": "named", "name": "W"}}"#,
    );
    let out = dir.path().join("o.json");
    let o = run(&["orient", "conjugation", p.to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["sign"], -1);
    assert_eq!(v["predicted"], -1);
    assert_eq!(v["kernel_dim"], 2);
}

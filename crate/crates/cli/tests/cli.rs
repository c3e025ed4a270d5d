use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morsefam"))
        .args(args)
        .env_remove("MORSEFAM_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn without_config(mut v: Value) -> Value {
    v.as_object_mut().expect("object").remove("config");
    v
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn klein_doc() -> Value {
    let family: Value = serde_json::from_str(include_str!(
        "../../core/tests/fixtures/klein_descriptor.json"
    ))
    .unwrap();
    json!({ "schema": "morsefam/1", "family": family })
}

#[test]
fn klein_pages_show_the_order_two_class() {
    let o = run(&[
        "compute",
        "--example",
        "klein",
        "--format",
        "csv",
        "--pages",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("page,i,j,free_rank,torsion\n"));
    assert!(text.lines().any(|l| l == "2,0,1,0,2"), "{text}");
    assert!(text.lines().any(|l| l == "inf,0,1,0,2"), "{text}");
}

#[test]
fn schema_errors_exit_2_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = klein_doc();
    doc["family"]["fiber_dim"] = json!("one");
    let p = write(dir.path(), "bad.json", &doc);
    let o = run(&["compute", "--input", &p]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("family.fiber_dim"));

    let mut doc = klein_doc();
    doc["schema"] = json!("morsefam/0");
    let p = write(dir.path(), "old.json", &doc);
    assert_eq!(code(&run(&["compute", "--input", &p])), 2);
}

#[test]
fn a_family_whose_differential_does_not_square_to_zero_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = klein_doc();
    for x in ["x0", "x1"] {
        doc["family"]["fibers"][x]["flows"][1]["count"] = json!(1);
    }
    // a single δ₁ block carrying only the fiber maximum
    let block = json!({
        "k": 1, "from_x": "x0", "to_y": "x1",
        "matrix": { "rows": 2, "cols": 2, "data": [[0, 0], [0, 1]] }
    });
    doc["family"]["blocks"] = json!([block]);
    let p = write(dir.path(), "d2.json", &doc);
    let o = run(&["compute", "--input", &p]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unsupported_requests_exit_5() {
    assert_eq!(code(&run(&["check", "poincare", "--example", "klein"])), 5);
    assert_eq!(code(&run(&["flowcount", "--bundle", "sphere_base_toy"])), 5);
}

#[test]
fn degenerate_fiber_function_exits_4() {
    assert_eq!(code(&run(&["flowcount", "--bundle", "tangency"])), 4);
}

#[test]
fn every_check_passes_on_its_default() {
    let o = run(&["check", "all"]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.lines().filter(|l| l.starts_with("PASS")).count() >= 10,
        "{err}"
    );
    assert!(!err.contains("FAIL"));
}

#[test]
fn seed_only_changes_the_recorded_config() {
    let a = stdout_json(&run(&["--seed", "7", "flowcount", "--bundle", "torus"]));
    let b = stdout_json(&run(&["--seed", "8", "flowcount", "--bundle", "torus"]));
    assert_eq!(a["config"]["seed"], json!(7));
    assert_eq!(a["family"], b["family"]);
    let a = stdout_json(&run(&["--seed", "1", "compute", "--example", "klein"]));
    let b = stdout_json(&run(&["--seed", "2", "compute", "--example", "klein"]));
    assert_eq!(without_config(a), without_config(b));
}

#[test]
fn shooting_tolerance_does_not_change_the_counts() {
    let a = stdout_json(&run(&[
        "flowcount",
        "--bundle",
        "klein",
        "--shoot-tol",
        "1e-8",
    ]));
    let b = stdout_json(&run(&[
        "flowcount",
        "--bundle",
        "klein",
        "--shoot-tol",
        "1e-10",
    ]));
    assert_eq!(a["family"], b["family"]);
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = run(&[
            "flowcount",
            "--bundle",
            "klein",
            "--emit",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn emitted_documents_are_valid_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("klein.json");
    let p = p.to_str().unwrap();
    assert_eq!(
        code(&run(&["flowcount", "--bundle", "klein", "--emit", p])),
        0
    );
    let from_file = stdout_json(&run(&["compute", "--input", p]));
    let builtin = stdout_json(&run(&["compute", "--example", "klein"]));
    assert_eq!(without_config(from_file), without_config(builtin));
}

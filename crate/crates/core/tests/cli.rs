use std::process::{Command, Output};

use serde_json::Value;

fn drm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drm")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn top_level(v: &Value) -> &Value {
    v["levels"].as_array().unwrap().last().unwrap()
}

#[test]
fn build_rational_four_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q4.json");
    let out = drm(&["build", "--field", "Q", "--conductor", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    let top = top_level(&v);
    assert_eq!(top["elements"].as_array().unwrap().len(), 4);
    assert_eq!(top["raw_pairs"], 8);
    // divisor tower 1 | 2 | 4
    assert_eq!(v["levels"].as_array().unwrap().len(), 3);
}

#[test]
fn build_by_norm_reaches_five() {
    let out = drm(&["build", "--field", "-4", "--conductor-norm", "25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let f = &top_level(&v)["conductor"];
    assert_eq!((f["a"].as_i64(), f["b"].as_i64(), f["c"].as_i64()), (Some(5), Some(0), Some(5)));
}

#[test]
fn orbit_cap_exits_three() {
    let out = drm(&["build", "--field", "-163", "--conductor", "100000", "--orbit-cap", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("orbit cap exceeded"), "{text}");
}

fn idempotent_rows(field: &str, conductor: &str) -> Vec<Value> {
    let out = drm(&["idempotents", "--field", field, "--conductor", conductor]);
    assert_eq!(out.status.code(), Some(0));
    top_level(&json(&out))["idempotents"].as_array().unwrap().clone()
}

#[test]
fn idempotent_tables() {
    let maximal = |rows: &[Value]| rows.iter().filter(|r| r["maximal"] == true).count();
    let q4 = idempotent_rows("Q", "4");
    assert_eq!((q4.len(), maximal(&q4)), (2, 1));
    let g10 = idempotent_rows("-4", "10");
    assert_eq!((g10.len(), maximal(&g10)), (8, 3));
    let q27 = idempotent_rows("Q", "27");
    assert_eq!((q27.len(), maximal(&q27)), (2, 1));
}

#[test]
fn table_format_is_plain_text() {
    let out = drm(&["idempotents", "--field", "-4", "--conductor", "10", "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(serde_json::from_str::<Value>(&text).is_err());
    assert!(text.contains("maximal") && text.contains("schema_version: 1"));
}

#[test]
fn verify_suites() {
    let out = drm(&["verify", "--suite", "idempotents", "--field", "Q", "--conductor", "12"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);

    let out = drm(&["verify", "--suite", "sigma", "--field", "-4", "--conductor-norm", "25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let checks = v["suites"][0]["checks"].as_array().unwrap();
    let unique: Vec<_> = checks.iter().filter(|c| c["name"] == "exactly one sigma").collect();
    assert!(unique.iter().all(|c| c["failures"] == 0));
    assert!(unique.iter().map(|c| c["checked"].as_u64().unwrap()).sum::<u64>() > 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(drm(&["verify", "--suite", "bogus", "--field", "Q", "--conductor", "4"]).status.code(), Some(2));
    assert_eq!(drm(&["build", "--field", "-8x", "--conductor", "4"]).status.code(), Some(2));
    assert_eq!(drm(&["build", "--field", "12", "--conductor", "4"]).status.code(), Some(2));
}

fn verdict(args: &[&str]) -> String {
    let out = drm(args);
    assert_eq!(out.status.code(), Some(0));
    json(&out)["verdict"].as_str().unwrap().to_string()
}

#[test]
fn compare_verdicts() {
    assert_eq!(
        verdict(&["compare", "--field", "-4", "--field", "-4", "--conductor-norm", "5,25"]),
        "indistinguishable-at-tested-levels"
    );
    assert_eq!(verdict(&["compare", "--field", "-4", "--field", "-3", "--conductor-norm", "25"]), "distinguished");
    assert_eq!(verdict(&["compare", "--field", "Q", "--field", "-4", "--conductor-norm", "65"]), "distinguished");
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "--suite", "all", "--field", "-7", "--conductor", "8", "--seed", "7", "--samples", "50"];
    let (a, b) = (drm(&args), drm(&args));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
}

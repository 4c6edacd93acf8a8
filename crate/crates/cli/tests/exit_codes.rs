use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/examples").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finsler-exit-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scenario(name: &str, text: &str) -> PathBuf {
    let path = scratch(name).join("scenario.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], scenario: &Path, out: Option<&Path>) -> Output {
    let mut c = bin();
    c.args(args).arg("--scenario").arg(scenario);
    if let Some(o) = out {
        c.arg("--out").arg(o);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const EUCLIDEAN_SINGLE: &str = r#"{"schema_version": 1, "id": "flat", "factors": [
  {"dim": 2, "chart": {"lower": [-1, -1], "upper": [1, 1]}, "family": "euclidean"}],
  "warpings": [], "sampling": {"count": 6, "seed": 1}"#;

#[test]
fn passing_scenario_exits_zero_and_writes_the_report() {
    let out = scratch("ok");
    let o = run(&["compute"], &example("product_euclidean.json"), Some(&out));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("product_euclidean.compute.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["command"], "compute");
}

#[test]
fn failed_expectation_exits_one() {
    let path = write_scenario("assert", &format!(r#"{EUCLIDEAN_SINGLE}, "expect": [{{"check": "norm_above", "tensor": "cartan", "bound": 1.0}}]}}"#));
    let o = run(&["compute"], &path, None);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn schema_violations_exit_two() {
    let unknown_field = write_scenario("field", &format!(r#"{EUCLIDEAN_SINGLE}, "colour": "blue"}}"#));
    assert_eq!(code(&run(&["compute"], &unknown_field, None)), 2);

    let bad_version = write_scenario("version", &format!("{EUCLIDEAN_SINGLE}}}").replace(r#""schema_version": 1"#, r#""schema_version": 9"#));
    assert_eq!(code(&run(&["classify"], &bad_version, None)), 2);

    let bad_expr = write_scenario("expr", &format!("{EUCLIDEAN_SINGLE}}}").replace(r#""family": "euclidean""#, r#""family": "custom_expr", "f_squared": "y1^2 + * y2""#));
    assert_eq!(code(&run(&["compute"], &bad_expr, None)), 2);

    let missing = scratch("missing").join("absent.json");
    assert_eq!(code(&run(&["compute"], &missing, None)), 2);
}

#[test]
fn unknown_tolerance_and_bad_flags_exit_two() {
    let path = write_scenario("tol", &format!("{EUCLIDEAN_SINGLE}}}"));
    assert_eq!(code(&run(&["compute", "--tol", "no_such_gate=1e-3"], &path, None)), 2);
    assert_eq!(code(&run(&["compute", "--tol", "zero_claim=abc"], &path, None)), 2);
    assert_eq!(code(&run(&["compute", "--order", "3"], &path, None)), 2);
    assert_eq!(code(&run(&["compute", "--format", "csv"], &path, None)), 2);
}

#[test]
fn admissibility_exhaustion_exits_three() {
    // F^2 is positive only on a sliver of the chart
    let path = write_scenario(
        "exhaust",
        r#"{"schema_version": 1, "id": "sliver", "factors": [
          {"dim": 2, "chart": {"lower": [-1, -1], "upper": [0.001, 1]}, "family": "custom_expr", "f_squared": "(y1^2 + y2^2)*x1"}],
          "warpings": [], "sampling": {"count": 10}}"#,
    );
    let o = run(&["compute"], &path, None);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exhausted"));
}

#[test]
fn csv_tables_are_written_next_to_the_report() {
    let out = scratch("csv");
    let o = run(&["classify", "--format", "csv"], &example("randers_single.json"), Some(&out));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("randers_single.classify.predicates.csv")).unwrap();
    assert!(table.starts_with("scope,predicate,residual,threshold,verdict,claim"));
    assert!(out.join("randers_single.classify.json").exists());
}

#[test]
fn seed_override_changes_the_samples() {
    let path = write_scenario("seed", &format!("{EUCLIDEAN_SINGLE}}}"));
    let a: serde_json::Value = serde_json::from_slice(&run(&["compute", "--seed", "1"], &path, None).stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&run(&["compute", "--seed", "2"], &path, None).stdout).unwrap();
    assert_eq!(a["config"]["scenario"]["sampling"]["seed"], 1);
    assert_ne!(a["results"]["samples"], b["results"]["samples"]);
}

#[test]
fn schema_subcommand_prints_both_schemas() {
    for args in [&["schema"][..], &["schema", "--family"][..]] {
        let o = bin().args(args).output().unwrap();
        assert_eq!(code(&o), 0);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(v["properties"]["schema_version"].is_object());
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(name)
}

fn martykit(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_martykit"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

/// Write `text` as a config file inside `dir` and run it with output to
/// `dir/out`.
fn run_text(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let config = dir.join("config.json");
    fs::write(&config, text).unwrap();
    martykit(&config, &dir.join("out"), extra)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn without_runtime(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.contains("\"runtime_ms\""))
        .collect()
}

#[test]
fn constant_function_passes_with_zero_residual() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_text(
        tmp.path(),
        r#"{"command": "fft-check", "function": {"num": [[2, 0]]}, "geometry": {"r": 0.5}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["verdict"], "pass");
    assert!(s["residuals"]["max_abs_residual"].as_f64().unwrap() < 1e-12);
    for key in ["command", "params", "verdict", "residuals", "runtime_ms"] {
        assert!(s.get(key).is_some(), "summary lacks {key}");
    }
}

#[test]
fn contract_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // n-independent family: the quotient does not decay
    let out = run_text(
        tmp.path(),
        r#"{"command": "theorem2b", "family": {"kind": "power_pole", "p": 2, "indices": [1,2,3,4,5,6,7,8]},
            "disk": {"radius": 0.5}, "params": {"k": 1, "p": 2}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let dir = tmp.path().join("out");
    assert_eq!(summary(&dir)["verdict"], "fail");
    let csv = fs::read_to_string(dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",sup_d,")).count(), 8);
}

#[test]
fn malformed_json_reports_position() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_text(
        tmp.path(),
        "{\"command\": \"fft-check\",\n  \"geometry\": }",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn invalid_fields_are_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [
        r#"{"command": "nope"}"#,
        r#"{"command": "harnack", "extra": 1}"#,
        r#"{"command": "theorem2a", "disk": {"radius": 0.5}}"#,
        r#"{"command": "fft-check", "function": {"num": [[1, 0]], "den": [[0, 0]]}, "geometry": {"r": 0.5}}"#,
        r#"{"command": "estimates", "geometry": {"r": 0.9, "R": 0.5}, "params": {"k": 1, "m": 1}, "suite": {"count": 1}}"#,
    ] {
        let out = run_text(tmp.path(), text, &[]);
        assert_eq!(out.status.code(), Some(2), "config {text}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_config_file_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = martykit(&tmp.path().join("absent.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        r#"{"command": "expansion-dump", "params": {"k": 2}}"#,
    )
    .unwrap();
    let out = martykit(&config, &blocker.join("sub"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_without_records_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_text(
        tmp.path(),
        r#"{"command": "expansion-dump", "params": {"k": 1}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("out/results.csv")).unwrap();
    assert_eq!(csv, "index,quantity,value,bound,margin\n");
}

#[test]
fn expansion_dump_of_second_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_text(
        tmp.path(),
        r#"{"command": "expansion-dump", "params": {"k": 2}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let table: Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/expansion_k2.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        table["terms"],
        serde_json::json!([{"l": 2, "parts": [1, 1], "coefficient": 1}])
    );
}

#[test]
fn overrides_reach_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_text(
        tmp.path(),
        r#"{"command": "counting-check", "suite": {"count": 4}, "seed": 1}"#,
        &["--seed", "99", "--tol", "1e-3"],
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["params"]["seed"], 99);
    assert_eq!(s["params"]["tolerance"], 1e-3);
}

#[test]
fn batch_without_output_names_uses_numbered_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_text(
        tmp.path(),
        r#"[{"command": "expansion-dump", "params": {"k": 2}},
            {"command": "fft-check", "function": {"num": [[2, 0]]}, "geometry": {"r": 0.5}}]"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let dir = tmp.path().join("out");
    assert!(dir
        .join("scenario_000_expansion-dump/summary.json")
        .exists());
    assert!(dir.join("scenario_001_fft-check/summary.json").exists());
}

#[test]
fn identical_runs_give_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture("fixtures/corpus.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(martykit(&config, &a, &[]).status.code(), Some(0));
    assert_eq!(martykit(&config, &b, &[]).status.code(), Some(0));
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        for file in ["results.csv", "summary.json"] {
            let x = fs::read_to_string(a.join(&name).join(file)).unwrap();
            let y = fs::read_to_string(b.join(&name).join(file)).unwrap();
            assert_eq!(without_runtime(&x), without_runtime(&y), "{name:?}/{file}");
        }
    }
}

/// Set `MARTYKIT_BLESS=1` to rewrite the golden files after an intended
/// change.
#[test]
fn corpus_matches_golden_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let out = martykit(&fixture("fixtures/corpus.json"), tmp.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let golden = fixture("golden");
    let bless = std::env::var_os("MARTYKIT_BLESS").is_some();
    let mut compared = 0;
    for entry in fs::read_dir(tmp.path()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        let actual = fs::read_to_string(tmp.path().join(&name).join("summary.json")).unwrap();
        let path = golden.join(format!("{name}.json"));
        if bless {
            fs::write(&path, &actual).unwrap();
        }
        let expected = fs::read_to_string(&path).unwrap();
        assert_eq!(
            without_runtime(&actual),
            without_runtime(&expected),
            "{name}"
        );
        compared += 1;
    }
    assert_eq!(compared, 15);
    let table = fs::read_to_string(tmp.path().join("expansion_k3/expansion_k3.json")).unwrap();
    let path = golden.join("expansion_k3.table.json");
    if bless {
        fs::write(&path, &table).unwrap();
    }
    assert_eq!(table, fs::read_to_string(path).unwrap());
}

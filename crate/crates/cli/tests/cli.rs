//! End-to-end tests of the installed binary: argument handling, config
//! files, output formats, exit codes, and output determinism.

use std::process::Command;

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_gorshift"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        String::from_utf8(out.stderr).expect("stderr is UTF-8"),
        out.status.code().expect("exit code present"),
    )
}

fn json(stdout: &str) -> serde_json::Value {
    serde_json::from_str(stdout).expect("stdout is JSON")
}

#[test]
fn dim_prints_json_and_exits_zero() {
    let (stdout, stderr, code) = run(&["dim", "Z_(p)[T:0]"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let v = json(&stdout);
    assert_eq!(v["dim"], 2);
}

#[test]
fn dim_at_a_prime_reports_the_formula_status() {
    let (stdout, _, code) = run(&["dim", "Z_(p)[T:0]", "--prime", "(pi*T-1)"]);
    assert_eq!(code, 0);
    let v = json(&stdout);
    assert_eq!(v["ht"], 1);
    assert_eq!(v["coht"], 0);
    assert_eq!(v["dimension_formula_holds"], false);
}

#[test]
fn shift_reports_cases_scope_and_trace() {
    let (stdout, _, code) = run(&["shift", "Z[v:2]"]);
    assert_eq!(code, 0);
    let v = json(&stdout);
    assert_eq!(v["scope"], "maximal ideals only");
    assert_eq!(v["cases"][0]["else"], -2);
    assert!(v["trace"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn verify_failure_exits_one_but_still_prints_the_certificate() {
    let (stdout, stderr, code) = run(&["verify", "F_2[x:-2,y:-2]/(x^2,x*y)", "--nu", "0"]);
    assert_eq!(code, 1);
    let v = json(&stdout);
    assert_eq!(v["match"], false);
    assert!(stderr.contains("verification failed"));
}

#[test]
fn verify_success_prints_the_exact_certificate_shape() {
    let (stdout, _, code) =
        run(&["verify", "F_2[x:-2]/(x^4)", "--nu", "-6", "--window", "-12..4"]);
    assert_eq!(code, 0);
    let v = json(&stdout);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["match", "nu", "truncation", "vanishing", "window"]);
    assert_eq!(v["vanishing"], true);
    assert_eq!(v["match"], true);
    assert_eq!(v["nu"], -6);
    assert_eq!(v["window"], serde_json::json!([-12, 4]));
}

#[test]
fn malformed_input_exits_two() {
    let (_, stderr, code) = run(&["dim", "Z[["]);
    assert_eq!(code, 2);
    assert!(stderr.contains("cannot parse ring"));

    let (_, _, code) = run(&["shift", "Z[v:2]", "--prime", "(w)"]);
    assert_eq!(code, 2);

    let (_, stderr, code) = run(&["verify", "F_2[x:-2]", "--nu", "2", "--window", "nonsense"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("lo..hi"));

    let (_, _, code) = run(&["verify", "F_2[x:-2]"]);
    assert_eq!(code, 2, "missing --nu must be an input error");
}

#[test]
fn exhausted_truncation_budget_exits_three() {
    // At a fixed truncation of one, the free line's ranks have not yet
    // stabilized, which is a resource refusal rather than a refutation.
    let (_, stderr, code) = run(&["verify", "F_2[x:-2]", "--nu", "2", "--truncation", "1"]);
    assert_eq!(code, 3, "stderr: {stderr}");
    assert!(stderr.contains("stabilize"));
}

#[test]
fn table_runs_are_byte_identical_and_clean() {
    let (first, stderr, code) = run(&["table"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let (second, _, _) = run(&["table"]);
    assert_eq!(first, second);
    let rows = json(&first);
    assert_eq!(rows.as_array().unwrap().len(), 13);
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("gorshift-test-{}.conf", std::process::id()));
    std::fs::write(&path, "ring = Z[v:2]\nformat = markdown\n").unwrap();
    let path = path.to_str().unwrap();

    // Ring and format both come from the file.
    let (stdout, stderr, code) = run(&["shift", "--config", path]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.starts_with("- **"), "markdown expected, got: {stdout}");

    // An explicit flag overrides the file's format.
    let (stdout, _, code) = run(&["shift", "--config", path, "--format", "json"]);
    assert_eq!(code, 0);
    assert_eq!(json(&stdout)["scope"], "maximal ideals only");

    let (_, _, code) = run(&["shift", "--config", "/nonexistent/gorshift.conf"]);
    assert_eq!(code, 2);

    std::fs::remove_file(path).unwrap();
}

#[test]
fn markdown_table_has_one_line_per_row_plus_header() {
    let (stdout, _, code) = run(&["table", "--format", "markdown"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 15); // header + separator + 13 rows
    assert!(stdout.lines().all(|l| l.starts_with('|')));
}

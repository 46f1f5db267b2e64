//! End-to-end tests of the compiled binary: pinned table rows, format and
//! config plumbing, exit-code classes, and golden byte stability.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ultrawalk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

#[test]
fn time_average_emits_the_pinned_rationals() {
    let out = run(&["time-average", "--p", "3", "--M", "2"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "entity,class_k,class_size,rep_site,value_float,value_exact\n\
         class,0,1,0,0.5061728395061729,41/81\n\
         class,1,2,1,0.1728395061728395,14/81\n\
         class,2,6,3,0.024691358024691357,2/81\n"
    );
}

#[test]
fn hypercube_four_emits_the_pinned_classes() {
    let out = run(&["graph", "--family", "hypercube", "--N", "4", "--time-average"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for row in [
        "class,0,1,,0.2734375,35/128",
        "class,1,4,,0.0390625,5/128",
        "class,2,6,,0.0234375,3/128",
    ] {
        assert!(text.contains(row), "missing {row:?} in:\n{text}");
    }
}

#[test]
fn evolve_at_time_zero_is_a_point_mass() {
    let out = run(&["evolve", "--p", "3", "--M", "2", "--eps", "2,1", "--t", "0"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "entity,class_k,class_size,rep_site,value_float,value_exact\n\
         class,0,1,0,1,\n\
         class,1,2,1,0,\n\
         class,2,6,3,0,\n"
    );
}

#[test]
fn json_envelope_is_versioned_and_mirrors_the_rows() {
    let out = run(&["time-average", "--p", "3", "--M", "2", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "time-average");
    let rows = v["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["value_exact"], "41/81");
    assert_eq!(rows[2]["class_size"], 6);
    assert_eq!(rows[1]["rep_site"], 1);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let a = run(&["compare", "--what", "distance"]);
    let b = run(&["compare", "--what", "distance"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);

    let c = run(&["spectrum", "--p", "5", "--M", "2", "--eps", "3.5,0.25"]);
    let d = run(&["spectrum", "--p", "5", "--M", "2", "--eps", "3.5,0.25"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("walk.toml");
    std::fs::write(
        &path,
        "[defaults]\np = 3\nM = 2\neps = [2.0, 1.0]\nformat = \"json\"\n",
    )
    .expect("write config");
    let cfg = path.to_str().expect("utf-8 path");

    // Everything from the config: spectrum of the frozen example, as JSON.
    let out = run(&["spectrum", "--config", cfg]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    let etas: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value_float"].as_f64().unwrap())
        .collect();
    assert_eq!(etas, vec![-12.0, -9.0, 0.0]);

    // A flag beats the config: M = 1 shrinks the table and csv beats json.
    let out = run(&["time-average", "--config", cfg, "--M", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("entity,class_k"));
    assert!(text.contains("class,0,1,0,") && text.contains("5/9"));
    assert_eq!(text.lines().count(), 3, "M = 1 has two classes:\n{text}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("walk.toml");
    std::fs::write(&path, "[defaults]\npp = 3\n").expect("write config");
    let out = run(&["time-average", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[validation]:"));
}

#[test]
fn dense_cap_env_var_turns_into_a_resource_exit() {
    let out = bin()
        .args(["evolve", "--p", "3", "--M", "2", "--eps", "2,1", "--t", "1", "--self-check"])
        .env("ULTRAWALK_DENSE_CAP", "8")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.starts_with("error[resource]:"), "got: {err}");
    // The cap and the requested size are both surfaced.
    assert!(err.contains('8') && err.contains('9'), "got: {err}");
    assert_eq!(err.trim_end().lines().count(), 1, "one line only: {err}");
}

#[test]
fn invalid_dense_cap_env_var_is_a_validation_error() {
    let out = bin()
        .args(["time-average", "--p", "3", "--M", "2"])
        .env("ULTRAWALK_DENSE_CAP", "many")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ULTRAWALK_DENSE_CAP"));
}

#[test]
fn validation_errors_are_single_line_and_exit_two() {
    // Increasing couplings violate the model invariant.
    let out = run(&["spectrum", "--p", "3", "--M", "2", "--eps", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error[validation]:"), "got: {err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(out.stdout.is_empty(), "nothing emitted on validation failure");

    // Missing required flag goes through the same single-line funnel.
    let out = run(&["evolve", "--p", "3", "--M", "2", "--eps", "2,1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error[validation]:") && err.contains("--t"), "got: {err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn self_check_disagreement_exits_four_but_still_emits() {
    // An impossible tolerance forces the oracle comparison to fail without
    // anything actually being wrong.
    let out = run(&[
        "evolve", "--p", "3", "--M", "2", "--eps", "2,1", "--t", "5", "--self-check",
        "--tol", "1e-30",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = stderr(&out);
    assert!(err.starts_with("error[numerical]:"), "got: {err}");
    assert!(stdout(&out).starts_with("entity,class_k"), "table still emitted");
}

#[test]
fn self_checks_pass_at_documented_tolerances() {
    for args in [
        vec!["spectrum", "--p", "3", "--M", "3", "--eps", "4,2,1", "--self-check"],
        vec![
            "time-average", "--p", "3", "--M", "2", "--eps", "2,1", "--numeric",
            "--t-max", "2000", "--self-check",
        ],
        vec!["classical", "--p", "3", "--M", "2", "--eps", "2,1", "--t", "0.8", "--self-check"],
        vec!["mean-distance", "--p", "3", "--M", "2", "--self-check"],
        vec!["limit", "--p", "3", "--M", "6", "--self-check"],
    ] {
        let out = run(&args);
        assert!(
            out.status.success(),
            "{args:?} failed: {} {}",
            out.status,
            stderr(&out)
        );
    }
}

#[test]
fn compare_gap_reports_exact_identities() {
    let out = run(&["compare", "--what", "gap"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for p in [2, 3, 5] {
        assert!(text.contains(&format!("gap p={p}.exact,,,,1,")), "p={p} row in:\n{text}");
    }
}

#[test]
fn compare_with_impossible_tolerance_exits_four() {
    let out = run(&["compare", "--what", "average", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(4));
    let err = stderr(&out);
    assert!(err.starts_with("error[numerical]:"), "got: {err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(stdout(&out).contains("average"), "rows still emitted");
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("table.csv");
    let to_stdout = run(&["limit", "--p", "2", "--M", "3"]);
    assert!(to_stdout.status.success());
    let to_file = run(&["limit", "--p", "2", "--M", "3", "--out", path.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let written = std::fs::read(&path).expect("file written");
    assert_eq!(written, to_stdout.stdout);
}

#[test]
fn composite_p_warns_on_stderr_but_succeeds() {
    let out = run(&["time-average", "--p", "4", "--M", "2"]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("composite"));
    assert!(stdout(&out).starts_with("entity,class_k"));
}

#[test]
fn landscape_flags_generate_admissible_couplings() {
    let out = run(&[
        "spectrum", "--p", "2", "--M", "3", "--kind", "exponential", "--alpha", "0.5",
        "--self-check",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    // eta_M = 0 under the default diagonal, whatever the landscape.
    let text = stdout(&out);
    assert!(text.lines().last().unwrap().starts_with("mode,3,1,,0"), "got:\n{text}");
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert!(help.status.success());
    assert!(stdout(&help).contains("time-average"));
    let version = run(&["--version"]);
    assert!(version.status.success());
}

fn file_exists(p: &str) -> bool {
    Path::new(p).exists()
}

#[test]
fn binary_path_sanity() {
    // If this fails the harness changed under us; every other test depends
    // on the compiled artifact.
    assert!(file_exists(env!("CARGO_BIN_EXE_ultrawalk")));
}

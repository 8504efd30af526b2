//! Black-box tests of the compiled binary: file round-trips, output shapes,
//! and the exit-code contract (0 success, 1 failed check or runtime error,
//! 2 usage error).

use std::path::Path;
use std::process::{Command, Output};

use curvelab::dyadic::{DyadicSet, GridParams};
use curvelab::generators::self_similar;

fn curvelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn gen_set(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let path = path.to_str().unwrap().to_owned();
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    let out = curvelab(&full);
    assert_eq!(code(&out), 0, "gen failed: {out:?}");
    path
}

#[test]
fn generated_set_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_set(
        dir.path(),
        "ss.set",
        &["--mode", "self-similar", "--N", "2", "--L", "7", "--keep", "0,2"],
    );
    let from_file = DyadicSet::read_from(Path::new(&path)).unwrap();
    let direct = self_similar(GridParams::new(2, 7).unwrap(), &[0, 2]).unwrap();
    assert_eq!(from_file.to_rle_string(), direct.to_rle_string());

    // Branching generation is pinned by its seed.
    let a = gen_set(
        dir.path(),
        "b1.set",
        &["--mode", "branching", "--N", "1", "--L", "9", "--p", "0.7", "--seed", "11"],
    );
    let b = gen_set(
        dir.path(),
        "b2.set",
        &["--mode", "branching", "--N", "1", "--L", "9", "--p", "0.7", "--seed", "11"],
    );
    assert_eq!(
        std::fs::read_to_string(a).unwrap(),
        std::fs::read_to_string(b).unwrap()
    );
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(code(&curvelab(&["no-such-subcommand"])), 2);
    assert_eq!(code(&curvelab(&["gen", "--mode", "full", "--bogus-flag"])), 2);
    assert_eq!(code(&curvelab(&["sweep", "--param", "bogus"])), 2);
    assert_eq!(code(&curvelab(&["--help"])), 0);
    assert_eq!(code(&curvelab(&["--version"])), 0);
}

#[test]
fn runtime_and_check_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    // Missing input file.
    let out = curvelab(&["content", "--set", "/nonexistent.set", "--s", "0.5"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty(), "runtime errors report on stderr");

    // A near-empty set fails the pipeline's first stage with a clean
    // stage-labeled diagnostic and exit 1.
    let single = gen_set(
        dir.path(),
        "single.set",
        &["--mode", "self-similar", "--N", "1", "--L", "6", "--keep", "0"],
    );
    let out = curvelab(&["verify", "--set", &single, "--pipeline", "endtoend", "--curve", "t2"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("\"stage\":\"good_cube\""), "{text}");
    assert!(text.contains("\"pass\":false"), "{text}");
}

#[test]
fn verify_reports_are_versioned_json() {
    let dir = tempfile::tempdir().unwrap();
    let full = gen_set(dir.path(), "full.set", &["--mode", "full", "--N", "1", "--L", "12"]);

    let out = curvelab(&["verify", "--set", &full, "--pipeline", "spectral", "--T", "6"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("{\"schema\":1,"), "{text}");
    for needle in [
        "\"pipeline\":\"spectral\"",
        "\"label\":\"total_mass_error\"",
        "\"label\":\"frostman_ratio\"",
        "\"fit\":",
        "\"gap\":",
        "\"pass\":true",
    ] {
        assert!(text.contains(needle), "missing {needle} in {text}");
    }

    // --out sends the report to the file and keeps stdout quiet.
    let report = dir.path().join("verify.json");
    let out = curvelab(&[
        "verify", "--set", &full, "--pipeline", "spectral", "--T", "6",
        "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).is_empty());
    assert!(std::fs::read_to_string(report).unwrap().contains("\"schema\":1"));
}

#[test]
fn search_emits_witness_rows_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let full = gen_set(dir.path(), "full.set", &["--mode", "full", "--N", "1", "--L", "8"]);
    let out = curvelab(&["search", "--set", &full, "--curve", "t2", "--max", "12"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,lambda,p1,p2,p3,separation"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    for row in rows {
        let fields: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields.len(), 7);
        // Point columns are consistent with the anchor and shift columns.
        assert_eq!(fields[3], fields[0]);
        assert!((fields[4] - (fields[0] - fields[1])).abs() < 1e-15);
    }
}

#[test]
fn sweep_tabulates_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let full = gen_set(dir.path(), "full.set", &["--mode", "full", "--N", "1", "--L", "12"]);
    let out = curvelab(&[
        "sweep", "--set", &full, "--param", "T", "--values", "4,6",
        "--metric", "gap-integral",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,gap_integral");
    assert_eq!(lines.len(), 3);
    let v4: f64 = lines[1].strip_prefix("4,").unwrap().parse().unwrap();
    let v6: f64 = lines[2].strip_prefix("6,").unwrap().parse().unwrap();
    assert!(v6 <= v4, "deeper gap should not raise the integral");
}

#[test]
fn measure_files_feed_back_into_the_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let full = gen_set(dir.path(), "full.set", &["--mode", "full", "--N", "1", "--L", "10"]);
    let measure = dir.path().join("gap.measure");
    let out = curvelab(&[
        "measure", "--set", &full, "--mode", "spectral", "--T", "4",
        "--out", measure.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"mode\":\"spectral\""));

    let out = curvelab(&[
        "configint", "--measure", measure.to_str().unwrap(),
        "--curve", "t2", "--ell", "4", "--A", "2", "--B", "4",
    ]);
    assert_eq!(code(&out), 0, "identity check failed: {out:?}");
    let text = stdout(&out);
    assert!(text.contains("\"identity_pass\":true"), "{text}");

    // The ladder mode reports one rung per requested scale.
    let out = curvelab(&[
        "configint", "--set", &full, "--curve", "t2", "--ell", "4",
        "--eps-ladder", "3..5",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.matches("\"k\":").count(), 3, "{text}");
}

#[test]
fn content_reports_value_cover_and_level_table() {
    let dir = tempfile::tempdir().unwrap();
    let full = gen_set(dir.path(), "full.set", &["--mode", "full", "--N", "1", "--L", "6"]);
    let table = dir.path().join("levels.csv");
    let out = curvelab(&[
        "content", "--set", &full, "--s", "1.0",
        "--levels", table.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("\"value\":1.0000000000000000e0"), "{text}");
    assert!(text.contains("\"cover\":[{\"level\":0,\"index\":0}]"), "{text}");
    let table = std::fs::read_to_string(table).unwrap();
    assert_eq!(table.lines().next(), Some("level,max_ratio,argmax_index"));
    assert_eq!(table.lines().count(), 8, "one row per level plus header");
}

//! End-to-end tests that spawn the compiled `oritrans` binary and check its
//! JSON output, artifact files, and exit codes.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use oritrans::coefficients::NormSpec;
use oritrans::currents::mass;
use oritrans::io::{self, SolveResultDto};

const EXIT_OK: i32 = 0;
const EXIT_VIOLATED: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_BUDGET: i32 = 3;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oritrans"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

/// Path of a bundled demo file under the workspace-level `instances/` dir.
fn demo(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn data(name: &str) -> String {
    common::data_dir().join(name).to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout should be JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn write_temp(dir: &tempfile::TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, contents).expect("temp file should be writable");
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_square_steiner_reports_the_branched_optimum() {
    let out = run(&["solve", &demo("square_steiner.json")]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "steiner");
    let value = v["value"].as_f64().expect("value should be a number");
    assert!((value - common::square_optimum()).abs() <= 1e-4, "value {value}");
    assert!(v["forest"].is_object(), "steiner results should carry a forest");
    assert!(v["gap"].is_null(), "plain solves should not carry a gap");
}

#[test]
fn solve_zero_demand_mailing_routes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_temp(
        &dir,
        "idle.json",
        &json!({
            "kind": "mailing",
            "points": [[0, 0], [5, 0]],
            "matrix": [[0, 0], [0, 0]],
        })
        .to_string(),
    );
    let out = run(&["solve", &inst]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    assert_eq!(v["value"].as_f64(), Some(0.0));
    assert_eq!(v["current"]["atoms"].as_array().map(Vec::len), Some(0));
}

#[test]
fn solve_rejects_an_instance_over_the_terminal_budget() {
    let dir = tempfile::tempdir().unwrap();
    let points: Vec<[i64; 2]> = (0..7).map(|i| [i, i * i]).collect();
    let inst = write_temp(
        &dir,
        "big.json",
        &json!({
            "kind": "steiner",
            "points": points,
            "partition": [[0, 1, 2, 3, 4, 5, 6]],
        })
        .to_string(),
    );
    let out = run(&["solve", &inst]);
    assert_eq!(out.status.code(), Some(EXIT_BUDGET));
    assert!(out.stdout.is_empty(), "no result JSON on failure");
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn raising_the_budget_flag_unlocks_a_larger_group() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_temp(
        &dir,
        "seven.json",
        &json!({
            "kind": "steiner",
            "points": [[0, 0], [2, 0], [4, 0], [6, 0], [8, 0], [10, 0], [12, 0]],
            "partition": [[0, 1, 2, 3, 4, 5, 6]],
        })
        .to_string(),
    );
    let out = run(&["solve", &inst, "--budget-group-terminals", "7"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    // seven collinear points connect along the shared line
    let value = v["value"].as_f64().unwrap();
    assert!((value - 12.0).abs() <= 1e-6, "value {value}");
}

#[test]
fn malformed_json_exits_with_the_invalid_input_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(&dir, "broken.json", "{ this is not json");
    let out = run(&["solve", &path]);
    assert_eq!(out.status.code(), Some(EXIT_INVALID));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn missing_input_file_exits_with_the_invalid_input_code() {
    let out = run(&["solve", "/nonexistent/nowhere.json"]);
    assert_eq!(out.status.code(), Some(EXIT_INVALID));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nowhere.json"), "stderr should name the file: {err}");
}

#[test]
fn verify_accepts_the_bundled_three_terminal_certificate() {
    let out = run(&["verify", &data("fermat_certificate.json"), &data("fermat_current.json")]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"]["status"], "calibrated");
    assert_eq!(v["closed"], true);
    assert!(v["comass_bound"].as_f64().unwrap() <= 1.0 + 1e-12);
}

#[test]
fn verify_rejects_every_bundled_square_certificate() {
    let dir = common::data_dir().join("square_certificates");
    let mut names: Vec<PathBuf> =
        fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 4, "expected the bundled counterexample set");
    for cert in names {
        let out = run(&[
            "verify",
            &cert.to_string_lossy(),
            &data("square_current.json"),
        ]);
        assert_eq!(out.status.code(), Some(EXIT_VIOLATED), "{}", cert.display());
        let v = stdout_json(&out);
        assert_eq!(v["verdict"]["status"], "violated", "{}", cert.display());
    }
}

#[test]
fn verify_rejects_a_file_of_the_wrong_shape() {
    // a current file is not a certificate; the parse error must not panic
    let out = run(&["verify", &data("fermat_current.json"), &data("fermat_current.json")]);
    assert_eq!(out.status.code(), Some(EXIT_INVALID));
}

/// One straight channel carrying two units forward and one unit back, priced
/// with the default concave cost: the family and its merged current must
/// price identically, and lifting/projecting must round-trip the value.
#[test]
fn convert_chain_prices_family_current_and_lift_identically() {
    let dir = tempfile::tempdir().unwrap();
    let family = write_temp(
        &dir,
        "family.json",
        &json!({
            "instance": {
                "points": [[0, 0], [4, 0]],
                "matrix": [[0, 2], [1, 0]],
            },
            "paths": [
                { "commodity": [0, 1], "vertices": [[0, 0], [4, 0]] },
                { "commodity": [0, 1], "vertices": [[0, 0], [4, 0]] },
                { "commodity": [1, 0], "vertices": [[4, 0], [0, 0]] },
            ],
        })
        .to_string(),
    );

    let expected = 4.0 * (1.0 + 2.0f64.sqrt()); // (sqrt(2) + sqrt(1)) * length

    let to_current = run(&["convert", &family, "--to", "current"]);
    assert_eq!(to_current.status.code(), Some(EXIT_OK));
    let v = stdout_json(&to_current);
    assert_eq!(v["direction"], "family-to-current");
    let before = v["value_before"].as_f64().unwrap();
    let after = v["value_after"].as_f64().unwrap();
    assert!((before - expected).abs() <= 1e-9, "family energy {before}");
    assert!((after - before).abs() <= 1e-12, "merged current disagrees");

    // lift the converted current into one-coordinate-per-unit form
    let with_instance = write_temp(&dir, "current.json", &v["output"].to_string());
    let lifted = run(&["convert", &with_instance, "--to", "lift"]);
    assert_eq!(lifted.status.code(), Some(EXIT_OK));
    let lv = stdout_json(&lifted);
    let lifted_mass = lv["value_after"].as_f64().unwrap();
    assert!((lifted_mass - expected).abs() <= 1e-9, "lifted mass {lifted_mass}");

    // wrap the lifted current with the instance and project it back down
    let wrapped = write_temp(
        &dir,
        "lifted.json",
        &json!({
            "instance": { "points": [[0, 0], [4, 0]], "matrix": [[0, 2], [1, 0]] },
            "current": lv["output"],
        })
        .to_string(),
    );
    let projected = run(&["convert", &wrapped, "--to", "project"]);
    assert_eq!(projected.status.code(), Some(EXIT_OK));
    let pv = stdout_json(&projected);
    let round_tripped = pv["value_after"].as_f64().unwrap();
    assert!((round_tripped - expected).abs() <= 1e-9, "projection {round_tripped}");
    assert_eq!(
        pv["output"]["current"], v["output"]["current"],
        "projecting the lift should restore the merged current exactly"
    );
}

#[test]
fn convert_family_direction_reports_dropped_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_temp(
        &dir,
        "with_instance.json",
        &json!({
            "instance": { "points": [[0, 0], [4, 0]], "matrix": [[0, 1], [0, 0]] },
            "current": {
                "m": 4,
                "ring": "int",
                "atoms": [
                    { "a": [0, 0], "b": [4, 0], "coef": [0.0, 1.0, 0.0, 0.0] }
                ],
            },
        })
        .to_string(),
    );
    let out = run(&["convert", &file, "--to", "family"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    assert_eq!(v["direction"], "current-to-family");
    assert_eq!(v["dropped_cycle_length"].as_f64(), Some(0.0));
    assert_eq!(v["output"]["paths"].as_array().map(Vec::len), Some(1));
}

#[test]
fn convert_tree_current_prices_the_forest_by_its_length() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_temp(
        &dir,
        "forest.json",
        &json!({
            "points": [[0, 0], [6, 0], [6, 3]],
            "partition": [[0, 1, 2]],
            "forest": {
                "vertices": [[0, 0], [6, 0], [6, 3]],
                "edges": [[0, 1], [1, 2]],
            },
        })
        .to_string(),
    );
    let out = run(&["convert", &file, "--to", "tree-current"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    assert_eq!(v["value_before"].as_f64(), Some(9.0));
    assert_eq!(v["value_after"].as_f64(), Some(9.0));
}

#[test]
fn relax_attaches_a_gap_report_when_given_an_instance_and_support() {
    let out = run(&["relax", &demo("square_steiner.json"), &demo("square_support.json")]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "relaxation");
    let gap = &v["gap"];
    let integer = gap["integer_value"].as_f64().unwrap();
    let relaxed = gap["relaxed_value"].as_f64().unwrap();
    assert!((integer - common::square_optimum()).abs() <= 1e-4);
    assert!((relaxed - 4.0).abs() <= 1e-3, "relaxed {relaxed}");
    assert!(gap["gap"].as_f64().unwrap() > 1.4, "gap should exceed 1.4");
}

#[test]
fn relax_solves_a_standalone_relaxation_file() {
    let out = run(&["relax", &demo("square_relaxation.json")]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = stdout_json(&out);
    let value = v["value"].as_f64().unwrap();
    assert!((value - 4.0).abs() <= 1e-3, "value {value}");
    assert!(v["gap"].is_null(), "standalone files carry no integer reference");
}

#[test]
fn relax_rejects_a_support_that_cannot_carry_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_temp(
        &dir,
        "disconnected.json",
        &json!({
            "support": [ { "a": [0, 0], "b": [1, 0] } ],
            "boundary": {
                "m": 1,
                "atoms": [
                    { "point": [5, 5], "coef": [1.0] },
                    { "point": [6, 5], "coef": [-1.0] },
                ],
            },
            "norm": { "kind": "linf" },
        })
        .to_string(),
    );
    let out = run(&["relax", &file]);
    assert_eq!(out.status.code(), Some(EXIT_INVALID));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn solve_writes_svg_and_csv_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("net.svg");
    let csv = dir.path().join("net.csv");
    let out = run(&[
        "solve",
        &demo("square_steiner.json"),
        "--svg",
        &svg.to_string_lossy(),
        "--csv",
        &csv.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));

    let drawing = fs::read_to_string(&svg).expect("svg should be written");
    assert!(drawing.starts_with("<svg"), "unexpected prefix: {}", &drawing[..40]);
    assert!(drawing.trim_end().ends_with("</svg>"));

    let table = fs::read_to_string(&csv).expect("csv should be written");
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("length,theta_minus,theta_plus,cost"));
    assert!(lines.next().is_some(), "csv should list at least one segment");
}

#[test]
fn repeated_runs_emit_byte_identical_output() {
    let first = run(&["solve", &demo("two_point_mailing.json")]);
    let second = run(&["solve", &demo("two_point_mailing.json")]);
    assert_eq!(first.status.code(), Some(EXIT_OK));
    assert_eq!(first.stdout, second.stdout);

    let relax_a = run(&["relax", &demo("square_relaxation.json")]);
    let relax_b = run(&["relax", &demo("square_relaxation.json")]);
    assert_eq!(relax_a.status.code(), Some(EXIT_OK));
    assert_eq!(relax_a.stdout, relax_b.stdout);
}

/// The emitted result must survive a load through the library types: the
/// reported value is recomputed from the re-parsed current within 1e-9.
#[test]
fn emitted_current_reloads_to_the_reported_value() {
    let out = run(&["solve", &demo("square_steiner.json")]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let result: SolveResultDto = serde_json::from_slice(&out.stdout).unwrap();
    let current = io::current_from_dto(&result.current).unwrap();
    let recomputed = mass(&current, &NormSpec::linf(current.m())).unwrap();
    assert!(
        (recomputed - result.value).abs() <= 1e-9,
        "reported {} recomputed {recomputed}",
        result.value
    );
}

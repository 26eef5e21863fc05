//! End-to-end runs of the command line: documented examples, exit codes and
//! output contracts.

use std::process::Command;

use oplab_cli::{run_with, EXIT_OK, EXIT_PRECISION, EXIT_PROPERTY, EXIT_USAGE};
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn oplab(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("oplab").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().expect("header row").split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn significant_digits(field: &str) -> usize {
    let mantissa = field.split('e').next().unwrap();
    mantissa.chars().filter(|c| c.is_ascii_digit()).count()
}

#[test]
fn recurrence_at_n_zero_is_classical() {
    let r = oplab(&["recurrence", "--n", "0", "--t", "0", "--alpha", "0"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["n", "alpha_n", "beta_n", "h_n", "R_n", "r_n", "p", "H_n"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn csv_uses_thirty_digits_and_unix_newlines() {
    let r = oplab(&["recurrence", "--n-max", "3", "--t", "1", "--alpha", "0.5"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(!r.stdout.contains('\r') && r.stdout.ends_with('\n'));
    let (_, rows) = csv_rows(&r.stdout);
    assert_eq!(rows.len(), 4);
    assert_eq!(significant_digits(&rows[2][1]), 30);
    let r = oplab(&["recurrence", "--n", "2", "--digits", "12"]);
    assert_eq!(significant_digits(&csv_rows(&r.stdout).1[0][1]), 12);
}

#[test]
fn zeros_for_n_five_match_laguerre() {
    // zeros of L_5 (α = 0)
    let expect = [0.263_560_319_718_140_9, 1.413_403_059_106_516_8, 3.596_425_771_040_722, 7.085_810_005_858_837, 12.640_800_844_275_782];
    let r = oplab(&["zeros", "--n", "5", "--t", "0", "--alpha", "0"]);
    assert_eq!(r.code, EXIT_OK);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["k", "x_k"]);
    assert_eq!(rows.len(), 5);
    for (k, (row, x)) in rows.iter().zip(expect).enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        assert!((row[1].parse::<f64>().unwrap() - x).abs() < 1e-14 * x);
    }
    let r = oplab(&["zeros", "--n", "5", "--t", "1", "--alpha", "0.5"]);
    assert_eq!(csv_rows(&r.stdout).1.len(), 5);
}

#[test]
fn empty_row_set_gives_header_only_csv() {
    let r = oplab(&["zeros", "--n", "0"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.stdout, "k,x_k\n");
}

#[test]
fn verify_all_example() {
    let r = oplab(&["verify", "--suite", "all", "--n-max", "20", "--t", "1", "--alpha", "0.5"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc["passed"], true);
    let reports = doc["reports"].as_array().unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r["identity_name"].as_str().unwrap()).collect();
    for want in ["s-relations", "discrete", "toda", "painleve-iii", "sigma", "zero-theorems"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    for rep in reports {
        assert!(rep.get("max_rel_residual").is_some() && rep["passed"] == true);
    }
}

#[test]
fn verify_report_schema() {
    let r = oplab(&["verify", "--suite", "s-relations", "--n-max", "5"]);
    assert_eq!(r.code, EXIT_OK);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    let rep = &doc["reports"][0];
    assert_eq!(rep["identity_name"], "s-relations");
    assert!(rep["max_rel_residual"].as_f64().unwrap() <= rep["tolerance"].as_f64().unwrap());
    assert_eq!(rep["passed"], true);
    let r = oplab(&["verify", "--suite", "discrete", "--n-max", "5", "--format", "csv"]);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["identity_name", "max_rel_residual", "tolerance", "passed"]);
    assert_eq!(rows[0][0], "discrete");
    assert_eq!(rows[0][3], "true");
}

#[test]
fn asymptotics_slope_example() {
    let r = oplab(&["asymptotics", "--quantity", "alpha_n", "--mode", "large-n", "--slope", "--grid", "20:200:log"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["n", "exact", "series", "abs_diff"]);
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][0], "20");
    assert_eq!(rows[9][0], "200");
    let r = oplab(&[
        "asymptotics", "--quantity", "alpha_n", "--mode", "large-n", "--slope", "--grid", "20:200:log", "--format", "json",
    ]);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    let slope = doc["slope"]["fitted"].as_f64().unwrap();
    assert!((slope + 7.0 / 3.0).abs() <= 0.15, "{slope}");
    assert!(r.stderr.contains("slope"));
}

#[test]
fn long_time_label_selects_mode() {
    let r = oplab(&["asymptotics", "--quantity", "beta_n_longtime", "--n", "2", "--t", "1e4"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header, ["t", "series", "remainder_order"]);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), -1.5);
    let r = oplab(&["asymptotics", "--quantity", "beta_n_longtime", "--mode", "large-n", "--n", "2"]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn output_is_deterministic() {
    let args = ["moments", "--n-max", "6", "--t", "2", "--alpha", "1.5", "--format", "json"];
    let a = oplab(&args);
    let b = oplab(&args);
    assert_eq!(a.code, EXIT_OK);
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_str(&a.stdout).unwrap();
    let mu0 = &doc["rows"][0]["mu"];
    assert!(mu0["bits_used"].as_u64().unwrap() >= 128);
    assert!(mu0["rel_err_bound"].as_f64().unwrap() <= 1e-30);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let r = oplab(&["scan", "--grid", "0.5:2:lin:4", "--n", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let (header, rows) = csv_rows(&text);
    assert_eq!(header[0], "t");
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[1] == "3"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["recurrence", "--alpha", "-1"][..],
        &["scan", "--grid", "1:0:lin"],
        &["scan", "--grid", "0:1:log"],
        &["scan"],
        &["zeros"],
        &["bogus"],
        &["verify", "--suite", "nope"],
        &["asymptotics"],
        &["asymptotics", "--quantity", "lnD", "--slope", "--grid", "20:60:log:5"],
        &["asymptotics", "--quantity", "alpha_n", "--n", "10", "--t", "0"],
    ] {
        let r = oplab(args);
        assert_eq!(r.code, EXIT_USAGE, "{args:?}: {}", r.stderr);
        assert!(!r.stderr.is_empty());
    }
}

#[test]
fn violated_property_exits_one() {
    // at ε = 0 the n = 2 outer bounds coincide with the zeros
    let r = oplab(&["verify", "--suite", "zeros", "--n-max", "3", "--t", "0", "--epsilon", "0"]);
    assert_eq!(r.code, EXIT_PROPERTY);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc["reports"][0]["passed"], false);
    let r = oplab(&["verify", "--suite", "zeros", "--n-max", "3", "--t", "0"]);
    assert_eq!(r.code, EXIT_OK);
}

#[test]
fn precision_cap_exits_three() {
    let out = Command::new(env!("CARGO_BIN_EXE_oplab"))
        .args(["recurrence", "--n-max", "3"])
        .env("OPLAB_MAX_BITS", "64")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PRECISION));
    let out = Command::new(env!("CARGO_BIN_EXE_oplab")).args(["recurrence", "--n-max", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let out = Command::new(env!("CARGO_BIN_EXE_oplab")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
}

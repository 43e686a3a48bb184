//! End-to-end tests of the binary: exit codes, output formats, and the
//! table-to-fit round trip.

use std::path::Path;
use std::process::{Command, Output};

fn quasimol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasimol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_prints_usage_and_succeeds() {
    let out = quasimol(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for subcommand in ["run", "table", "fit", "kernel"] {
        assert!(text.contains(subcommand), "help is missing {subcommand}");
    }
}

#[test]
fn unknown_flags_exit_with_usage_errors() {
    let out = quasimol(&["--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));

    let out = quasimol(&["run", "--problem", "no-such-problem", "--nu-h", "-6", "--nu-eps", "-4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no-such-problem"));
}

#[test]
fn kernel_check_reports_the_moments() {
    let out = quasimol(&[
        "kernel",
        "--order",
        "4",
        "--smoothness",
        "4",
        "--dim",
        "1",
        "--check-moments",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("moment 0 = 0.5"));
    assert!(text.contains("moment 1 = "));
    assert!(text.contains("moment conditions hold"));

    let out = quasimol(&["kernel", "--order", "3", "--smoothness", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_a_field_csv_and_reports_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let out = quasimol(&[
        "run",
        "--problem",
        "transport:0.5",
        "--nu-h",
        "-6",
        "--nu-eps",
        "-4",
        "--t-final",
        "0.125",
        "--out",
        field.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("final L_inf error"));
    let text = std::fs::read_to_string(&field).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,x,value"));
    assert!(lines.next().unwrap().starts_with("0,-1.25,"));
}

#[test]
fn diverging_runs_exit_with_a_numerical_failure() {
    // a half-epsilon step is far beyond the stability limit at this cell
    let out = quasimol(&[
        "run",
        "--problem",
        "burgers-a",
        "--nu-h",
        "-12",
        "--nu-eps",
        "-8",
        "--dt",
        "0.001953125",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("step"));
}

#[test]
fn table_then_fit_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let out = quasimol(&[
        "table",
        "--series",
        "B",
        "--nu-h-range",
        "-8..-7",
        "--nu-eps-range",
        "-5..-4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let rendered = stdout(&out);
    assert!(rendered.contains("eps=2^-4"));
    assert!(rendered.contains("eps=2^-5"));

    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("nu_h,nu_eps,linf_error\n"));
    assert!(text.contains("-8,-5,"));

    // four cells cannot support the five-parameter fit
    let out = quasimol(&["fit", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("usable cells"));
}

#[test]
fn fit_recovers_exponents_from_a_synthetic_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("synthetic.csv");
    write_power_law_table(&csv, 50.0, 3.0, 2.0, 4.0, 5.0);

    let out = quasimol(&["fit", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("eps^3.00"), "fit output: {text}");
    assert!(text.contains("h^4.00"), "fit output: {text}");
    assert!(text.contains("eps^5.00"), "fit output: {text}");
    assert!(text.contains("h-term: reliable"));
}

#[test]
fn fit_rejects_missing_and_malformed_input() {
    let out = quasimol(&["fit", "--input", "/nonexistent/table.csv"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("broken.csv");
    std::fs::write(&csv, "nu_h,nu_eps,linf_error\n-8,-4,not-a-number\n").unwrap();
    let out = quasimol(&["fit", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));
}

/// Noise-free two-term power-law table; the fit must reproduce the planted
/// parameters to printing precision.
fn write_power_law_table(path: &Path, c1: f64, a: f64, c2: f64, b: f64, c: f64) {
    let mut text = String::from("nu_h,nu_eps,linf_error\n");
    for nu_h in -16..=-10 {
        for nu_eps in -8..=-2 {
            if nu_h >= nu_eps {
                continue;
            }
            let h = (nu_h as f64).exp2();
            let eps = (nu_eps as f64).exp2();
            let error = c1 * eps.powf(a) + c2 * h.powf(b) / eps.powf(c);
            text.push_str(&format!("{nu_h},{nu_eps},{error}\n"));
        }
    }
    std::fs::write(path, text).unwrap();
}

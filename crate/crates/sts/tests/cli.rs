//! End-to-end checks of the `sts` binary: output formats and exit codes
//! (0 success/pass, 1 validation fail, 2 usage, 3 I/O).

use std::path::PathBuf;
use std::process::{Command, Output};

fn sts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Result lines follow the `#`-prefixed resolved-config echo.
fn last_line(out: &Output) -> String {
    stdout(out)
        .lines()
        .rev()
        .find(|l| !l.starts_with('#'))
        .unwrap_or_default()
        .to_string()
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMOKE_CONFIG: &str = "field = 17\nn = 16\nk = 1\ns = 17\nd = 3\nn_rx = 1\n\
    target_far = 0.01\nsir_points = -5\ntrials = 1\ntau = 8\nmaster_seed = 9\n";

#[test]
fn encode_prints_codeword() {
    let out = sts(&["encode", "--field", "5", "--n", "4", "--k", "1", "--message", "1"]);
    assert!(out.status.success());
    assert_eq!(last_line(&out), "1 2 4 3");

    let out = sts(&["encode", "--field", "5", "--n", "4", "--k", "1", "--message", "0"]);
    assert_eq!(last_line(&out), "0 0 0 0");
}

#[test]
fn encode_echoes_configuration_first() {
    let out = sts(&["encode", "--field", "5", "--n", "4", "--k", "1", "--message", "1"]);
    let text = stdout(&out);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with('#') && first.contains("field=5"));
}

#[test]
fn encode_rejects_incompatible_block_length() {
    let out = sts(&["encode", "--field", "5", "--n", "3", "--k", "1", "--message", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn encode_rcrm_breakdown() {
    let out = sts(&[
        "encode", "--field", "631", "--n", "14", "--k", "1", "--message", "130", "--rcrm",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("rid=1 prio=0 sinr=0 bshash=2"));

    // 9 bits do not fit in this message space
    let out = sts(&["encode", "--field", "5", "--n", "4", "--k", "1", "--message", "1", "--rcrm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn offset_recovers_shift() {
    let out = sts(&["offset", "--field", "5", "--n", "4", "--k", "1", "--codeword", "2 3 0 4"]);
    assert!(out.status.success());
    assert_eq!(last_line(&out), "delta=1 codeword=1 2 4 3 m=1");

    let out = sts(&["offset", "--field", "5", "--n", "4", "--k", "1", "--codeword", "1 2 4 3"]);
    assert_eq!(last_line(&out), "delta=0 codeword=1 2 4 3 m=1");
}

#[test]
fn offset_flags_invalid_vectors() {
    // single-symbol corruption of a codeword is never offset-correctable
    let out = sts(&["offset", "--field", "5", "--n", "4", "--k", "1", "--codeword", "1 2 4 0"]);
    assert!(out.status.success());
    assert_eq!(last_line(&out), "INVALID");

    let out = sts(&["offset", "--field", "5", "--n", "4", "--k", "1", "--codeword", "9 2 4 3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = sts(&["offset", "--field", "5", "--n", "4", "--k", "1", "--codeword", "1 2 4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_single_user_and_empty() {
    let enc = sts(&["encode", "--field", "17", "--n", "16", "--k", "1", "--message", "9"]);
    let word = last_line(&enc);
    let out = sts(&[
        "decode", "--field", "17", "--n", "16", "--k", "1", "--tau", "16", "--detections", &word,
    ]);
    assert!(out.status.success());
    assert_eq!(last_line(&out), "9");

    let empty = vec!["-"; 16].join(" ");
    let out = sts(&[
        "decode", "--field", "17", "--n", "16", "--k", "1", "--tau", "16", "--detections", &empty,
    ]);
    assert_eq!(last_line(&out), "none");

    let out = sts(&[
        "decode", "--field", "17", "--n", "16", "--k", "1", "--detections", "1 2 3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn params_prints_derived_quantities() {
    let out = sts(&[
        "params", "--field", "631", "--n", "14", "--k", "1", "--target-far", "0.01", "--n-rx", "4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("t_errors = 6"));
    assert!(text.contains("rho_erasures = 13"));
    assert!(text.contains("separability_bound = 631"));
    assert!(text.contains("threshold_x = 1.00451e1"));
}

#[test]
fn validate_passes_and_perturb_fails() {
    let out = sts(&["validate", "--samples", "120000", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("validation: PASS"));

    let out = sts(&[
        "validate", "--samples", "120000", "--seed", "11", "--perturb", "0.02",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("validation: FAIL"));

    let out = sts(&["validate", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_smoke_completes_quickly() {
    let config = write_config("sts_cli_smoke.cfg", SMOKE_CONFIG);
    let out_csv = std::env::temp_dir().join("sts_cli_smoke.csv");
    let started = std::time::Instant::now();
    let out = sts(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(started.elapsed().as_secs_f64() < 1.0, "smoke sweep too slow");

    let text = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("sir_db,erasure_rate,erasure_ci_lo"));
}

#[test]
fn sweep_is_seed_deterministic() {
    let config = write_config("sts_cli_det.cfg", SMOKE_CONFIG);
    let mut bytes = Vec::new();
    for run in 0..2 {
        let out_csv = std::env::temp_dir().join(format!("sts_cli_det_{run}.csv"));
        let out = sts(&[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        assert!(out.status.success());
        bytes.push(std::fs::read(&out_csv).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn sweep_error_exit_codes() {
    let out = sts(&["sweep", "--config", "/nonexistent/sts.cfg", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let config = write_config("sts_cli_io.cfg", SMOKE_CONFIG);
    let out = sts(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        "/nonexistent_dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = sts(&["encode", "--field", "5", "--n", "4", "--k", "1", "--message", "1", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

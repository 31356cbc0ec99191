//! End-to-end checks of the `pax` binary: documented exit codes, deterministic
//! output, and the bundled examples.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn pax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pax"))
        .args(args)
        .current_dir(workspace_root())
        .env_remove("PAX_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn parse_accepts_the_bundled_die_and_exits_zero() {
    let out = pax(&["parse", "examples/die.pax"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("proc Die"));
}

#[test]
fn rootedness_splits_the_tau_prefix_example() {
    let rooted = pax(&["bisim", "examples/tau.pax", "TA", "A", "--rooted"]);
    assert_eq!(code(&rooted), 1);
    assert!(stdout(&rooted).starts_with("inequivalent"));

    let plain = pax(&["bisim", "examples/tau.pax", "TA", "A"]);
    assert_eq!(code(&plain), 0);
    assert!(stdout(&plain).starts_with("equivalent"));
}

#[test]
fn prove_answers_unknown_on_the_recursive_witness() {
    let out = pax(&["prove", "examples/witness.pax", "Wit", "Ta"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).starts_with("unknown"));
}

#[test]
fn budget_overruns_exit_four() {
    let lts = pax(&["lts", "examples/geometric.pax", "Main", "--max-states", "3"]);
    assert_eq!(code(&lts), 4);

    let prove =
        pax(&["prove", "examples/tau.pax", "a . (b + c + b)", "a . (c + b)", "--budget", "1"]);
    assert_eq!(code(&prove), 4);
}

#[test]
fn parse_errors_exit_two_with_positions_on_stderr() {
    let dir = std::env::temp_dir().join("pax-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.pax");
    std::fs::write(&bad, "proc P = a . ;\n").unwrap();
    let out = pax(&["parse", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).is_empty(), "errors must not reach stdout");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.pax:1:"), "stderr lacks file:line:col: {err}");
}

#[test]
fn simulation_output_is_reproducible_and_job_count_invariant() {
    let base = pax(&["sim", "examples/geometric.pax", "Main", "--runs", "50", "--seed", "9"]);
    assert_eq!(code(&base), 0);
    let again = pax(&["sim", "examples/geometric.pax", "Main", "--runs", "50", "--seed", "9"]);
    let parallel = pax(&[
        "sim",
        "examples/geometric.pax",
        "Main",
        "--runs",
        "50",
        "--seed",
        "9",
        "--jobs",
        "7",
    ]);
    assert_eq!(stdout(&base), stdout(&again));
    assert_eq!(stdout(&base), stdout(&parallel));
    assert!(stdout(&base).starts_with("run,seed,status,final_map,actions\n"));
}

#[test]
fn the_seed_flag_beats_the_environment_which_beats_the_default() {
    let flagged = Command::new(env!("CARGO_BIN_EXE_pax"))
        .args(["sim", "examples/die.pax", "--runs", "1", "--seed", "7"])
        .current_dir(workspace_root())
        .env("PAX_SEED", "11")
        .output()
        .unwrap();
    let enved = Command::new(env!("CARGO_BIN_EXE_pax"))
        .args(["sim", "examples/die.pax", "--runs", "1"])
        .current_dir(workspace_root())
        .env("PAX_SEED", "7")
        .output()
        .unwrap();
    let plain = pax(&["sim", "examples/die.pax", "--runs", "1", "--seed", "7"]);
    assert_eq!(stdout(&plain), String::from_utf8(flagged.stdout).unwrap());
    assert_eq!(stdout(&plain), String::from_utf8(enved.stdout).unwrap());
}

#[test]
fn json_output_is_well_formed_everywhere() {
    for args in [
        vec!["parse", "examples/majority.pax", "--format", "json"],
        vec!["lts", "examples/die.pax", "--format", "json"],
        vec!["bisim", "examples/tau.pax", "TEP", "EP", "--format", "json"],
        vec!["prove", "examples/tau.pax", "ATP", "AP", "--format", "json"],
        vec!["simplify", "examples/tau.pax", "TA", "--format", "json"],
        vec!["sim", "examples/die.pax", "--runs", "3", "--seed", "1", "--format", "json"],
    ] {
        let out = pax(&args);
        let text = stdout(&out);
        let parsed: Result<serde_json::Value, _> = serde_json::from_str(&text);
        assert!(parsed.is_ok(), "{args:?} emitted invalid JSON: {text}");
    }
}

#[test]
fn estimates_report_the_event_frequency_with_an_interval() {
    let out = pax(&[
        "sim",
        "examples/die.pax",
        "--runs",
        "600",
        "--seed",
        "4",
        "--event",
        "performed throw6",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("event: performed throw6"));
    assert!(text.contains("frequency: "));
    assert!(text.contains("wilson 95%: ["));
}

#[test]
fn selftest_passes_every_bundled_case() {
    let out = pax(&["selftest"]);
    assert_eq!(code(&out), 0, "selftest failed:\n{}", stdout(&out));
    assert!(stdout(&out).contains("9/9 cases passed"));
}

#[test]
fn unknown_flags_exit_two() {
    let out = pax(&["bisim", "examples/tau.pax", "TA", "A", "--no-such-flag"]);
    assert_eq!(code(&out), 2);
}

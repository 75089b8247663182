//! End-to-end tests of the `sim` binary: exit codes, JSON output shapes,
//! and the run/check round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stdout);
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

#[test]
fn run_then_check_round_trips() {
    let trace = scratch("round-trip.json");
    let ran = sim(&[
        "run",
        "--algo",
        "star-leader",
        "--n",
        "5",
        "--t",
        "2",
        "--propose",
        "10101",
        "--horizon",
        "3",
        "--full-state",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(ran.status.code(), Some(0), "{}", String::from_utf8_lossy(&ran.stderr));

    let checked = sim(&["check", trace.to_str().unwrap()]);
    assert_eq!(checked.status.code(), Some(0));
    let report = stdout_json(&checked);
    assert_eq!(report["clean"], serde_json::json!(true));
    assert_eq!(report["mode"], serde_json::json!("replay"));
    assert_eq!(report["algorithm"], serde_json::json!("star-leader"));
}

#[test]
fn digest_only_traces_get_a_structural_check() {
    let trace = scratch("digest-only.json");
    let ran = sim(&[
        "run", "--algo", "flood-echo-1", "--n", "4", "--t", "1", "--propose", "all1",
        "--horizon", "2", "--out", trace.to_str().unwrap(),
    ]);
    assert_eq!(ran.status.code(), Some(0));
    let checked = sim(&["check", trace.to_str().unwrap()]);
    assert_eq!(checked.status.code(), Some(0));
    let report = stdout_json(&checked);
    assert_eq!(report["mode"], serde_json::json!("structural"));
    assert_eq!(report["clean"], serde_json::json!(true));
}

#[test]
fn check_flags_a_phantom_receipt() {
    let trace = scratch("tampered.json");
    let ran = sim(&[
        "run", "--algo", "star-leader", "--n", "5", "--t", "2", "--propose", "all0",
        "--horizon", "3", "--full-state", "--out", trace.to_str().unwrap(),
    ]);
    assert_eq!(ran.status.code(), Some(0));

    // Non-leaders never send, so a receipt claiming p3 as sender has no
    // matching send anywhere in the record.
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let received = doc["processes"][0]["rounds"][1]["received"]
        .as_array_mut()
        .expect("received list");
    received.push(serde_json::json!({"from": 3, "payload": "09"}));
    std::fs::write(&trace, serde_json::to_string(&doc).unwrap()).unwrap();

    let checked = sim(&["check", trace.to_str().unwrap()]);
    assert_eq!(checked.status.code(), Some(1));
    let report = stdout_json(&checked);
    assert_eq!(report["clean"], serde_json::json!(false));
    assert!(!report["findings"].as_array().unwrap().is_empty());
}

#[test]
fn truncated_trace_is_a_usage_error() {
    let trace = scratch("truncated.json");
    let ran = sim(&[
        "run", "--algo", "star-leader", "--n", "4", "--t", "1", "--propose", "all0",
        "--horizon", "2", "--out", trace.to_str().unwrap(),
    ]);
    assert_eq!(ran.status.code(), Some(0));
    let text = std::fs::read_to_string(&trace).unwrap();
    std::fs::write(&trace, &text[..text.len() / 2]).unwrap();

    let checked = sim(&["check", trace.to_str().unwrap()]);
    assert_eq!(checked.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&checked.stderr).contains("error:"));
}

#[test]
fn attack_reports_the_leader_violation() {
    let output = sim(&["attack", "--algo", "star-leader", "--n", "129", "--t", "128"]);
    assert_eq!(output.status.code(), Some(1));
    let verdict = stdout_json(&output);
    assert_eq!(verdict["verdict"], serde_json::json!("violation"));
    assert_eq!(verdict["property"], serde_json::json!("agreement"));
    assert!(verdict["witness"].is_object());
}

#[test]
fn attack_concedes_when_the_budget_is_tiny() {
    // At t = 8 the budget is floor(64 / 32) = 2 messages, which even the
    // fault-free baseline exceeds; the harness concedes with a clean audit.
    let output = sim(&["attack", "--algo", "star-leader", "--n", "9", "--t", "8"]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let verdict = stdout_json(&output);
    assert_eq!(verdict["verdict"], serde_json::json!("budget-exceeded"));
    assert_eq!(verdict["budget"], serde_json::json!(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let output = sim(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let output = sim(&[
        "run", "--algo", "warp-drive", "--n", "4", "--t", "1", "--propose", "all0",
        "--horizon", "2",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown algorithm"));
}

#[test]
fn bad_proposal_string_is_a_usage_error() {
    let output = sim(&[
        "run", "--algo", "star-leader", "--n", "5", "--t", "2", "--propose", "10",
        "--horizon", "2",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn cc_reports_the_authenticated_split_witness() {
    let output = sim(&["cc", "--property", "builtin:strong", "--n", "4", "--t", "2", "--auth"]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    assert_eq!(report["classification"], serde_json::json!("unsolvable-cc"));
    assert_eq!(report["authenticated"], serde_json::json!(true));
    assert_eq!(
        report["witness"],
        serde_json::json!({"1": 0, "2": 0, "3": 1, "4": 1})
    );
}

#[test]
fn cc_reports_triviality_with_its_witness() {
    let output = sim(&["cc", "--property", "builtin:trivial", "--n", "4", "--t", "1"]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    assert_eq!(report["classification"], serde_json::json!("trivial"));
    assert_eq!(report["witness"], serde_json::json!(0));
}

#[test]
fn reduce_weak_conforms_on_the_binary_builtin() {
    let output = sim(&["reduce", "weak", "--property", "builtin:weak", "--n", "4", "--t", "1"]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["status"], serde_json::json!("conformant"));
    assert_eq!(
        report["anchors"]["c0"],
        serde_json::json!({"1": 0, "2": 0, "3": 0, "4": 0})
    );
    for check in report["checks"].as_array().unwrap() {
        assert_eq!(check["decisions_ok"], serde_json::json!(true));
        assert_eq!(check["messages_equal"], serde_json::json!(true));
    }
}

#[test]
fn reduce_refuses_a_trivial_property() {
    let output = sim(&["reduce", "weak", "--property", "builtin:trivial", "--n", "4", "--t", "1"]);
    assert_eq!(output.status.code(), Some(1));
    let report = stdout_json(&output);
    assert_eq!(report["status"], serde_json::json!("refused"));
}

#[test]
fn reduce_agreement_conforms_on_the_weak_builtin() {
    let output = sim(&[
        "reduce", "agreement", "--property", "builtin:weak", "--n", "5", "--t", "2",
        "--jobs", "2",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["status"], serde_json::json!("conformant"));
    assert!(!report["corpus"].as_array().unwrap().is_empty());
}

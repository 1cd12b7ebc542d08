//! End-to-end tests of the `fcl` binary: exit codes, report schema, output
//! determinism, and agreement between the realisation check and the CUI
//! decision.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .join("fcl/tests/fixtures")
        .join(name)
}

fn fcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcl"))
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

/// Every report object follows the fixed schema.
fn assert_report_schema(value: &serde_json::Value) {
    let obj = value.as_object().expect("report object");
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["check", "holds", "stats", "witness"]);
    assert!(obj["check"].is_string());
    assert!(obj["holds"].is_boolean());
    assert!(obj["witness"].is_object() || obj["witness"].is_null());
    assert!(obj["stats"].is_object());
    assert_eq!(obj["holds"].as_bool().unwrap(), obj["witness"].is_null());
}

/// The serialised field order is fixed.
fn assert_field_order(raw: &str) {
    let pos = |k: &str| {
        raw.find(&format!("\"{k}\""))
            .unwrap_or_else(|| panic!("missing {k}"))
    };
    assert!(pos("check") < pos("holds"));
    assert!(pos("holds") < pos("witness"));
    assert!(pos("witness") < pos("stats"));
}

#[test]
fn cui_of_the_bad_automaton_violates_with_json_witness() {
    let file = fixture("bad.ca");
    let out = fcl(&["check", "cui", file.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 1);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    assert_report_schema(&value);
    assert_field_order(&stdout(&out));
    assert_eq!(value["witness"]["alpha"], "C->B:r");
    assert_eq!(value["witness"]["w"], serde_json::json!([]));
    // byte-identical on a second run
    let again = fcl(&["check", "cui", file.to_str().unwrap(), "--json"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn cui_of_a_handshake_holds() {
    let out = fcl(&["check", "cui", fixture("handshake.ca").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("holds"));
}

#[test]
fn cui_of_the_language_file_reports_the_example_words() {
    let out = fcl(&["check", "cui", fixture("l0.gl").to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 1);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    assert_report_schema(&value);
    assert_eq!(value["witness"]["alpha"], "A->B:g");
    assert_eq!(
        value["witness"]["w"],
        serde_json::json!(["C->A:w", "C->B:w"])
    );
}

#[test]
fn ba_and_props_detect_the_deadlocking_language() {
    let out = fcl(&["check", "ba", fixture("closnodl.gl").to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let out = fcl(&[
        "check",
        "props",
        fixture("closnodl.gl").to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&out), 1);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    let reports = value.as_array().expect("one report per property");
    assert_eq!(reports.len(), 5);
    for r in reports {
        assert_report_schema(r);
    }
    // HA holds, DF fails
    assert_eq!(reports[0]["check"], "HA");
    assert_eq!(reports[0]["holds"], true);
    assert_eq!(reports[1]["check"], "DF");
    assert_eq!(reports[1]["holds"], false);
    // lasso witnesses of the df-not-lf language serialise structurally
    let out = fcl(&[
        "check",
        "props",
        fixture("dflf.gl").to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn cfsm_props_find_the_deadlock() {
    let out = fcl(&[
        "check",
        "cfsm-props",
        fixture("closnodl.cfsm").to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&out), 1);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json");
    let reports = value.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0]["check"], "deadlock-freedom");
    assert_eq!(reports[0]["holds"], false);
    assert_eq!(reports[0]["witness"]["participant"], "B");

    let out = fcl(&[
        "check",
        "cfsm-props",
        fixture("handshake.cfsm").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn realise_agrees_with_cui_on_the_corpus() {
    for name in ["bad.ca", "l0.ca", "closnodl.ca", "handshake.ca"] {
        let file = fixture(name);
        let cui = fcl(&["check", "cui", file.to_str().unwrap()]);
        let realise = fcl(&["check", "realise", file.to_str().unwrap(), "--max-len", "6"]);
        assert_eq!(
            code(&cui),
            code(&realise),
            "{name}: realisation and CUI verdicts differ"
        );
    }
}

#[test]
fn words_lists_the_bounded_semantics() {
    let out = fcl(&[
        "words",
        fixture("closnodl.ca").to_str().unwrap(),
        "--max-len",
        "3",
    ]);
    assert_eq!(code(&out), 0);
    let lines: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    let expected = [
        "(empty)",
        "A->C:l",
        "A->C:r",
        "A->C:l . A->B:m",
        "A->C:r . A->B:m",
        "A->C:l . A->B:m . A->C:m",
        "A->C:r . A->B:m . B->C:m",
    ];
    assert_eq!(lines, expected);
}

#[test]
fn parse_errors_exit_2_with_diagnostics() {
    let dir = std::env::temp_dir().join("fcl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("selfcomm.ca");
    std::fs::write(&bad, "chaut T\ninit q0\nq0 A->A:m q1\n").unwrap();
    let out = fcl(&["check", "cui", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("selfcomm.ca:3"));

    // wrong extension for the verb
    let out = fcl(&["check", "realise", fixture("l0.gl").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn project_and_product_outputs() {
    let out = fcl(&["project", fixture("l0.ca").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("cfsm A"));
    assert!(stdout(&out).contains("cfsm C"));

    let out = fcl(&["project", fixture("l0.gl").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("subject: C"));

    let dir = std::env::temp_dir().join("fcl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let dot = dir.join("product.dot");
    let out = fcl(&[
        "product",
        fixture("handshake.cfsm").to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let dot_text = std::fs::read_to_string(&dot).unwrap();
    assert!(dot_text.starts_with("digraph"));
    assert!(dot_text.contains("A->B:m"));
}

#[test]
fn json_reports_are_schema_valid_and_deterministic_on_the_corpus() {
    let commands: Vec<(Vec<&str>, &str)> = vec![
        (vec!["check", "cui"], "bad.ca"),
        (vec!["check", "cui"], "l0.ca"),
        (vec!["check", "cui"], "closnodl.ca"),
        (vec!["check", "cui"], "handshake.ca"),
        (vec!["check", "cui"], "l0.gl"),
        (vec!["check", "cui"], "dflf.gl"),
        (vec!["check", "ba"], "closnodl.ca"),
        (vec!["check", "ba"], "lfsf.gl"),
        (vec!["check", "props"], "l0.gl"),
        (vec!["check", "props"], "lfsf.gl"),
        (vec!["check", "cfsm-props"], "handshake.cfsm"),
        (vec!["check", "cfsm-props"], "closnodl.cfsm"),
        (vec!["check", "realise"], "bad.ca"),
        (vec!["check", "realise"], "handshake.ca"),
    ];
    for (base, file) in commands {
        let path = fixture(file);
        let mut args: Vec<&str> = base.clone();
        let p = path.to_str().unwrap().to_owned();
        args.push(&p);
        args.push("--json");
        let out = fcl(&args);
        assert!(code(&out) == 0 || code(&out) == 1, "{base:?} {file}");
        let value: serde_json::Value =
            serde_json::from_str(&stdout(&out)).unwrap_or_else(|e| panic!("{file}: {e}"));
        match &value {
            serde_json::Value::Array(reports) => {
                for r in reports {
                    assert_report_schema(r);
                }
            }
            single => assert_report_schema(single),
        }
        let again = fcl(&args);
        assert_eq!(
            out.stdout, again.stdout,
            "{base:?} {file} not deterministic"
        );
        assert_eq!(code(&out), code(&again));
    }
}

#[test]
fn gt_subcommands() {
    let loop_gt = fixture("simple_loop.gt");
    let out = fcl(&["gt", "check", loop_gt.to_str().unwrap()]);
    assert_eq!(code(&out), 0);

    let out = fcl(&["gt", "to-ca", loop_gt.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("chaut gt"));
    assert!(stdout(&out).contains("A->B:m"));

    let out = fcl(&["gt", "lts", loop_gt.to_str().unwrap(), "--max-len", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("traces <= 3"));

    // standard projection of the mixed example fails, generalised succeeds
    let mixed = fixture("mixed.gt");
    let out = fcl(&["gt", "project", mixed.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("not projectable"));
    let out = fcl(&[
        "gt",
        "project",
        mixed.to_str().unwrap(),
        "--mode",
        "generalised",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("D!{ x . 0 , y . 0 }"));

    // the counter-like type exhausts a small budget
    let counter = fixture("counter.gt");
    let out = fcl(&["gt", "to-ca", counter.to_str().unwrap(), "--budget", "50"]);
    assert_eq!(code(&out), 2);
    // and the FCL_BUDGET variable is honoured
    let out = Command::new(env!("CARGO_BIN_EXE_fcl"))
        .args(["gt", "to-ca", counter.to_str().unwrap()])
        .env("FCL_BUDGET", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code().unwrap(), 2);
}

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use camsearch::metrics::{read_transcripts, Outcome};
use camsearch::taskgen::TaskSet;

fn camsearch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camsearch"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = camsearch(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn build(dir: &Path) {
    ok(dir, &["gen-world", "--topology", "factory", "--persons", "250", "--seed", "3", "--out", "w.json"]);
    ok(dir, &["build-sttg", "--world", "w.json", "--out", "g.json"]);
    ok(dir, &["gen-tasks", "--track", "all", "--world", "w.json", "--sttg", "g.json", "--seed", "3", "--out", "t.json"]);
}

#[test]
fn oracle_scores_perfectly_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    build(d.path());
    ok(d.path(), &["run", "--tasks", "t.json", "--agent", "oracle", "--out", "o.ndjson"]);
    let ts = read_transcripts(d.path().join("o.ndjson")).unwrap();
    let set = TaskSet::load(d.path().join("t.json")).unwrap();
    assert_eq!(ts.len(), set.tasks.len());
    assert!(ts.iter().all(|t| t.outcome == Outcome::Correct));
    let json = ok(d.path(), &["score", "--transcripts", "o.ndjson", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for tr in v["tracks"].as_array().unwrap() {
        assert_eq!(tr["tws"], 1.0);
        assert_eq!(tr["top1"], 1.0);
    }
    let csv = ok(d.path(), &["score", "--transcripts", "o.ndjson", "--format", "csv"]);
    assert_eq!(csv.lines().count(), ts.len() + 1);
    let table = ok(d.path(), &["score", "--transcripts", "o.ndjson"]);
    assert!(table.contains("TWS"));
}

#[test]
fn single_track_and_job_count_do_not_change_results() {
    let d = tempfile::tempdir().unwrap();
    build(d.path());
    ok(d.path(), &["run", "--tasks", "t.json", "--agent", "greedy", "--track", "3", "--jobs", "1", "--out", "a.ndjson"]);
    ok(d.path(), &["run", "--tasks", "t.json", "--agent", "greedy", "--track", "3", "--jobs", "4", "--out", "b.ndjson"]);
    let a = std::fs::read(d.path().join("a.ndjson")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.ndjson")).unwrap());
    let ts = read_transcripts(d.path().join("a.ndjson")).unwrap();
    assert!(!ts.is_empty() && ts.iter().all(|t| t.track == 3));
}

#[test]
fn errors_are_one_json_line_and_exit_one() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["build-sttg", "--world", "missing.json", "--out", "g.json"][..],
        &["gen-world", "--topology", "atlantis", "--persons", "10", "--seed", "1", "--out", "w.json"][..],
        &["score", "--transcripts", "missing.ndjson"][..],
    ] {
        let out = camsearch(d.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert!(v["error"].is_string() && v["message"].is_string(), "{v}");
    }
}

#[test]
fn malformed_world_is_a_schema_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("w.json"), "{\"gallery\": 3}").unwrap();
    let out = camsearch(d.path(), &["build-sttg", "--world", "w.json", "--out", "g.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.path().join("g.json").exists());
}

#[test]
fn play_accepts_shorthand_and_json_actions() {
    let d = tempfile::tempdir().unwrap();
    std::fs::copy(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/factory_small_tasks.json"),
        d.path().join("t.json"),
    )
    .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_camsearch"))
        .args(["play", "--tasks", "t.json", "--task", "T3_s01_3"])
        .current_dir(d.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"temporal\n{\"tool\":\"ask_witness\",\"attribute\":\"shoe_type\"}\npredict 3\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("correct"), "{text}");
}

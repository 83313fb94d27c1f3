use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn tutraj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tutraj")).args(args).output().unwrap()
}

fn stage(cmd: &str, config: &Path, work: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--quiet", "--config", config.to_str().unwrap(), "--work-dir", work.to_str().unwrap()];
    args.extend_from_slice(extra);
    tutraj(&args)
}

/// The failure summary is the last line on stderr.
fn failure(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(err.lines().last().expect("stderr is empty")).unwrap()
}

#[test]
fn run_all_then_clobber() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture("corpus/config.toml");
    let out = stage("run-all", &cfg, tmp.path(), &["--workers", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["retention_percent"], "46.7%");
    assert!(tmp.path().join("filter/dataset/trajectories.jsonl").exists());
    assert!(tmp.path().join("sft/sft.jsonl").exists());

    let out = stage("crawl", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(failure(&out)["error"], "output_exists");

    let out = stage("crawl", &cfg, tmp.path(), &["--overwrite"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_stage_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stage("generate", &fixture("corpus/config.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let s = failure(&out);
    assert_eq!(s["error"], "stage_input_missing");
    assert_eq!(s["stage"], "generate");
}

#[test]
fn bad_config_reports_key() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("corpus/config.toml")).unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, text.replace("[filter]\njudge_images = 1", "[filter]\njudge_images = 9")).unwrap();
    let out = stage("crawl", &cfg, &tmp.path().join("work"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(failure(&out)["key"], "filter.judge_images");

    let out = stage("crawl", &fixture("corpus/config.toml"), &tmp.path().join("work"), &["--judge-images", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stats_on_empty_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    fs::create_dir_all(&ds).unwrap();
    fs::write(ds.join("trajectories.jsonl"), "").unwrap();
    let out = stage(
        "stats",
        &fixture("corpus/config.toml"),
        &tmp.path().join("work"),
        &["--dataset", ds.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["trajectories"], 0);
}

#[test]
fn eval_fixture_records() {
    let tmp = tempfile::tempdir().unwrap();
    let records = fixture("eval/records.jsonl");
    let out = stage(
        "eval",
        &fixture("corpus/config.toml"),
        tmp.path(),
        &["--records", records.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["count"], 50);
}

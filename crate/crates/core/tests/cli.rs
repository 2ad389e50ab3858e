mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use common::fixture;

fn relex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relex")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// The pipeline fixture config rewritten with absolute paths and the given
/// golden file, so a test can place it in a temp dir.
fn config_with_golden(dir: &Path, golden: &Path) -> PathBuf {
    let base = fixture("pipeline");
    let text = std::fs::read_to_string(base.join("pipeline.toml")).unwrap();
    let mut out = String::new();
    for line in text.lines() {
        let rewritten = match line.split_once(" = \"") {
            Some(("golden", _)) => format!("golden = {:?}", golden.display().to_string()),
            Some((key, rest))
                if [
                    "cache",
                    "gazetteer_common",
                    "gazetteer_scientific",
                    "gazetteer_chemical",
                    "butter",
                ]
                .contains(&key) =>
            {
                format!(
                    "{key} = {:?}",
                    base.join(rest.trim_end_matches('"')).display().to_string()
                )
            }
            _ => line.to_string(),
        };
        out.push_str(&rewritten);
        out.push('\n');
    }
    let path = dir.join("pipeline.toml");
    std::fs::write(&path, out).unwrap();
    path
}

#[test]
fn stage_without_input_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("w");
    let out = relex(&["--work-dir", work.to_str().unwrap(), "segment"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("corpus.jsonl") && err.contains("relex ingest"), "{err}");

    let out = relex(&["--work-dir", work.to_str().unwrap(), "pairs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("relex filter"));
}

#[test]
fn eval_without_models_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("w");
    let out = relex(&["--work-dir", work.to_str().unwrap(), "eval"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(!work.exists());
}

#[test]
fn unknown_subcommand_and_missing_config() {
    assert_eq!(relex(&["bogus"]).status.code(), Some(1));
    let out = relex(&["--config", "/nonexistent/relex.toml", "segment"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/relex.toml"));
}

#[test]
fn offline_ingest_without_cache_fails() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("w");
    let cache = dir.path().join("cache");
    let out = relex(&[
        "--work-dir",
        work.to_str().unwrap(),
        "ingest",
        "--query",
        "nothing cached",
        "--cache-dir",
        cache.to_str().unwrap(),
        "--offline",
    ]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn seed_flag_overrides_config_and_reaches_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("pipeline/pipeline.toml");
    let work = dir.path().join("w");
    let out = relex(&[
        "--config",
        config.to_str().unwrap(),
        "--work-dir",
        work.to_str().unwrap(),
        "--seed",
        "1234",
        "ingest",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("seed 1234\n"));
    assert!(stdout(&out).contains("ingest: 20 documents"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(work.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1234);
    assert!(manifest["stages"]["ingest"]["corpus.jsonl"].is_string());
}

#[test]
fn staged_run_annotate_then_train() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.csv");
    let config = config_with_golden(dir.path(), &golden);
    let work = dir.path().join("w");
    let run = |args: &[&str]| {
        let mut full = vec![
            "--config",
            config.to_str().unwrap(),
            "--work-dir",
            work.to_str().unwrap(),
        ];
        full.extend_from_slice(args);
        relex(&full)
    };
    for stage in ["ingest", "segment", "ner", "filter", "pairs"] {
        let out = run(&[stage]);
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let out = run(&["train"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("relex annotate"), "{}", stderr(&out));

    let mut child = Command::new(env!("CARGO_BIN_EXE_relex"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--work-dir",
            work.to_str().unwrap(),
            "annotate",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"y\nn\ns\nq\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("labeled 1 positive, 1 negative; skipped 1"),
        "{}",
        stdout(&out)
    );

    let mut rows = csv::Reader::from_path(&golden).unwrap();
    let labels: Vec<String> = rows.records().map(|r| r.unwrap()[8].to_string()).collect();
    assert_eq!(labels, ["1", "0"]);

    // A second session resumes after the already labeled pairs.
    let mut child = Command::new(env!("CARGO_BIN_EXE_relex"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--work-dir",
            work.to_str().unwrap(),
            "annotate",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"q\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(stdout(&out).contains("2 already labeled"), "{}", stdout(&out));
}

#[test]
fn pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("pipeline/pipeline.toml");
    let work = dir.path().join("w");
    let out = relex(&[
        "--config",
        config.to_str().unwrap(),
        "--work-dir",
        work.to_str().unwrap(),
        "pipeline",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in [
        "corpus.jsonl",
        "sentences.jsonl",
        "mentions.jsonl",
        "ner-rejects.jsonl",
        "relevant.jsonl",
        "pairs.jsonl",
        "silver.csv",
        "silver-discards.jsonl",
        "silver-summary.json",
        "folds.json",
        "report.csv",
        "summary.csv",
        "manifest.json",
        "predictions/kw_strict.jsonl",
        "assembled/fold-00-augmented_balanced.csv",
    ] {
        assert!(work.join(f).is_file(), "missing {f}");
    }
    let report = relex::experiment::read_report(&work.join("report.csv")).unwrap();
    // 2 models x 3 strategies x 3 folds.
    assert_eq!(report.len(), 18);
    let mut summary = csv::Reader::from_path(work.join("summary.csv")).unwrap();
    let mut cells = 0;
    for row in summary.records() {
        let row = row.unwrap();
        let folds: Vec<_> = report
            .iter()
            .filter(|r| r.model == row[0] && r.strategy.as_str() == &row[1])
            .collect();
        assert_eq!(folds.len().to_string(), row[2]);
        let mean = folds.iter().map(|r| r.metrics.macro_f1).sum::<f64>() / folds.len() as f64;
        let reported: f64 = row[9].parse().unwrap();
        assert!((mean - reported).abs() <= 1e-12, "{mean} vs {reported}");
        cells += 1;
    }
    assert_eq!(cells, 6);
    let rejects = std::fs::read_to_string(work.join("ner-rejects.jsonl")).unwrap();
    assert_eq!(rejects.lines().count(), 1);
    assert!(rejects.contains("unknown sent_id"));
}

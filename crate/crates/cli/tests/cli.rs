use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn revloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revloc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn revloc")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = revloc(dir, args);
    assert!(
        out.status.success(),
        "revloc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = revloc(dir, args);
    assert!(!out.status.success(), "revloc {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

/// A workspace with a synthetic raw corpus and a config over it.
fn workspace(reports: usize, model: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth", "--out", "raw.jsonl", "--reports", &reports.to_string()]);
    fs::write(
        dir.path().join("revloc.toml"),
        format!("corpus = \"raw.jsonl\"\noutput = \"out\"\nseed = 3\n\n[model]\n{model}"),
    )
    .unwrap();
    dir
}

fn out(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join("out").join(name)
}

fn report_ids(dir: &TempDir) -> Vec<String> {
    let corpus = fs::read_to_string(out(dir, "corpus.jsonl")).unwrap();
    corpus
        .lines()
        .filter(|l| l.contains(r#""kind":"report""#))
        .map(|l| {
            let start = l.find(r#""id":""#).unwrap() + 6;
            l[start..start + l[start..].find('"').unwrap()].to_string()
        })
        .collect()
}

const SMALL: &str = "d = 8\nepochs = 1\nnegatives = 30\n";

#[test]
fn pipeline_runs_every_stage_deterministically() {
    let ws = workspace(40, SMALL);
    let dir = ws.path();

    let summary = ok(dir, &["ingest"]);
    assert!(summary.contains("reports\t40\n"), "{summary}");
    assert!(summary.contains("fix_links\t40\n"), "{summary}");
    let corpus = fs::read(out(&ws, "corpus.jsonl")).unwrap();
    ok(dir, &["ingest"]);
    assert_eq!(fs::read(out(&ws, "corpus.jsonl")).unwrap(), corpus);

    ok(dir, &["graph", "build"]);
    let graph = fs::read(out(&ws, "graph.txt")).unwrap();
    ok(dir, &["graph", "update"]);
    assert_eq!(fs::read(out(&ws, "graph.txt")).unwrap(), graph);

    ok(dir, &["features"]);
    let features = fs::read_to_string(out(&ws, "features.tsv")).unwrap();
    assert!(features.starts_with("# seed=3\nreport\tmethod\trcfs\tbffs\tbfrs\n"));

    ok(dir, &["train"]);
    assert!(fs::read_to_string(out(&ws, "train.tsv")).unwrap().starts_with("# seed=3\n"));

    let id = report_ids(&ws).pop().unwrap();
    let ranked = ok(dir, &["rank", "--report", &id, "--top", "5"]);
    assert_eq!(ranked.lines().count(), 2 + 5);
    assert_eq!(ok(dir, &["rank", "--report", &id, "--top", "5"]), ranked);
    // asking for more than exists lists every candidate once
    let methods = features.lines().filter(|l| l.starts_with(&format!("{id}\t"))).count();
    let all = ok(dir, &["rank", "--report", &id, "--top", "100000"]);
    assert_eq!(all.lines().count(), 2 + methods);
    fails(dir, &["rank", "--report", "no-such-report"]);

    let table = ok(dir, &["eval"]);
    assert_eq!(table.lines().count(), 1 + 7 + 1);
    for t in 1..=7 {
        assert!(out(&ws, &format!("eval/task{t}.tsv")).exists());
    }
    let metrics = fs::read(out(&ws, "eval/metrics.tsv")).unwrap();
    ok(dir, &["eval"]);
    assert_eq!(fs::read(out(&ws, "eval/metrics.tsv")).unwrap(), metrics);

    ok(dir, &["eval", "--not-localized-only"]);
    assert!(out(&ws, "eval-not-localized/metrics.tsv").exists());
}

#[test]
fn missing_inputs_fail_with_a_diagnostic() {
    let ws = workspace(40, SMALL);
    let dir = ws.path();
    let err = fails(dir, &["--corpus", "absent.jsonl", "ingest"]);
    assert!(err.contains("absent.jsonl"), "{err}");
    let err = fails(dir, &["graph", "build"]);
    assert!(err.contains("ingest"), "{err}");
    let err = fails(dir, &["--config", "nowhere.toml", "ingest"]);
    assert!(err.contains("nowhere.toml"), "{err}");
}

#[test]
fn malformed_line_is_reported_by_number() {
    let ws = workspace(40, SMALL);
    let raw = ws.path().join("raw.jsonl");
    let mut text = fs::read_to_string(&raw).unwrap();
    text.push_str("{not json\n");
    let line = text.lines().count();
    fs::write(&raw, text).unwrap();
    let err = fails(ws.path(), &["ingest"]);
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn damaged_graph_store_is_rejected() {
    let ws = workspace(40, SMALL);
    let dir = ws.path();
    ok(dir, &["ingest"]);
    ok(dir, &["graph", "build"]);
    let path = out(&ws, "graph.txt");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("E\t", "E\tbogus\t", 1)).unwrap();
    fails(dir, &["graph", "update"]);
    fs::write(&path, "not a graph\n").unwrap();
    let err = fails(dir, &["graph", "update"]);
    assert!(err.contains("graph"), "{err}");
}

#[test]
fn update_rejects_a_store_ahead_of_the_corpus() {
    let big = workspace(40, SMALL);
    ok(big.path(), &["ingest"]);
    ok(big.path(), &["graph", "build"]);
    let small = workspace(20, SMALL);
    ok(small.path(), &["ingest"]);
    fs::copy(out(&big, "graph.txt"), out(&small, "graph.txt")).unwrap();
    let err = fails(small.path(), &["graph", "update"]);
    assert!(err.contains("revision"), "{err}");
}

#[test]
fn trained_model_puts_fixed_methods_first() {
    let ws = workspace(200, "d = 16\n");
    let dir = ws.path();
    ok(dir, &["ingest"]);
    ok(dir, &["train"]);
    let corpus = fs::read_to_string(out(&ws, "corpus.jsonl")).unwrap();
    let ids = report_ids(&ws);
    let mut hits = 0;
    for id in &ids[ids.len() - 5..] {
        let ranked = ok(dir, &["rank", "--report", id, "--top", "1"]);
        let top = ranked.lines().nth(2).unwrap().split('\t').nth(1).unwrap().to_string();
        let record = corpus
            .lines()
            .find(|l| l.contains(r#""kind":"report""#) && l.contains(&format!(r#""id":"{id}""#)))
            .unwrap();
        hits += usize::from(record.contains(&format!("\"{top}\"")));
    }
    assert!(hits >= 3, "fixed method ranked first for only {hits} of 5 reports");
}

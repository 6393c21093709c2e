use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mssw_core::ingest::{self, Abstraction, CveRecord, Dataset, TaxonomyDocument, TaxonomyNode};
use mssw_core::testkit::FEED_FIXTURE;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mssw"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn synth_world(dir: &Path) -> (PathBuf, PathBuf) {
    let ds = dir.join("ds.jsonl");
    let tax = dir.join("tax.json");
    let out = run(&[
        "synth",
        "--out",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {}", stderr(&out));
    (ds, tax)
}

#[test]
fn ingest_writes_dataset_and_reports_skips() {
    let dir = tempfile::tempdir().unwrap();
    let feed = dir.path().join("feed.json");
    fs::write(&feed, FEED_FIXTURE).unwrap();
    let out_path = dir.path().join("ds.jsonl");
    let out = run(&[
        "ingest",
        "--feed",
        feed.to_str().unwrap(),
        "--year",
        "2019",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("skipped: 1"));
    let written = fs::read_to_string(&out_path).unwrap();
    let mut lines = written.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn ingest_without_feed_is_usage_error() {
    let out = run(&["ingest", "--year", "2019", "--out", "/tmp/unused.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ingest_missing_feed_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ds.jsonl");
    let out = run(&[
        "ingest",
        "--feed",
        "/nonexistent/feed.json",
        "--year",
        "2019",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ingest_malformed_feed_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let feed = dir.path().join("feed.json");
    fs::write(&feed, "not a feed").unwrap();
    let out_path = dir.path().join("ds.jsonl");
    let out = run(&[
        "ingest",
        "--feed",
        feed.to_str().unwrap(),
        "--year",
        "2019",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains(feed.to_str().unwrap()));
}

#[test]
fn ingest_with_no_matching_year_writes_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let feed = dir.path().join("feed.json");
    fs::write(&feed, FEED_FIXTURE).unwrap();
    let out_path = dir.path().join("ds.jsonl");
    let out = run(&[
        "ingest",
        "--feed",
        feed.to_str().unwrap(),
        "--year",
        "1999",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let written = fs::read_to_string(&out_path).unwrap();
    assert_eq!(written.lines().count(), 1);
    assert!(written.starts_with("# {"));
}

#[test]
fn rank_default_on_synth_world_truncates_to_scope() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# {"));
    assert!(lines[1].starts_with("rank"));
    assert_eq!(lines.len(), 2 + 14);
    assert!(stderr(&out).contains("only 14 CWEs are scored in scope"));
}

#[test]
fn rank_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let args = [
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--level",
        "all",
        "--format",
        "csv",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn rank_top_zero_is_empty_and_ok() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--level",
        "all",
        "--top",
        "0",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2);
}

fn single_class_world(dir: &Path) -> (PathBuf, PathBuf) {
    let doc = TaxonomyDocument {
        nodes: vec![TaxonomyNode {
            id: 100,
            name: "Lone Class".into(),
            abstraction: Abstraction::Class,
            in_view_1003: true,
        }],
        edges: vec![],
    };
    let records = (0..3)
        .map(|i| CveRecord {
            cve_id: format!("CVE-2019-{}", 40000 + i),
            base_score: 7.0,
            cwe_ids: [100].into(),
        })
        .collect();
    let dataset = Dataset {
        records,
        source_label: "test".into(),
        cutoff_date: "2019-12-31".into(),
    };
    let ds = dir.join("one.jsonl");
    let tax = dir.join("one.json");
    fs::write(&ds, ingest::write_dataset(&dataset, &serde_json::Map::new())).unwrap();
    fs::write(&tax, serde_json::to_string(&doc).unwrap()).unwrap();
    (ds, tax)
}

#[test]
fn rank_degenerate_scope_is_computation_error() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = single_class_world(dir.path());
    let out = run(&[
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("degenerate"));
}

#[test]
fn rank_json_format_parses_after_header() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--level",
        "all",
        "--top",
        "5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let body = text.split_once('\n').unwrap().1;
    let value: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(value["entries"].as_array().unwrap().len(), 5);
    assert_eq!(value["entries"][0]["rank"], 1);
}

#[test]
fn rank_csv_format_has_header_row() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--level",
        "all",
        "--format",
        "csv",
    ]);
    let text = stdout(&out);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "rank,cwe_id,name,score,n,mean_severity"
    );
}

#[test]
fn rank_propagation_toggle_changes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let base = [
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--format",
        "csv",
    ];
    let with = run(&base);
    let without = run(&[&base[..], &["--no-propagate"]].concat());
    assert!(with.status.success() && without.status.success());
    assert_ne!(stdout(&with).lines().nth(2), stdout(&without).lines().nth(2));
}

#[test]
fn unknown_view_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "rank",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--views",
        "1008",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("view 1008"));
}

#[test]
fn set_diff_plot_requires_out() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "analyze",
        "set-diff",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--plot",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn set_diff_writes_curve_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let csv_path = dir.path().join("curve.csv");
    let out = run(&[
        "analyze",
        "set-diff",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--plot",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let written = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(written.lines().count(), 2 + 124);
    let svg = fs::read_to_string(dir.path().join("curve.svg")).unwrap();
    assert!(svg.starts_with("<!-- {"));
    assert!(svg.contains("<svg"));
}

#[test]
fn correlations_emit_twelve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "analyze",
        "correlations",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2 + 12);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "equation,abstraction,propagation,corr_frequency,corr_severity"
    );
}

#[test]
fn distributions_emit_three_value_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let out = run(&[
        "analyze",
        "distributions",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().nth(1).unwrap(), "index,frequency,log,double_log");
    assert_eq!(text.lines().count(), 2 + 124);
}

#[test]
fn risk_map_covers_scope_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let csv_path = dir.path().join("map.csv");
    let out = run(&[
        "analyze",
        "risk-map",
        "--dataset",
        ds.to_str().unwrap(),
        "--taxonomy",
        tax.to_str().unwrap(),
        "--metric",
        "mdse",
        "--out",
        csv_path.to_str().unwrap(),
        "--plot",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let written = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(written.lines().count(), 2 + 124);
    assert!(dir.path().join("map.svg").exists());
}

#[test]
fn synth_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, tax) = synth_world(dir.path());
    let first_ds = fs::read(&ds).unwrap();
    let first_tax = fs::read(&tax).unwrap();
    synth_world(dir.path());
    assert_eq!(first_ds, fs::read(&ds).unwrap());
    assert_eq!(first_tax, fs::read(&tax).unwrap());
}

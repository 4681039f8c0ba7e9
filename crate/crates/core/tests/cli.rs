mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hyperknn::bipartite::{parse_bipartite_edges, Schema};
use hyperknn::cli::{run, EXIT_BAD_QUERY, EXIT_OK, EXIT_UNREADABLE};
use hyperknn::evaluation::{grid_search, GridSpec, SplitSpec};
use hyperknn::hypergraph::{induce_hypergraph, IncidenceIndex};
use hyperknn::report::EvaluationReport;
use hyperknn::weighting::{goodness_weights, write_weights_csv};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperknn"))
}

fn fixture(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_capture(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut argv = vec!["hyperknn"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out);
    (code, out)
}

#[test]
fn ingest_reports_hand_counted_stats() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "tiny.tsv", "a\tx\t1\nb\tx\t2\nc\tx\t3\na\ty\t4\nb\ty\t5\nc\tz\t1\n");
    let (code, out) = run_capture(&["ingest", "--input", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["hyperedges"], 3);
    assert_eq!(v["vertices"], 3);
    assert_eq!(v["min_size"], 1);
    assert_eq!(v["max_size"], 3);
    assert_eq!(v["ratings"], 6);
}

#[test]
fn vertex_side_swaps_the_projection() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "tiny.tsv", "a\tx\t1\nb\tx\t2\nc\tx\t3\na\ty\t4\n");
    let (_, out) = run_capture(&["ingest", "--input", p.to_str().unwrap(), "--vertex-side", "v"]);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["hyperedges"], 3);
    assert_eq!(v["vertices"], 2);
}

#[test]
fn constant_ratings_converge_in_two_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "const.tsv", "a\tx\t4\nb\tx\t4\na\ty\t4\nc\tz\t4\n");
    let out_dir = dir.path().join("w");
    let (code, _) = run_capture(&["weights", "--input", p.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let log: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(log["iterations"], 2);
    let csv = fs::read_to_string(out_dir.join("weights.csv")).unwrap();
    let weights: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(weights, vec!["0", "0", "0"]);
}

#[test]
fn weights_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let text = common::planted_ratings(3);
    let p = fixture(dir.path(), "planted.tsv", &text);
    let (code, cli_csv) = run_capture(&["weights", "--input", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);

    let ingested = parse_bipartite_edges(text.as_bytes(), &Schema::default()).unwrap();
    let hg = induce_hypergraph(&ingested.graph);
    let (w, _) = goodness_weights(&ingested.graph, &hg, 1e-6, 100).unwrap();
    let mut lib_csv = Vec::new();
    write_weights_csv(&mut lib_csv, &hg, ingested.graph.v_ids.names(), &w).unwrap();
    assert_eq!(cli_csv, lib_csv);
}

#[test]
fn evaluate_matches_the_library_and_has_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let text = common::planted_ratings(4);
    let p = fixture(dir.path(), "planted.tsv", &text);
    let (code, out) = run_capture(&[
        "evaluate",
        "--input",
        p.to_str().unwrap(),
        "--method",
        "modified",
        "--task",
        "weight",
        "--seed",
        "9",
    ]);
    assert_eq!(code, EXIT_OK);
    let report: EvaluationReport = serde_json::from_slice(&out).unwrap();
    assert_eq!(report.grid.len(), 20 * 6);

    let ingested = parse_bipartite_edges(text.as_bytes(), &Schema::default()).unwrap();
    let hg = induce_hypergraph(&ingested.graph);
    let index = IncidenceIndex::build(&hg);
    let (w, _) = goodness_weights(&ingested.graph, &hg, 1e-6, 100).unwrap();
    let spec = GridSpec { split: SplitSpec { seed: 9, ..SplitSpec::default() }, ..GridSpec::default() };
    let lib = grid_search(&hg, &index, &w, &spec).unwrap();
    assert_eq!(report.grid, lib.rows);
    assert_eq!(report.best, lib.best);
}

#[test]
fn evaluate_writes_artifacts_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "planted.tsv", &common::planted_ratings(5));
    let cfg = fixture(
        dir.path(),
        "run.toml",
        &format!("input = {:?}\ntask = \"label\"\nmethod = \"embedded\"\nk_max = 5\nseed = 2\n", p.to_str().unwrap()),
    );
    let mut reports = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let (code, _) = run_capture(&[
            "evaluate",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        for f in ["report.json", "grid.csv", "predictions.csv", "timing.json"] {
            assert!(out.join(f).exists(), "{f} missing");
        }
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);

    let (code, text) = run_capture(&["report", dir.path().join("out0/report.json").to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(String::from_utf8(text).unwrap().contains("best (selection)"));
}

#[test]
fn predict_handles_queries() {
    let dir = tempfile::tempdir().unwrap();
    let text = common::planted_ratings(6);
    let p = fixture(dir.path(), "planted.tsv", &text);
    let input = p.to_str().unwrap();

    // the raters of item0, which also carries a weight of its own
    let raters: Vec<&str> =
        text.lines().filter(|l| l.split('\t').nth(1) == Some("item0")).map(|l| l.split('\t').next().unwrap()).collect();
    let query = raters.join(",");
    let (code, out) = run_capture(&["predict", "--input", input, "--k", "1", &query]);
    assert_eq!(code, EXIT_OK);
    let rec: Value = serde_json::from_slice(&out).unwrap();

    let (_, csv) = run_capture(&["weights", "--input", input]);
    let csv = String::from_utf8(csv).unwrap();
    let own: f64 = csv
        .lines()
        .find(|l| l.split(',').nth(1) == Some("item0"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let predicted = rec["prediction"].as_f64().unwrap();
    assert!((predicted - own).abs() < 0.2, "{predicted} vs {own}");

    let (code, out) = run_capture(&["predict", "--input", input, "--method", "embedded", "--epsilon", "4/3", "user1"]);
    assert_eq!(code, EXIT_OK);
    let rec: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(rec["size"], 1);

    let (code, _) = run_capture(&["predict", "--input", input, "nobody"]);
    assert_eq!(code, EXIT_BAD_QUERY);
    let (code, _) = run_capture(&["predict", "--input", input]);
    assert_eq!(code, EXIT_BAD_QUERY);
}

#[test]
fn binary_exit_codes() {
    let status = bin().args(["weights", "--input", "/nonexistent/ratings.tsv"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_UNREADABLE));
    assert!(!status.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "tiny.tsv", "a\tx\t1\nb\tx\t2\n");
    let status = bin().args(["predict", "--input", p.to_str().unwrap(), "zed"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_BAD_QUERY));

    let status = bin().args(["ingest", "--input", p.to_str().unwrap()]).env("HYPERKNN_WORKERS", "2").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(v["hyperedges"], 1);
}

#[test]
fn columns_and_delimiter_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "ratings.csv", "item,user,rating\nx,a,5\nx,b,4\ny,a,1\n");
    let (code, out) =
        run_capture(&["ingest", "--input", p.to_str().unwrap(), "--delimiter", ",", "--columns", "1,0,2"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["hyperedges"], 2);
    assert_eq!(v["vertices"], 2);
    assert_eq!(v["malformed"], 1);

    let (code, _) = run_capture(&["ingest", "--input", p.to_str().unwrap(), "--columns", "1,0"]);
    assert_ne!(code, EXIT_OK);
}

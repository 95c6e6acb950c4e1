use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use edgecount::dataset::{io::format_observations, Metric, Observation, Payload, Sample};
use edgecount::simulate::{sample_mallows, MallowsModel, ThetaScale};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edgecount"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn put(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Distances a..e of the five-value example and a sidecar with m = (1, 3, 4, 3, 1).
fn figure_one(dir: &Path) -> (PathBuf, PathBuf) {
    let d = put(dir, "fig.csv", "0,1,1,3,3\n1,0,1,2,3\n1,1,0,3,2\n3,2,3,0,1\n3,3,2,1,0\n");
    let mut side = String::new();
    for (u, m) in [1, 3, 4, 3, 1].into_iter().enumerate() {
        for i in 0..m {
            side += &format!("{},{}\n", 1 + (u + i) % 2, u + 1);
        }
    }
    (d, put(dir, "fig_side.csv", &side))
}

/// Two samples of Mallows rankings on five objects from one model.
fn null_rankings(dir: &Path, n1: usize, n2: usize, seed: u64) -> PathBuf {
    let model = MallowsModel::new(5.0, (1..=5).collect(), Metric::Spearman, ThetaScale::Normalized).unwrap();
    let obs: Vec<Observation> = sample_mallows(&model, n1, seed)
        .into_iter()
        .map(|r| (r, Sample::One))
        .chain(sample_mallows(&model, n2, seed + 1).into_iter().map(|r| (r, Sample::Two)))
        .map(|(r, s)| Observation::new(Payload::ranking(r).unwrap(), s))
        .collect();
    put(dir, "rankings.csv", &format_observations(&obs))
}

#[test]
fn graph_reports_family_size_of_five_value_example() {
    let dir = TempDir::new().unwrap();
    let (d, side) = figure_one(dir.path());
    let o = run(&["graph", "--distances", s(&d), "--sidecar", s(&side), "--graph", "nnl", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("|G_C0| = 2239488"), "{out}");
    assert!(out.contains("|C0| = 6"));
}

#[test]
fn two_values_give_one_edge_and_export_round_trips() {
    let dir = TempDir::new().unwrap();
    let d = put(dir.path(), "two.csv", "0,4\n4,0\n");
    let o = run(&["graph", "--distances", s(&d), "--graph", "nnl", "1", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["c0_edges"], 1);

    let (fig, side) = figure_one(dir.path());
    let edges = dir.path().join("edges.txt");
    let built = run(&["graph", "--distances", s(&fig), "--sidecar", s(&side), "--graph", "nnl", "2", "--export", s(&edges), "--format", "json"]);
    let loaded = run(&["graph", "--distances", s(&fig), "--sidecar", s(&side), "--c0", s(&edges), "--format", "json"]);
    assert!(built.status.success() && loaded.status.success(), "{}", stderr(&loaded));
    assert_eq!(stdout(&built), stdout(&loaded));
}

#[test]
fn test_on_null_rankings_agrees_with_permutation() {
    let dir = TempDir::new().unwrap();
    let data = null_rankings(dir.path(), 120, 150, 4);
    let o = run(&["test", "-i", s(&data), "--kind", "rankings", "--graph", "nnl", "3", "--perm", "4000", "--seed", "3", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for summary in ["averaging", "union"] {
        let tests = v[summary]["tests"].as_array().unwrap();
        assert_eq!(tests.len(), 7);
        for t in tests {
            let (a, p) = (t["p_analytic"].as_f64().unwrap(), t["p_permutation"].as_f64().unwrap());
            assert!((a - p).abs() < 0.06, "{summary} {}: {a} vs {p}", t["name"]);
        }
    }
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let data = null_rankings(dir.path(), 60, 80, 9);
    let args = ["test", "-i", s(&data), "--kind", "rankings", "--perm", "500", "--seed", "11", "--format", "json"];
    let a = bin().args(args).env("EDGECOUNT_THREADS", "1").output().unwrap();
    let b = bin().args(args).arg("--threads").arg("4").output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);

    let stamped = run(&[&args[..], &["--timestamp"]].concat());
    let v: Value = serde_json::from_str(&stdout(&stamped)).unwrap();
    assert!(v["generated_at_unix"].as_u64().unwrap() > 0);
    assert!(v["report"]["averaging"].is_object());
}

#[test]
fn output_stem_writes_json_and_text() {
    let dir = TempDir::new().unwrap();
    let data = null_rankings(dir.path(), 40, 40, 2);
    let stem = dir.path().join("report");
    let o = run(&["test", "-i", s(&data), "--kind", "rankings", "--output", s(&stem)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(stem.with_extension("txt")).unwrap();
    assert!(text.contains("R_w,(a)") && text.contains("M(1.14),(u)"), "{text}");
    let json: Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["n"], 80);
}

#[test]
fn observation_level_msts_depend_on_the_seed() {
    let dir = TempDir::new().unwrap();
    let data = null_rankings(dir.path(), 80, 80, 21);
    let per_graph_s = |seed: &str| -> f64 {
        let o = run(&["test", "-i", s(&data), "--kind", "rankings", "--graph", "mst", "3", "--seed", seed, "--per-graph", "--format", "json"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let tests = v["per_graph"]["tests"].as_array().unwrap();
        tests.iter().find(|t| t["statistic"] == "S").unwrap()["value"].as_f64().unwrap()
    };
    let values: Vec<f64> = ["1", "2", "3", "4"].iter().map(|x| per_graph_s(x)).collect();
    assert!(values.windows(2).any(|w| w[0] != w[1]), "{values:?}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let single = put(dir.path(), "single.csv", "1,2,1,3\n2,2,1,3\n1,2,1,3\n");
    let o = run(&["test", "-i", s(&single), "--kind", "rankings"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("degenerate"));

    let bad = put(dir.path(), "bad.csv", "1,0.5,1\n2,oops,2\n");
    let o = run(&["test", "-i", s(&bad), "--kind", "vectors"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    assert_eq!(run(&["power", "S9-balanced"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--kind", "vectors"]).status.code(), Some(2));
    let d = put(dir.path(), "m.csv", "0,1\n1,0\n");
    assert_eq!(run(&["test", "--distances", s(&d)]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let start = Instant::now();
    let o = run(&["verify", "--max-n", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(start.elapsed().as_secs() < 60);
    assert!(stdout(&o).contains("200 instances"));

    let o = run(&["verify", "--max-n", "8", "--instances", "3", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let instance: Value = serde_json::from_str(err.trim_start_matches("verification failed: ").trim()).unwrap();
    assert!(instance["multiplicities"].is_array() && instance["c0"].is_array());
}

#[test]
fn power_prints_csv_and_accepts_toml() {
    let o = run(&["power", "S6-balanced", "--replicates", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "summary,R0,S,Rw,|Zd|,M(1.31),M(1.14),M(1)");
    assert!(lines[1].starts_with("a,") && lines[2].starts_with("u,"));

    let dir = TempDir::new().unwrap();
    let cfg = put(
        dir.path(),
        "s.toml",
        "name = \"tiny\"\nsample1 = \"uniform:before:1,2\"\nsample2 = \"uniform:before:2,1\"\nn1 = 30\nn2 = 30\ngraph = \"nnl:1\"\nobjects = 4\nreplicates = 10\n",
    );
    let o = run(&["power", "--config", s(&cfg), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["name"], "tiny");

    let list = stdout(&run(&["power", "--list"]));
    assert!(list.lines().any(|l| l == "T4-unbalanced"));
}

#[test]
fn dedup_output_feeds_distance_input() {
    let dir = TempDir::new().unwrap();
    let data = null_rankings(dir.path(), 50, 50, 5);
    let side = dir.path().join("side.csv");
    let matrix = dir.path().join("d.csv");
    let o = run(&["dedup", "-i", s(&data), "--kind", "rankings", "--sidecar-out", s(&side), "--matrix-out", s(&matrix)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("N = 100"));

    let direct = run(&["test", "-i", s(&data), "--kind", "rankings", "--format", "json"]);
    let via = run(&["test", "--distances", s(&matrix), "--sidecar", s(&side), "--format", "json"]);
    assert!(via.status.success(), "{}", stderr(&via));
    assert_eq!(direct.stdout, via.stdout);
}

use std::path::{Path, PathBuf};
use std::process::Command;

use fairmed_cli::{load_instance, run, CliError, PipelineKind, RunConfig};
use serde_json::Value;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn config(input: &Path, k: usize, policy: &str) -> RunConfig {
    RunConfig {
        input: input.to_path_buf(),
        matrix: None,
        k,
        policy: policy.to_string(),
        pipeline: PipelineKind::General,
        trials: None,
        seed: 0,
        threads: 1,
        strict_metric: false,
        forbid_empty: false,
        dump_dp: None,
        timing: false,
    }
}

fn json(cfg: &RunConfig) -> Value {
    serde_json::from_str(&run(cfg).unwrap().to_json()).unwrap()
}

const FIXTURE: &str = "id,group,x\na1,a,0\na2,a,0\nb1,b,1\nb2,b,1\n";

#[test]
fn euclidean_schema() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "id,group,x,y\n1,u,0,0\n2,v,3,4\n3,u,1,1\n4,w,0,2\n");
    let data = load_instance(&p, None).unwrap();
    assert_eq!(data.instance.len(), 4);
    assert_eq!(data.labels, ["u", "v", "w"]);
    assert_eq!(data.instance.metric().distance(0, 1).unwrap(), 5.0);
    assert!(data.virtual_map.is_none());
}

#[test]
fn overlapping_labels_become_virtual_groups() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "id,group\np,a|b\nq,a\nr,b\n");
    let m = write(dir.path(), "m.csv", "0,1,2\n1,0,1\n2,1,0\n");
    let data = load_instance(&p, Some(&m)).unwrap();
    let map = data.virtual_map.as_ref().unwrap();
    assert_eq!(map.num_virtual(), 3);
    assert_eq!(data.group_names(), ["a", "b", "a|b"]);

    let mut cfg = config(&p, 1, "alphabeta:1/2,1/2;1,1");
    cfg.matrix = Some(m.clone());
    let doc = json(&cfg);
    assert_eq!(doc["centers"][0]["admitted"], true);
    cfg.policy = "exact".into();
    assert!(matches!(run(&cfg), Err(CliError::Input(_))));
}

#[test]
fn ingestion_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "id,group\np,a\nq,b\n");
    let diag = write(dir.path(), "d.csv", "0.5,1\n1,0\n");
    let asym = write(dir.path(), "s.csv", "0,1\n2,0\n");
    assert!(load_instance(&p, Some(&diag)).unwrap_err().to_string().contains("diagonal"));
    assert!(load_instance(&p, Some(&asym)).unwrap_err().to_string().contains("asymmetric"));

    let ragged = write(dir.path(), "r.csv", "id,group,x\np,a,0\nq,b\n");
    let msg = load_instance(&ragged, None).unwrap_err().to_string();
    assert!(msg.contains(":3:"), "{msg}");
    let text = write(dir.path(), "t.csv", "id,group,x\np,a,zero\n");
    assert!(load_instance(&text, None).unwrap_err().to_string().contains("not a number"));
    let schema = write(dir.path(), "h.csv", "name,x,y\np,0,0\n");
    assert!(load_instance(&schema, None).is_err());
    assert!(load_instance(&p, None).is_err());
    let dup = write(dir.path(), "u.csv", "id,group,x\np,a,0\np,b,1\n");
    assert!(load_instance(&dup, None).unwrap_err().to_string().contains("duplicate"));
}

#[test]
fn fixture_exact_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", FIXTURE);
    let mut cfg = config(&p, 2, "exact");
    cfg.pipeline = PipelineKind::Exact;
    let doc = json(&cfg);
    assert_eq!(doc["costs"]["reduced"], 2.0);
    assert_eq!(doc["costs"]["original"], 2.0);
    for c in doc["centers"].as_array().unwrap() {
        assert_eq!(c["gamma"], "0");
        assert_eq!(c["admitted"], true);
    }
    assert!(doc["exact"]["movable_points"].as_u64().unwrap() <= doc["exact"]["movable_bound"].as_u64().unwrap());
}

#[test]
fn empty_cluster_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", FIXTURE);
    let doc = json(&config(&p, 2, "exact"));
    let centers = doc["centers"].as_array().unwrap();
    assert_eq!(centers.len(), 2);
    assert_eq!(doc["nonempty_clusters"], 1);
    let empty = centers.iter().find(|c| c["profile"] == serde_json::json!([0, 0])).unwrap();
    assert_eq!(empty["admitted"], true);

    let mut cfg = config(&p, 2, "exact");
    cfg.forbid_empty = true;
    let doc = json(&cfg);
    assert_eq!(doc["nonempty_clusters"], 2);
}

#[test]
fn trivial_policy_tracks_seeding() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.csv",
        "id,group,x\n0,a,0\n1,b,1\n2,a,2\n3,b,10\n4,a,11\n5,b,30\n",
    );
    let doc = json(&config(&p, 3, "none"));
    let costs = &doc["costs"];
    assert_eq!(costs["reduced"], 0.0);
    let (orig, reloc) = (costs["original"].as_f64().unwrap(), costs["relocation"].as_f64().unwrap());
    assert!(orig <= reloc + 1e-12);
}

#[test]
fn dump_dp_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", FIXTURE);
    let dump = dir.path().join("dp.txt");
    let mut cfg = config(&p, 2, "exact");
    cfg.dump_dp = Some(dump.clone());
    let doc = json(&cfg);
    let text = std::fs::read_to_string(dump).unwrap();
    let tree = doc["costs"]["tree"].as_f64().unwrap();
    assert!(text.lines().any(|l| l.split(' ').nth(1) == Some("0,0") && l.ends_with(&format!(" {tree}"))));
}

#[test]
fn strict_metric() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "id,group\np,a\nq,b\nr,a\n");
    let m = write(dir.path(), "m.csv", "0,1,5\n1,0,1\n5,1,0\n");
    let mut cfg = config(&p, 1, "none");
    cfg.matrix = Some(m);
    assert!(run(&cfg).is_ok());
    cfg.strict_metric = true;
    let err = run(&cfg).unwrap_err();
    assert!(err.to_string().contains("triangle"), "{err}");
}

#[test]
fn argument_checks() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", FIXTURE);
    assert!(run(&config(&p, 0, "exact")).is_err());
    let mut cfg = config(&p, 2, "none");
    cfg.pipeline = PipelineKind::Exact;
    assert!(matches!(run(&cfg), Err(CliError::Input(_))));
    let mut cfg = config(&p, 2, "exact");
    cfg.trials = Some(0);
    assert!(run(&cfg).is_err());
}

#[test]
fn timing_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", FIXTURE);
    let mut cfg = config(&p, 2, "exact");
    assert!(json(&cfg).get("timing_ms").is_none());
    cfg.timing = true;
    assert!(json(&cfg)["timing_ms"].as_f64().is_some());
}

fn fairmed(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fairmed")).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", FIXTURE);
    let input = p.to_str().unwrap();

    let ok = fairmed(&["--input", input, "--k", "2", "--seed", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(doc["pipeline"], "general");
    assert_eq!(doc["seed"], 5);

    let infeasible = fairmed(&["--input", input, "--k", "2", "--policy", "explicit:2,0"]);
    assert_eq!(infeasible.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&infeasible.stderr).contains("infeasible"));

    let bad = fairmed(&["--input", input, "--k", "2", "--policy", "fair"]);
    assert_eq!(bad.status.code(), Some(1));
    let missing = fairmed(&["--input", "/nonexistent/points.csv", "--k", "2"]);
    assert_eq!(missing.status.code(), Some(1));

    let out = dir.path().join("r.json");
    let to_file = fairmed(&["--input", input, "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().starts_with('{'));
}

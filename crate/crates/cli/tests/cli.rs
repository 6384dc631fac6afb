mod common;

use std::fs;
use std::path::Path;

use common::{core_fixtures, run, stderr, MockProvider};
use serde_json::{json, Value};
use shortage_core::engine::{read_dir, Trajectory};

fn write_json(path: &Path, v: &Value) -> String {
    fs::write(path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn config(dir: &Path, v: Value) -> String {
    write_json(&dir.join("config.json"), &v)
}

#[test]
fn simulate_writes_one_line_per_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({"n_manufacturers": 3, "horizon": 6, "disruption_prob": 0.3}));
    let out = dir.path().join("runs");
    let o = run(&["simulate", "--config", &cfg, "--seed", "5", "--replicates", "2", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in 0..2 {
        let text = fs::read_to_string(out.join(format!("run_r{r}.jsonl"))).unwrap();
        assert_eq!(text.lines().count(), 6);
        let t = Trajectory::read_files(&out.join(format!("run_r{r}.jsonl"))).unwrap();
        assert_eq!(t.header.seed, 5 + r);
    }
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({"disruption_prob": 0.4, "horizon": 8}));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", &cfg, "--seed", "9", "--replicates", "1", "--out", p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["run_r0.jsonl", "run_r0.header.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", p(&dir.path().join("missing.json")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let bad = config(dir.path(), json!({"horizon": 13}));
    let o = run(&["simulate", "--config", &bad, "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let unknown = config(dir.path(), json!({"horizon": 6, "horizn": 7}));
    let o = run(&["simulate", "--config", &unknown, "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizn"));
}

#[test]
fn llm_without_key_names_the_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({}));
    let provider = write_json(&dir.path().join("provider.json"), &json!({"api_key_env": "SHORTAGE_TEST_KEY_NOT_SET"}));
    let o = common::bin()
        .args(["simulate", "--config", &cfg, "--policies", "llm", "--provider", &provider, "--out", p(dir.path())])
        .env_remove("SHORTAGE_TEST_KEY_NOT_SET")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("SHORTAGE_TEST_KEY_NOT_SET"), "{}", stderr(&o));
}

#[test]
fn llm_simulation_over_http() {
    let mock = MockProvider::schema_filling();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({"n_manufacturers": 2, "horizon": 4, "disruption_prob": 0.0}));
    let provider = write_json(&dir.path().join("provider.json"), &mock.config("SHORTAGE_TEST_KEY", 1));
    let out = dir.path().join("runs");
    let o = common::bin()
        .args(["simulate", "--config", &cfg, "--policies", "llm", "--provider", &provider, "--replicates", "1", "--out", p(&out)])
        .env("SHORTAGE_TEST_KEY", "test-key")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Trajectory::read_files(&out.join("run_r0.jsonl")).unwrap();
    let decisions: Vec<_> = t.records.iter().flat_map(|r| &r.decisions).collect();
    assert_eq!(decisions.len(), 4 * 4);
    assert!(decisions.iter().all(|d| !d.fallback && d.backend.starts_with("llm")), "{:?}", decisions[0].backend);
    // Analyze and decide per agent per quarter.
    assert_eq!(mock.calls(), 2 * 16);
    let audit = fs::read_to_string(out.join("audit.jsonl")).unwrap();
    assert_eq!(audit.lines().count(), 32);
    assert!(!audit.contains("test-key"));
}

#[test]
fn gateway_exhaustion_without_fallback_exits_3() {
    let mock = MockProvider::start(|_| (200, common::chat_reply("not json at all")));
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({"horizon": 4}));
    let provider = write_json(&dir.path().join("provider.json"), &mock.config("SHORTAGE_TEST_KEY", 2));
    let args = ["simulate", "--config", &cfg, "--policies", "llm", "--provider", &provider, "--replicates", "1"];
    let o = common::bin().args(args).args(["--no-fallback", "--out", p(&dir.path().join("a"))]).env("SHORTAGE_TEST_KEY", "k").output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(mock.calls(), 3);

    let o = common::bin().args(args).args(["--out", p(&dir.path().join("b"))]).env("SHORTAGE_TEST_KEY", "k").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Trajectory::read_files(&dir.path().join("b/run_r0.jsonl")).unwrap();
    assert!(t.records.iter().flat_map(|r| &r.decisions).all(|d| d.fallback && d.backend == "rule"));
}

#[test]
fn simulate_from_gt_case_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({}));
    let gt = core_fixtures().join("reported/gt.json");
    let out = dir.path().join("runs");
    let o = run(&["simulate", "--config", &cfg, "--gt", p(&gt), "--case", "GT-3", "--replicates", "1", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = out.join("GT-3_r0.jsonl");
    let t = Trajectory::read_files(&path).unwrap();
    assert_eq!(t.header.case_id.as_deref(), Some("GT-3"));
    assert_eq!(t.records.len(), 5);
    assert_eq!(t.records[0].disrupted_set, vec![0]);

    let o = run(&["replay", "--trajectory", p(&path), "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("matches all 5 periods"));
    let replayed = Trajectory::read_files(&dir.path().join("GT-3_r0.replay.jsonl")).unwrap();
    assert!(replayed.records.iter().flat_map(|r| &r.decisions).all(|d| d.backend == "scripted"));

    let scripted = dir.path().join("scripted");
    let o = run(&["simulate", "--config", &cfg, "--gt", p(&gt), "--case", "GT-3", "--replicates", "1", "--policies", "script", "--script", p(&path), "--out", p(&scripted)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let again = Trajectory::read_files(&scripted.join("GT-3_r0.jsonl")).unwrap();
    for (a, b) in t.records.iter().zip(&again.records) {
        assert_eq!((a.total_supply, a.shortage), (b.total_supply, b.shortage));
    }

    let o = run(&["simulate", "--config", &cfg, "--gt", p(&gt), "--case", "GT-999", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_detects_a_doctored_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({"disruption_prob": 0.0}));
    let o = run(&["simulate", "--config", &cfg, "--replicates", "1", "--out", p(dir.path())]);
    assert!(o.status.success());
    let path = dir.path().join("run_r0.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    lines[2]["total_supply"] = json!(0.5);
    fs::write(&path, lines.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    let o = run(&["replay", "--trajectory", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("period 3"), "{}", stderr(&o));
}

#[test]
fn baseline_over_http() {
    let mock = MockProvider::schema_filling();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), json!({}));
    let provider = write_json(&dir.path().join("provider.json"), &mock.config("SHORTAGE_TEST_KEY", 0));
    let gt = core_fixtures().join("reported/gt.json");
    let out = dir.path().join("zs");
    let o = common::bin()
        .args(["baseline", "--config", &cfg, "--gt", p(&gt), "--case", "GT-12", "--provider", &provider, "--out", p(&out)])
        .env("SHORTAGE_TEST_KEY", "k")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Trajectory::read_files(&out.join("GT-12_r0.jsonl")).unwrap();
    assert_eq!(t.records.len(), 4);
    assert_eq!(t.header.label, shortage_core::engine::RunLabel::ZeroShot);
    // Filled replies say demand = supply = shortage = 0.1, which is inconsistent.
    assert!(t.records.iter().all(|r| r.flags.iter().any(|f| f.starts_with("shortage inconsistent"))));

    let o = common::bin()
        .args(["baseline", "--config", &cfg, "--provider", &provider, "--out", p(&out)])
        .env_remove("SHORTAGE_TEST_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn curate_fixture_corpus() {
    let corpus = core_fixtures().join("corpus");
    let manifest: Value = serde_json::from_slice(&fs::read(corpus.join("manifest.json")).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["curate", "--snapshots", p(&corpus.join("snapshots")), "--ndc-directory", p(&corpus.join("ndc_directory.csv")), "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let events: Vec<Value> = serde_json::from_slice(&fs::read(dir.path().join("events.json")).unwrap()).unwrap();
    assert_eq!(events.len() as u64, manifest["events"].as_u64().unwrap());
    let gt: Vec<Value> = serde_json::from_slice(&fs::read(dir.path().join("gt.json")).unwrap()).unwrap();
    let expected: u64 = manifest["trajectories"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(gt.len() as u64, expected);
    // The corpus carries malformed rows; they are reported, not fatal.
    let rejects: Vec<Value> = serde_json::from_slice(&fs::read(dir.path().join("rejects.json")).unwrap()).unwrap();
    assert!(!rejects.is_empty());
    assert!(dir.path().join("stats.json").is_file());

    let empty = tempfile::tempdir().unwrap();
    let o = run(&["curate", "--snapshots", p(empty.path()), "--ndc-directory", p(&corpus.join("ndc_directory.csv")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_reports_table_means() {
    let fx = core_fixtures().join("reported");
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--runs", p(&fx.join("simulated")), "--gt", p(&fx.join("gt.json")), "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    let disc = table.lines().find(|l| l.starts_with("simulated") && l.contains("FDA-Disc")).unwrap();
    assert!(disc.contains("79.1") && disc.contains("1.40"), "{disc}");
    let nr = table.lines().find(|l| l.starts_with("simulated") && l.contains("FDA-NR")).unwrap();
    assert!(nr.contains("37.5") && nr.contains("-22.70"), "{nr}");
    for f in ["report.json", "report.txt", "plot.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let plot = fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    let rows = read_dir(&fx.join("simulated")).unwrap().iter().map(|(_, t)| t.records.len()).sum::<usize>();
    assert_eq!(plot.lines().count(), rows + 1);

    let o = run(&["eval", "--runs", p(&fx.join("zero_shot")), "--gt", p(&fx.join("gt.json")), "--scenario", "zero-shot", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["datasets"].as_array().unwrap().iter().all(|d| d["mean_fip"].is_null()));

    let o = run(&["eval", "--runs", p(&fx.join("zero_shot")), "--gt", p(&fx.join("gt.json")), "--scenario", "simulated"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unpaired_runs_exit_4() {
    let fx = core_fixtures().join("reported");
    let dir = tempfile::tempdir().unwrap();
    let gt: Vec<Value> = serde_json::from_slice(&fs::read(fx.join("gt.json")).unwrap()).unwrap();
    let partial = write_json(&dir.path().join("gt.json"), &Value::Array(gt[1..].to_vec()));
    let o = run(&["eval", "--runs", p(&fx.join("simulated")), "--gt", &partial]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("GT-1"), "{}", stderr(&o));
}

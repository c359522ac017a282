use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use onemap::benchmark::{load_dataset, read_result_log, Report};
use onemap::config::Config;

fn onemap(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_onemap"));
    cmd.current_dir(dir).args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("ONEMAP_")) {
        cmd.env_remove(k);
    }
    cmd.envs(env.iter().copied());
    cmd.output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &[(&str, &str)] = &[("ONEMAP_DATASET_N_WORLDS", "2"), ("ONEMAP_DATASET_N_EPISODES", "4")];

fn small_dataset(dir: &Path) -> PathBuf {
    ok(onemap(dir, &["gen", "--out", "ds"], SMALL));
    dir.join("ds")
}

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn reference_config_holds_the_defaults() {
    let text = std::fs::read_to_string(reference_config()).unwrap();
    assert_eq!(Config::from_toml(&text).unwrap(), Config::default());
}

#[test]
fn gen_writes_the_default_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let config = reference_config();
    let stdout = ok(onemap(tmp.path(), &["gen", "--config", config.to_str().unwrap()], &[]));
    assert!(stdout.contains("worlds 10  episodes 100  goals 300"), "{stdout}");
    let data = load_dataset(&tmp.path().join("dataset")).unwrap();
    assert_eq!(data.worlds.len(), 10);
    assert_eq!(data.episodes.len(), 100);
    assert!(data.episodes.iter().all(|e| e.goals.len() == 3));
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    ok(onemap(tmp.path(), &["gen", "--seed", "7", "--out", "a"], SMALL));
    ok(onemap(tmp.path(), &["gen", "--out", "b"], &[SMALL, &[("ONEMAP_SEED", "7")]].concat()));
    ok(onemap(tmp.path(), &["gen", "--seed", "8", "--out", "c"], SMALL));
    let read = |d: &str, f: &str| std::fs::read(tmp.path().join(d).join(f)).unwrap();
    for f in ["episodes.json", "worlds/world_000.json", "worlds/world_001.json"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "episodes.json"), read("c", "episodes.json"));
}

#[test]
fn run_logs_are_byte_identical_across_runs_and_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    let ds = ds.to_str().unwrap();
    ok(onemap(tmp.path(), &["run", "--dataset", ds, "--out", "r1", "--jobs", "1"], &[]));
    ok(onemap(tmp.path(), &["run", "--dataset", ds, "--out", "r2", "--jobs", "3"], &[]));
    let a = std::fs::read(tmp.path().join("r1/results.jsonl")).unwrap();
    let b = std::fs::read(tmp.path().join("r2/results.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let results = read_result_log(a.as_slice()).unwrap();
    let ids: Vec<u64> = results.iter().map(|r| r.episode_id).collect();
    assert_eq!(ids, vec![0, 1, 2, 3]);
    for f in ["report.json", "per_object.png"] {
        assert!(tmp.path().join("r1").join(f).exists(), "{f}");
    }
}

#[test]
fn empty_dataset_gives_an_empty_log_and_flagged_report() {
    let tmp = tempfile::tempdir().unwrap();
    ok(onemap(tmp.path(), &["gen", "--out", "ds"], &[("ONEMAP_DATASET_N_WORLDS", "1"), ("ONEMAP_DATASET_N_EPISODES", "0")]));
    ok(onemap(tmp.path(), &["run", "--dataset", "ds", "--out", "r"], &[]));
    assert!(std::fs::read(tmp.path().join("r/results.jsonl")).unwrap().is_empty());
    let report: Report = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("r/report.json")).unwrap()).unwrap();
    assert!(report.empty);
    assert_eq!(report.episodes, 0);
}

#[test]
fn malformed_dataset_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("bad")).unwrap();
    std::fs::write(tmp.path().join("bad/episodes.json"), "{ not json").unwrap();
    let out = onemap(tmp.path(), &["run", "--dataset", "bad"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
    let missing = onemap(tmp.path(), &["oracle", "--dataset", "nowhere"], &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(onemap(tmp.path(), &["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(onemap(tmp.path(), &["run"], &[]).status.code(), Some(1));
    assert_eq!(onemap(tmp.path(), &["gen", "--seed", "x"], &[]).status.code(), Some(1));
    assert_eq!(onemap(tmp.path(), &["--help"], &[]).status.code(), Some(0));
}

#[test]
fn invalid_config_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[mapping]\nbogus = 1\n").unwrap();
    assert_eq!(onemap(tmp.path(), &["gen", "--config", "c.toml"], &[]).status.code(), Some(2));
    let out = onemap(tmp.path(), &["gen"], &[("ONEMAP_EXPLORATION_TAU_E", "5.0")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_prints_one_line_per_goal() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    let stdout = ok(onemap(tmp.path(), &["oracle", "--dataset", ds.to_str().unwrap()], &[]));
    let lines: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 12);
    assert!(lines.iter().all(|l| l["oracle_path_length"].as_f64().unwrap() >= 0.0));
}

#[test]
fn snapshot_renders_saved_states() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    ok(onemap(tmp.path(), &["run", "--dataset", ds.to_str().unwrap(), "--out", "r", "--save-states"], &[]));
    let state = "r/states/episode_000000.state";
    let stdout = ok(onemap(tmp.path(), &["snapshot", "--state", state, "--layer", "all", "--query", "chair", "--out", "s"], &[]));
    assert_eq!(stdout.lines().count(), 7);
    for name in ["similarity", "variance", "search_variance", "observed", "explored", "searched", "navigable"] {
        assert!(tmp.path().join(format!("s/{name}.png")).exists(), "{name}");
        assert!(tmp.path().join(format!("s/{name}.png.json")).exists(), "{name}");
    }
    let unknown = onemap(tmp.path(), &["snapshot", "--state", state, "--query", "unicorn"], &[]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("not found"));
    let no_query = onemap(tmp.path(), &["snapshot", "--state", state], &[]);
    assert_eq!(no_query.status.code(), Some(2));
}

#[test]
fn corridor_suite_is_solved() {
    let tmp = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/easy_corridor.toml");
    let config = config.to_str().unwrap();
    ok(onemap(tmp.path(), &["--config", config, "gen", "--out", "ds"], &[]));
    ok(onemap(tmp.path(), &["--config", config, "run", "--dataset", "ds", "--out", "r"], &[]));
    let report: Report = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("r/report.json")).unwrap()).unwrap();
    assert_eq!(report.episodes, 25);
    assert_eq!(report.metrics.unwrap().sr, 1.0);
}

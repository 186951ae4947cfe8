use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = "
city.node_count = 60
city.grid_extent = 10
data.train = 30
data.dev = 6
data.test = 6
train.max_epochs = 2
obs.grid = 8
model.word_embed = 3
model.text_hidden = 3
model.conv = 2x3s2
model.visual_dim = 3
model.trajectory_hidden = 4
model.action_embed = 2
model.time_embed = 3
";

fn stopnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stopnav")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn smoke_config(dir: &Path) -> String {
    let p = dir.join("smoke.cfg");
    std::fs::write(&p, SMOKE).unwrap();
    p.display().to_string()
}

fn error_line(o: &Output) -> serde_json::Value {
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not a JSON error line: {line} ({e})"))
}

#[test]
fn defaults_lists_every_key() {
    let o = stopnav(&["defaults"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("loss.lambda = 20"));
    assert!(text.contains("model.trajectory_hidden = 64"));
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("run");
    let out_s = out.display().to_string();

    let o = stopnav(&["make-dataset", "--config", &cfg, "--out", &dir.path().join("data").display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "train=30 dev=6 test=6 nodes=60");

    let o = stopnav(&["train", "--config", &cfg, "--seed", "1,2", "--out", &out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("split,seeds,TC,TC_min,TC_max,"));
    assert_eq!(table.lines().count(), 3);
    for f in ["manifest.json", "seed-1/checkpoint.json", "seed-2/test.csv", "data/train.tsv"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let o = stopnav(&["eval", "--config", &cfg, "--seed", "1,2", "--out", &out_s]);
    assert!(o.status.success());
    assert!(out.join("eval-none.csv").is_file());
    let o = stopnav(&["oracle-eval", "--config", &cfg, "--seed", "1", "--out", &out_s, "--mode", "ORACLE_STOP"]);
    assert!(o.status.success());
    assert!(out.join("seed-1/oracle_stop-dev.csv").is_file());

    let o = stopnav(&["sweep", "--config", &cfg, "--seed", "1,2", "--out", &out_s, "--param", "tau", "--values", "0.3,0.7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
    assert!(!out.join("base").exists());

    let o = stopnav(&["ablate", "--config", &cfg, "--seed", "1", "--out", &dir.path().join("abl").display().to_string(),
        "--variants", "FULL,NO_WEIGHTING", "--set", "train.max_epochs=1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = String::from_utf8(o.stdout).unwrap();
    assert!(rows.lines().nth(1).unwrap().starts_with("FULL,1,"));
}

#[test]
fn failures_print_machine_readable_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().display().to_string();

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "model.hidden = 3\n").unwrap();
    let e = error_line(&stopnav(&["train", "--config", &bad.display().to_string(), "--out", &out]));
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("bad.cfg:1"));

    let e = error_line(&stopnav(&["eval", "--config", &cfg, "--seed", "5", "--out", &out]));
    assert_eq!(e["error"], "missing_checkpoint");
    assert!(e["path"].as_str().unwrap().ends_with("checkpoint.json"));

    let e = error_line(&stopnav(&["sweep", "--config", &cfg, "--out", &out, "--param", "gamma", "--values", "1.5"]));
    assert_eq!(e["error"], "invalid");
    let e = error_line(&stopnav(&["ablate", "--config", &cfg, "--out", &out, "--variants", "HALF"]));
    assert_eq!(e["error"], "invalid");
    let e = error_line(&stopnav(&["train", "--config", "/nonexistent.cfg", "--out", &out]));
    assert_eq!(e["error"], "io");
}

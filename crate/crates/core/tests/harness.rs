mod common;

use std::collections::HashSet;
use std::path::Path;

use stopnav::harness::*;
use stopnav::metrics::{evaluate, MetricsConfig};
use stopnav::training::OracleMode;
use stopnav::world::HopTable;

fn smoke() -> ExperimentConfig {
    ExperimentConfig::parse(common::SMOKE_CONFIG).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn dataset_counts_and_files() {
    let mut cfg = smoke();
    cfg.set("data.train", "10").unwrap();
    cfg.set("data.dev", "2").unwrap();
    cfg.set("data.test", "2").unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset_files(&make_dataset(&cfg).unwrap(), dir.path()).unwrap();
    let lines: usize = SPLITS.iter().map(|s| read(&dir.path().join(format!("{s}.tsv"))).lines().count()).sum();
    assert_eq!(lines, 14);

    let again = tempfile::tempdir().unwrap();
    write_dataset_files(&make_dataset(&cfg).unwrap(), again.path()).unwrap();
    for f in ["city.graph", "train.tsv", "dev.tsv", "test.tsv"] {
        assert_eq!(read(&dir.path().join(f)), read(&again.path().join(f)), "{f}");
    }
    let loaded = load_dataset(dir.path(), cfg.city.max_degree).unwrap();
    assert_eq!(loaded.train, make_dataset(&cfg).unwrap().train);
}

#[test]
fn default_splits_are_route_disjoint() {
    let data = make_dataset(&ExperimentConfig::default()).unwrap();
    assert_eq!((data.train.len(), data.dev.len(), data.test.len()), (2000, 400, 400));
    let set = |r: &[stopnav::language::DatasetRecord]| r.iter().map(|x| x.route.clone()).collect::<HashSet<_>>();
    let (tr, dv, te) = (set(&data.train), set(&data.dev), set(&data.test));
    assert!(tr.is_disjoint(&dv) && tr.is_disjoint(&te) && dv.is_disjoint(&te));
}

#[test]
fn infeasible_dataset_is_diagnosed() {
    let mut cfg = smoke();
    cfg.set("route.min_key_points", "6").unwrap();
    cfg.set("route.max_len", "6").unwrap();
    cfg.set("route.max_attempts", "20").unwrap();
    assert!(matches!(make_dataset(&cfg), Err(HarnessError::Infeasible(_))));
}

#[test]
fn smoke_run_emits_artifacts_and_is_deterministic() {
    let cfg = smoke();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = run_experiment(&cfg, &[1], Some(a.path())).unwrap();
    run_experiment(&cfg, &[1], Some(b.path())).unwrap();
    assert_eq!(run.manifest.seeds, vec![1]);
    assert_eq!(run.manifest.results[0].epochs_run, 5);
    for f in ["checkpoint.json", "model.json", "config.txt", "train.log", "dev.csv", "test.csv"] {
        let (x, y) = (a.path().join("seed-1").join(f), b.path().join("seed-1").join(f));
        if f != "train.log" {
            assert_eq!(read(&x), read(&y), "{f} differs between identical runs");
        }
    }
    let manifest: RunManifest = serde_json::from_str(&read(&a.path().join("manifest.json"))).unwrap();
    assert_eq!(ExperimentConfig::parse(&manifest.config).unwrap(), cfg);
    assert_eq!(manifest.code_version, CODE_VERSION);

    // The checkpoint evaluates to the recorded dev report.
    let prep = prepare(&cfg).unwrap();
    let dev = oracle_eval(&cfg, &prep, &a.path().join("seed-1"), OracleMode::None, Split::Dev).unwrap();
    assert_eq!(dev, run.dev[0]);
    assert!(matches!(
        oracle_eval(&cfg, &prep, &a.path().join("seed-9"), OracleMode::OracleStop, Split::Dev),
        Err(HarnessError::MissingCheckpoint(_))
    ));
}

#[test]
fn ablation_rows_and_variants() {
    let mut cfg = smoke();
    cfg.set("train.max_epochs", "1").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (rows, runs) = ablate(&cfg, &[Ablation::NoWeighting, Ablation::Full], &[1], Some(dir.path())).unwrap();
    assert_eq!(rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(), ["NO_WEIGHTING", "FULL"]);
    assert_eq!(runs.len(), 2);
    assert_eq!(read(&dir.path().join("ablation.csv")).lines().count(), 3);
    assert!(dir.path().join("FULL/seed-1/checkpoint.json").is_file());

    assert!("HALF".parse::<Ablation>().is_err());
    assert!(ablate(&cfg, &[Ablation::Full, Ablation::Full], &[1], None).is_err());
    let mut unit = cfg.clone();
    unit.loss.lambda = 1.0;
    assert_eq!(ablation_config(&unit, Ablation::Full), ablation_config(&cfg, Ablation::NoWeighting));
    assert!(ablation_config(&cfg, Ablation::OneBranch).model.variant.is_one_branch());
    assert!(!ablation_config(&cfg, Ablation::NoKeyPoints).model.key_point_gating);
}

#[test]
fn tau_sweep_reuses_checkpoints() {
    let cfg = smoke();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, &[2], Some(dir.path())).unwrap();
    let ckpt = dir.path().join("seed-2/checkpoint.json");
    let before = (read(&ckpt), std::fs::metadata(&ckpt).unwrap().modified().unwrap());
    let values: Vec<f64> = (1..=9).map(|k| f64::from(k) / 10.0).collect();
    let rows = sweep(&cfg, SweepParam::Tau, &values, &[2], Some(dir.path())).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(!dir.path().join("base").exists(), "tau sweep retrained");
    assert_eq!((read(&ckpt), std::fs::metadata(&ckpt).unwrap().modified().unwrap()), before);
    assert_eq!(read(&dir.path().join("sweep-tau.csv")).lines().count(), 10);
}

#[test]
fn sweep_domains_and_reproducibility() {
    let cfg = smoke();
    assert!(sweep(&cfg, SweepParam::Gamma, &[1.5], &[1], None).is_err());
    assert!(sweep(&cfg, SweepParam::Lambda, &[-1.0], &[1], None).is_err());
    assert!(sweep(&cfg, SweepParam::Tau, &[], &[1], None).is_err());
    assert!("delta".parse::<SweepParam>().is_err());
    let mut quick = cfg.clone();
    quick.set("train.max_epochs", "1").unwrap();
    let a = sweep(&quick, SweepParam::Gamma, &[0.2, 0.8], &[3], None).unwrap();
    let b = sweep(&quick, SweepParam::Gamma, &[0.2, 0.8], &[3], None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2);
}

#[test]
fn emitted_reports() {
    let (g, episodes) = common::ten_episode_fixture();
    let h = HopTable::new(&g);
    let one = evaluate(&g, &h, &episodes[..1], &MetricsConfig::default()).unwrap();
    let csv = emit_results(&one, Format::Csv).unwrap();
    assert_eq!(csv.lines().count(), 3, "header, one episode, means");
    assert!(csv.starts_with("episode,TC,SPD,SED,CLS,SDTW\n"));

    let ten = evaluate(&g, &h, &episodes, &MetricsConfig::default()).unwrap();
    let jsonl = emit_results(&ten, Format::JsonLines).unwrap();
    assert_eq!(jsonl.lines().count(), 11);
    assert_eq!(parse_json_lines(&jsonl).unwrap(), ten);
    let golden = include_str!("golden/ten_episodes.csv");
    assert_eq!(emit_results(&ten, Format::Csv).unwrap(), golden);

    let empty = stopnav::metrics::MetricsReport { episodes: vec![], mean: ten.mean.clone() };
    assert!(emit_results(&empty, Format::Csv).is_err());
    let err = write_results(Path::new("/proc/nonexistent/x.csv"), &ten, Format::Csv).unwrap_err();
    assert!(err.to_string().contains("/proc/nonexistent"), "{err}");
}

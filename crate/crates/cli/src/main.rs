//! Command-line front end for datasets, training runs, ablations and sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stopnav::harness::{self, Ablation, ExperimentConfig, HarnessError, Split, SummaryRow, SweepParam};
use stopnav::training::OracleMode;

#[derive(Parser)]
#[command(name = "stopnav", version, about = "Stop/direction navigation experiments on synthetic cities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Comma-separated run seeds [default: 1,2,3].
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the city and the train/dev/test files. A single --seed replaces data.seed.
    MakeDataset(Common),
    /// Train one model per seed and evaluate it on dev and test.
    Train(Common),
    /// Re-evaluate the checkpoints in --out without oracles.
    Eval(Common),
    /// Train the FULL model and its ablations on the same data and seeds.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "FULL,ONE_BRANCH,NO_KEY_POINTS,NO_WEIGHTING")]
        variants: Vec<String>,
    },
    /// Evaluate the checkpoints in --out with oracle stop or direction.
    OracleEval {
        #[command(flatten)]
        common: Common,
        /// ORACLE_STOP, ORACLE_DIRECTION or NONE; repeatable.
        #[arg(long, value_delimiter = ',', default_value = "ORACLE_STOP,ORACLE_DIRECTION")]
        mode: Vec<String>,
    },
    /// Dev metrics over a grid of tau, gamma or lambda.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Print every config key with its default value.
    Defaults,
}

const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];

impl Common {
    fn seeds(&self) -> Vec<u64> {
        if self.seed.is_empty() {
            DEFAULT_SEEDS.to_vec()
        } else {
            self.seed.clone()
        }
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        cfg.apply(&text).map_err(|e| match e {
            HarnessError::ConfigLine { line, msg } => HarnessError::Config(format!("{}:{line}: {msg}", path.display())),
            other => other,
        })?;
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_rows(key: &str, rows: &[SummaryRow]) {
    print!("{}", harness::summary_csv(key, rows));
}

fn make_dataset(c: &Common) -> Result<(), HarnessError> {
    let mut cfg = load_config(c)?;
    match c.seed.as_slice() {
        [] => {}
        [s] => cfg.data_seed = *s,
        _ => return Err(HarnessError::Invalid("make-dataset takes at most one --seed".into())),
    }
    let data = harness::make_dataset(&cfg)?;
    harness::write_dataset_files(&data, &c.out)?;
    std::fs::write(c.out.join("config.txt"), cfg.to_text())
        .map_err(|source| HarnessError::Io { path: c.out.join("config.txt"), source })?;
    println!("train={} dev={} test={} nodes={}", data.train.len(), data.dev.len(), data.test.len(), data.graph.node_count());
    Ok(())
}

fn train(c: &Common) -> Result<(), HarnessError> {
    let cfg = load_config(c)?;
    let run = harness::run_experiment(&cfg, &c.seeds(), Some(&c.out))?;
    for r in &run.manifest.results {
        if let Some(d) = &r.diverged {
            log::warn!("seed {} diverged: {d}", r.seed);
        }
    }
    print_rows("split", &[run.summary("dev", Split::Dev), run.summary("test", Split::Test)]);
    Ok(())
}

fn oracle_modes(names: &[String]) -> Result<Vec<OracleMode>, HarnessError> {
    names.iter().map(|n| n.parse::<OracleMode>().map_err(|e| HarnessError::Invalid(e.to_string()))).collect()
}

fn evaluate(c: &Common, modes: &[OracleMode]) -> Result<(), HarnessError> {
    let cfg = load_config(c)?;
    for &mode in modes {
        let rows = harness::evaluate_checkpoints(&cfg, &c.seeds(), &c.out, mode)?;
        println!("# {mode}");
        print_rows("split", &rows);
    }
    Ok(())
}

fn run(command: &Command) -> Result<(), HarnessError> {
    match command {
        Command::MakeDataset(c) => make_dataset(c),
        Command::Train(c) => train(c),
        Command::Eval(c) => evaluate(c, &[OracleMode::None]),
        Command::OracleEval { common, mode } => evaluate(common, &oracle_modes(mode)?),
        Command::Ablate { common, variants } => {
            let cfg = load_config(common)?;
            let variants = variants.iter().map(|v| v.parse()).collect::<Result<Vec<Ablation>, _>>()?;
            let (rows, _) = harness::ablate(&cfg, &variants, &common.seeds(), Some(&common.out))?;
            print_rows("variant", &rows);
            Ok(())
        }
        Command::Sweep { common, param, values } => {
            let cfg = load_config(common)?;
            let param: SweepParam = param.parse()?;
            let rows = harness::sweep(&cfg, param, values, &common.seeds(), Some(&common.out))?;
            let rows: Vec<SummaryRow> =
                rows.into_iter().map(|r| SummaryRow { label: r.value.to_string(), ..r.dev }).collect();
            print_rows(param.as_str(), &rows);
            Ok(())
        }
        Command::Defaults => {
            for (key, value, doc) in ExperimentConfig::documented_defaults() {
                println!("{key} = {value}  # {doc}");
            }
            Ok(())
        }
    }
}

fn error_line(e: &HarnessError) -> String {
    let mut obj = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    let path: Option<&Path> = match e {
        HarnessError::Io { path, .. } | HarnessError::Parse { path, .. } | HarnessError::MissingCheckpoint(path) => Some(path),
        _ => None,
    };
    if let Some(p) = path {
        obj["path"] = serde_json::Value::from(p.display().to_string());
    }
    obj.to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(1)
        }
    }
}

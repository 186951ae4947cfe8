use std::collections::HashSet;
use std::path::Path;

use rand::Rng;

use super::{read_file, write_file, ExperimentConfig, HarnessError};
use crate::language::{instruction_text, parse_dataset, tokenize, write_dataset, DatasetRecord, Vocabulary};
use crate::rng;
use crate::training::Sample;
use crate::world::{generate_city, load_graph_with, sample_route, save_graph, CityGraph, NodeId};

pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

const GRAPH_FILE: &str = "city.graph";

/// A city and three route-disjoint splits.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: CityGraph,
    pub train: Vec<DatasetRecord>,
    pub dev: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn split(&self, name: &str) -> Option<&[DatasetRecord]> {
        match name {
            "train" => Some(&self.train),
            "dev" => Some(&self.dev),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// Generates the city and the splits. Each split draws record seeds from
/// its own stream; a route already used by any split is redrawn.
pub fn make_dataset(cfg: &ExperimentConfig) -> Result<Dataset, HarnessError> {
    cfg.validate()?;
    let graph = generate_city(&cfg.city, cfg.city_seed)?;
    let mut used: HashSet<Vec<NodeId>> = HashSet::new();
    let mut splits = Vec::with_capacity(3);
    for (name, count) in SPLITS.iter().zip([cfg.train_count, cfg.dev_count, cfg.test_count]) {
        let mut seeds = rng::stream(&format!("dataset.{name}"), cfg.data_seed);
        let budget = 50 * count + 1000;
        let mut records = Vec::with_capacity(count);
        let mut draws = 0;
        while records.len() < count {
            if draws == budget {
                return Err(HarnessError::Infeasible(format!(
                    "split {name}: only {} distinct routes after {budget} draws (wanted {count})",
                    records.len()
                )));
            }
            draws += 1;
            let seed: u64 = seeds.gen::<u64>() >> 1;
            let route = sample_route(&graph, seed, &cfg.route)
                .map_err(|e| HarnessError::Infeasible(format!("split {name}: {e}")))?;
            if !used.insert(route.clone()) {
                continue;
            }
            let text = instruction_text(&route, &graph, seed);
            records.push(DatasetRecord { route, text, seed });
        }
        splits.push(records);
    }
    let test = splits.pop().unwrap_or_default();
    let dev = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    Ok(Dataset { graph, train, dev, test })
}

/// Writes `city.graph` and one `<split>.tsv` per split into `dir`.
pub fn write_dataset_files(data: &Dataset, dir: &Path) -> Result<(), HarnessError> {
    write_file(&dir.join(GRAPH_FILE), &save_graph(&data.graph))?;
    for name in SPLITS {
        let records = data.split(name).unwrap_or_default();
        write_file(&dir.join(format!("{name}.tsv")), &write_dataset(records))?;
    }
    Ok(())
}

pub fn load_dataset(dir: &Path, max_degree: usize) -> Result<Dataset, HarnessError> {
    let parse_err = |path: &Path, msg: String| HarnessError::Parse { path: path.to_path_buf(), msg };
    let gpath = dir.join(GRAPH_FILE);
    let graph = load_graph_with(&read_file(&gpath)?, max_degree).map_err(|e| parse_err(&gpath, e.to_string()))?;
    let mut splits = Vec::new();
    for name in SPLITS {
        let path = dir.join(format!("{name}.tsv"));
        splits.push(parse_dataset(&read_file(&path)?).map_err(|e| parse_err(&path, e.to_string()))?);
    }
    let test = splits.pop().unwrap_or_default();
    let dev = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    Ok(Dataset { graph, train, dev, test })
}

/// Tokenizes records into training samples.
pub fn samples(records: &[DatasetRecord], vocab: &Vocabulary) -> Result<Vec<Sample>, HarnessError> {
    records
        .iter()
        .map(|r| {
            let mut instruction = tokenize(&r.text, vocab)?;
            instruction.route_id = r.seed;
            Ok(Sample { route: r.route.clone(), instruction })
        })
        .collect()
}

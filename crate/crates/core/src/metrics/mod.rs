//! Trajectory metrics over node-id sequences with hop-count node distances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{CityGraph, HopTable, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("invalid trajectory: {0}")]
    Invalid(String),
    #[error("invalid metric parameter: {0}")]
    Parameter(String),
    #[error("no episodes to evaluate")]
    Empty,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Denominator of the edit-distance term in SED.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SedNorm {
    /// `max(|P|, |R|)`, which keeps SED in `[0, 1]`.
    Max,
    /// `|R|`, floored at zero.
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Hops from the goal that still count as task completion.
    pub tc_radius: u32,
    pub sed_norm: SedNorm,
    /// CLS coverage length scale, in hops.
    pub cls_theta: f64,
    /// SDTW distance threshold, in hops.
    pub dtw_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { tc_radius: 1, sed_norm: SedNorm::Max, cls_theta: 2.0, dtw_threshold: 2.0 }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.cls_theta > 0.0 && self.cls_theta.is_finite()) {
            return Err(MetricsError::Parameter(format!("cls_theta must be > 0, got {}", self.cls_theta)));
        }
        if !(self.dtw_threshold > 0.0 && self.dtw_threshold.is_finite()) {
            return Err(MetricsError::Parameter(format!("dtw_threshold must be > 0, got {}", self.dtw_threshold)));
        }
        Ok(())
    }
}

/// A predicted path and its reference route on the same graph.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryPair<'a> {
    pub predicted: &'a [NodeId],
    pub reference: &'a [NodeId],
}

impl<'a> TrajectoryPair<'a> {
    pub fn new(graph: &CityGraph, predicted: &'a [NodeId], reference: &'a [NodeId]) -> Result<Self, MetricsError> {
        for (name, seq) in [("predicted", predicted), ("reference", reference)] {
            if seq.is_empty() {
                return Err(MetricsError::Invalid(format!("{name} trajectory is empty")));
            }
            if let Some(n) = seq.iter().find(|n| !graph.contains(**n)) {
                return Err(MetricsError::Invalid(format!("{name} trajectory has unknown node {n}")));
            }
            if let Some(w) = seq.windows(2).find(|w| !graph.adjacent(w[0], w[1])) {
                return Err(MetricsError::Invalid(format!("{name} hop {} -> {} is not an edge", w[0], w[1])));
            }
        }
        Ok(Self { predicted, reference })
    }

    fn last_p(&self) -> NodeId {
        *self.predicted.last().expect("validated nonempty")
    }

    fn goal(&self) -> NodeId {
        *self.reference.last().expect("validated nonempty")
    }
}

pub fn task_completion(pair: &TrajectoryPair, hops: &HopTable, radius: u32) -> f64 {
    if hops.get(pair.last_p(), pair.goal()) <= radius {
        1.0
    } else {
        0.0
    }
}

pub fn spd(pair: &TrajectoryPair, hops: &HopTable) -> u32 {
    hops.get(pair.last_p(), pair.goal())
}

/// Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn sed(pair: &TrajectoryPair, hops: &HopTable, cfg: &MetricsConfig) -> f64 {
    let tc = task_completion(pair, hops, cfg.tc_radius);
    if tc == 0.0 {
        return 0.0;
    }
    let denom = match cfg.sed_norm {
        SedNorm::Max => pair.predicted.len().max(pair.reference.len()),
        SedNorm::Reference => pair.reference.len(),
    };
    let ed = edit_distance(pair.predicted, pair.reference) as f64;
    tc * (1.0 - ed / denom as f64).max(0.0)
}

/// Dynamic time warping cost with hop-count local costs.
pub fn dtw(p: &[NodeId], r: &[NodeId], hops: &HopTable) -> f64 {
    let m = r.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &pi in p {
        cur[0] = f64::INFINITY;
        for (j, &rj) in r.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = f64::from(hops.get(pi, rj)) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

pub fn sdtw(pair: &TrajectoryPair, hops: &HopTable, cfg: &MetricsConfig) -> f64 {
    let tc = task_completion(pair, hops, cfg.tc_radius);
    if tc == 0.0 {
        return 0.0;
    }
    let d = dtw(pair.predicted, pair.reference, hops);
    tc * (-d / (pair.reference.len() as f64 * cfg.dtw_threshold)).exp()
}

/// Path coverage times length score.
pub fn cls(pair: &TrajectoryPair, hops: &HopTable, theta: f64) -> f64 {
    let r = pair.reference;
    let pc = r
        .iter()
        .map(|&ri| {
            let d = pair.predicted.iter().map(|&p| hops.get(ri, p)).min().expect("nonempty");
            (-f64::from(d) / theta).exp()
        })
        .sum::<f64>()
        / r.len() as f64;
    let epl = pc * r.len() as f64;
    let len = pair.predicted.len() as f64;
    let denom = epl + (epl - len).abs();
    if denom == 0.0 {
        return 0.0;
    }
    pc * (epl / denom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub tc: f64,
    pub spd: f64,
    pub sed: f64,
    pub cls: f64,
    pub sdtw: f64,
}

impl EpisodeMetrics {
    pub const NAMES: [&'static str; 5] = ["TC", "SPD", "SED", "CLS", "SDTW"];

    pub fn values(&self) -> [f64; 5] {
        [self.tc, self.spd, self.sed, self.cls, self.sdtw]
    }
}

pub fn episode_metrics(pair: &TrajectoryPair, hops: &HopTable, cfg: &MetricsConfig) -> EpisodeMetrics {
    EpisodeMetrics {
        tc: task_completion(pair, hops, cfg.tc_radius),
        spd: f64::from(spd(pair, hops)),
        sed: sed(pair, hops, cfg),
        cls: cls(pair, hops, cfg.cls_theta),
        sdtw: sdtw(pair, hops, cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: Vec<EpisodeMetrics>,
    pub mean: EpisodeMetrics,
}

impl MetricsReport {
    pub fn count(&self) -> usize {
        self.episodes.len()
    }

    /// One row per episode, then a `mean` row; values at 4 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,TC,SPD,SED,CLS,SDTW\n");
        let row = |label: String, m: &EpisodeMetrics| {
            let vals: Vec<String> = m.values().iter().map(|v| format!("{v:.4}")).collect();
            format!("{label},{}\n", vals.join(","))
        };
        for (i, e) in self.episodes.iter().enumerate() {
            out.push_str(&row(i.to_string(), e));
        }
        out.push_str(&row("mean".into(), &self.mean));
        out
    }
}

/// Per-episode metrics and their arithmetic means, in input order.
pub fn evaluate(
    graph: &CityGraph,
    hops: &HopTable,
    episodes: &[(Vec<NodeId>, Vec<NodeId>)],
    cfg: &MetricsConfig,
) -> Result<MetricsReport, MetricsError> {
    cfg.validate()?;
    if episodes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let per: Vec<EpisodeMetrics> = episodes
        .iter()
        .map(|(p, r)| TrajectoryPair::new(graph, p, r).map(|pair| episode_metrics(&pair, hops, cfg)))
        .collect::<Result<_, _>>()?;
    let n = per.len() as f64;
    let avg = |f: fn(&EpisodeMetrics) -> f64| per.iter().map(f).sum::<f64>() / n;
    let mean = EpisodeMetrics {
        tc: avg(|e| e.tc),
        spd: avg(|e| e.spd),
        sed: avg(|e| e.sed),
        cls: avg(|e| e.cls),
        sdtw: avg(|e| e.sdtw),
    };
    Ok(MetricsReport { episodes: per, mean })
}

/// Parses lines of `predicted<TAB>reference`, each a comma-separated node-id list.
pub fn parse_trajectories(text: &str) -> Result<Vec<(Vec<NodeId>, Vec<NodeId>)>, MetricsError> {
    let ids = |s: &str, line: usize| -> Result<Vec<NodeId>, MetricsError> {
        s.split(',')
            .map(|t| t.trim().parse::<u32>().map(NodeId))
            .collect::<Result<_, _>>()
            .map_err(|e| MetricsError::Parse { line, msg: format!("bad node id: {e}") })
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((p, r)) = line.split_once('\t') else {
            return Err(MetricsError::Parse { line: i + 1, msg: "expected two tab-separated lists".into() });
        };
        out.push((ids(p, i + 1)?, ids(r, i + 1)?));
    }
    Ok(out)
}

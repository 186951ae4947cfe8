use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{write_file, HarnessError, SummaryRow};
use crate::metrics::{EpisodeMetrics, MetricsReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    /// One JSON object per episode, then a `"mean"` object. Values keep full
    /// precision so that parsing gives back the same report.
    JsonLines,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" | "jsonlines" => Ok(Self::JsonLines),
            _ => Err(HarnessError::Invalid(format!("unknown result format `{s}`"))),
        }
    }
}

fn json_line(label: &str, m: &EpisodeMetrics) -> String {
    let mut line = format!("{{\"episode\":{}", serde_json::Value::from(label));
    for (name, v) in EpisodeMetrics::NAMES.iter().zip(m.values()) {
        let _ = write!(line, ",\"{name}\":{}", serde_json::Value::from(v));
    }
    line.push_str("}\n");
    line
}

pub fn emit_results(report: &MetricsReport, format: Format) -> Result<String, HarnessError> {
    if report.episodes.is_empty() {
        return Err(HarnessError::Invalid("cannot emit an empty report".into()));
    }
    Ok(match format {
        Format::Csv => report.to_csv(),
        Format::JsonLines => {
            let mut out = String::new();
            for (i, e) in report.episodes.iter().enumerate() {
                out.push_str(&json_line(&i.to_string(), e));
            }
            out.push_str(&json_line("mean", &report.mean));
            out
        }
    })
}

pub fn write_results(path: &Path, report: &MetricsReport, format: Format) -> Result<(), HarnessError> {
    write_file(path, &emit_results(report, format)?)
}

pub fn parse_json_lines(text: &str) -> Result<MetricsReport, HarnessError> {
    let bad = |line: usize, msg: String| HarnessError::Invalid(format!("json-lines line {line}: {msg}"));
    let mut episodes = Vec::new();
    let mut mean = None;
    for (i, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(raw).map_err(|e| bad(i + 1, e.to_string()))?;
        let get = |k: &str| v.get(k).and_then(serde_json::Value::as_f64).ok_or_else(|| bad(i + 1, format!("missing `{k}`")));
        let m = EpisodeMetrics { tc: get("TC")?, spd: get("SPD")?, sed: get("SED")?, cls: get("CLS")?, sdtw: get("SDTW")? };
        if mean.is_some() {
            return Err(bad(i + 1, "record after the mean row".into()));
        }
        match v.get("episode").and_then(serde_json::Value::as_str) {
            Some("mean") => mean = Some(m),
            Some(_) => episodes.push(m),
            None => return Err(bad(i + 1, "missing `episode`".into())),
        }
    }
    let mean = mean.ok_or_else(|| HarnessError::Invalid("json-lines: no mean row".into()))?;
    Ok(MetricsReport { episodes, mean })
}

/// One row per label: seed count, then mean, min and max of every metric.
pub fn summary_csv(key: &str, rows: &[SummaryRow]) -> String {
    let mut out = format!("{key},seeds");
    for n in EpisodeMetrics::NAMES {
        let _ = write!(out, ",{n},{n}_min,{n}_max");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.label, r.seeds);
        for ((m, lo), hi) in r.mean.values().iter().zip(r.min.values()).zip(r.max.values()) {
            let _ = write!(out, ",{m:.4},{lo:.4},{hi:.4}");
        }
        out.push('\n');
    }
    out
}

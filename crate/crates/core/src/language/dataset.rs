use super::LanguageError;
use crate::world::NodeId;

/// One dataset line: route node ids, instruction text, generation seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetRecord {
    pub route: Vec<NodeId>,
    pub text: String,
    pub seed: u64,
}

/// Tab-separated records, one per line: `0,4,5<TAB>text<TAB>seed`.
pub fn write_dataset(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let ids: Vec<String> = r.route.iter().map(|n| n.0.to_string()).collect();
        out.push_str(&format!("{}\t{}\t{}\n", ids.join(","), r.text, r.seed));
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>, LanguageError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| LanguageError::Parse { line: line_no, msg };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let route = fields[0]
            .split(',')
            .map(|s| s.trim().parse::<u32>().map(NodeId))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(format!("bad node id: {e}")))?;
        if fields[1].trim().is_empty() {
            return Err(err("empty instruction text".into()));
        }
        let seed = fields[2].trim().parse::<u64>().map_err(|e| err(format!("bad seed: {e}")))?;
        records.push(DatasetRecord { route, text: fields[1].to_string(), seed });
    }
    Ok(records)
}

use serde::{Deserialize, Serialize};

use super::{Array, NumericError, ParamStore};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    step: u64,
    params: Vec<ParamRecord>,
}

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    value: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl ParamStore {
    /// Serializes parameters, optimizer moments and the step counter as JSON text.
    pub fn to_checkpoint(&self) -> String {
        let doc = CheckpointDoc {
            format_version: CHECKPOINT_FORMAT_VERSION,
            step: self.step(),
            params: self
                .entries
                .iter()
                .map(|e| ParamRecord {
                    name: e.name.clone(),
                    shape: e.value.shape().to_vec(),
                    value: e.value.data().to_vec(),
                    m: e.m.clone(),
                    v: e.v.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("checkpoint serialization cannot fail")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, NumericError> {
        let doc: CheckpointDoc =
            serde_json::from_str(text).map_err(|e| NumericError::Checkpoint(e.to_string()))?;
        if doc.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(NumericError::Checkpoint(format!(
                "unsupported format version {} (expected {CHECKPOINT_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let mut store = ParamStore::new();
        for rec in doc.params {
            let n = rec.value.len();
            if rec.m.len() != n || rec.v.len() != n {
                return Err(NumericError::Checkpoint(format!("moment length mismatch for `{}`", rec.name)));
            }
            let id = store.insert(rec.name, Array::new(rec.shape, rec.value)?)?;
            store.set_state(id, rec.m, rec.v);
        }
        store.set_step(doc.step);
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{AdamConfig, Gradients};

    #[test]
    fn round_trip_preserves_values_and_state() {
        let mut s = ParamStore::new();
        let a = s.insert("enc.w", Array::new(vec![2, 2], vec![0.1, -1.0 / 3.0, 1e-300, 7.5]).unwrap()).unwrap();
        s.insert("b", Array::vector(vec![std::f64::consts::PI])).unwrap();
        let mut g = Gradients::zeros_like(&s);
        g.get_mut(a).copy_from_slice(&[0.3, -0.2, 0.0, 1.0]);
        s.adam_step(&g, &AdamConfig::default()).unwrap();
        let back = ParamStore::from_checkpoint(&s.to_checkpoint()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.step(), 1);
    }

    #[test]
    fn rejects_wrong_version() {
        let text = r#"{"format_version":99,"step":0,"params":[]}"#;
        assert!(ParamStore::from_checkpoint(text).is_err());
    }
}

//! Versioned JSON checkpoints: model configuration plus every parameter's
//! shape, constraint and values. Values round-trip bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NqlError, Result};
use crate::graph::{Constraint, ParamStore, Parameter};
use crate::learning::ModelConfig;

pub const CHECKPOINT_FORMAT: &str = "nql-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    rows: usize,
    cols: usize,
    constraint: Constraint,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    model: ModelConfig,
    params: Vec<ParamRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub params: ParamStore,
}

pub fn checkpoint_to_string(model: &ModelConfig, params: &ParamStore) -> Result<String> {
    let mut records = Vec::with_capacity(params.len());
    for p in params.iter() {
        if let Some(v) = p.values.iter().find(|v| !v.is_finite()) {
            return Err(NqlError::Checkpoint(format!(
                "parameter `{}` holds non-finite value {v}",
                p.name
            )));
        }
        records.push(ParamRecord {
            name: p.name.clone(),
            rows: p.rows,
            cols: p.cols,
            constraint: p.constraint,
            values: p.values.clone(),
        });
    }
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        model: model.clone(),
        params: records,
    };
    serde_json::to_string(&file).map_err(|e| NqlError::Checkpoint(e.to_string()))
}

pub fn checkpoint_from_str(text: &str) -> Result<Checkpoint> {
    let corrupt =
        |e: serde_json::Error| NqlError::Checkpoint(format!("corrupt or truncated checkpoint: {e}"));
    let header: serde_json::Value = serde_json::from_str(text).map_err(corrupt)?;
    if header.get("format").and_then(|f| f.as_str()) != Some(CHECKPOINT_FORMAT) {
        return Err(NqlError::Checkpoint("not an nql checkpoint".into()));
    }
    let version = header.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(CHECKPOINT_VERSION)) {
        return Err(NqlError::Checkpoint(format!(
            "unsupported checkpoint version {}, expected {CHECKPOINT_VERSION}",
            version.map_or("(missing)".to_string(), |v| v.to_string())
        )));
    }
    let file: CheckpointFile = serde_json::from_value(header).map_err(corrupt)?;
    let mut params = Vec::with_capacity(file.params.len());
    for r in file.params {
        if r.values.len() != r.rows * r.cols {
            return Err(NqlError::Checkpoint(format!(
                "parameter `{}` declares {}x{} but stores {} values",
                r.name,
                r.rows,
                r.cols,
                r.values.len()
            )));
        }
        params.push(Parameter {
            grad: vec![0.0; r.values.len()],
            name: r.name,
            rows: r.rows,
            cols: r.cols,
            values: r.values,
            constraint: r.constraint,
        });
    }
    Ok(Checkpoint {
        model: file.model,
        params: ParamStore::from_params(params),
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &ModelConfig, params: &ParamStore) -> Result<()> {
    let text = checkpoint_to_string(model, params)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    checkpoint_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::ModelKind;

    fn sample() -> (ModelConfig, ParamStore) {
        let mut s = ParamStore::new();
        s.add("a", 1, 3, vec![0.1, -1.0 / 3.0, 1e-300], Constraint::Softplus)
            .unwrap();
        s.add("b", 2, 1, vec![std::f64::consts::PI, -0.0], Constraint::Identity)
            .unwrap();
        (ModelConfig::new(ModelKind::Template, "rel_t"), s)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (cfg, s) = sample();
        let text = checkpoint_to_string(&cfg, &s).unwrap();
        let back = checkpoint_from_str(&text).unwrap();
        assert_eq!(back.model, cfg);
        for (p, q) in s.iter().zip(back.params.iter()) {
            assert_eq!(p.name, q.name);
            assert_eq!(p.constraint, q.constraint);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&p.values), bits(&q.values));
        }
    }

    #[test]
    fn truncated_and_wrong_version_fail() {
        let (cfg, s) = sample();
        let text = checkpoint_to_string(&cfg, &s).unwrap();
        let err = checkpoint_from_str(&text[..text.len() / 2]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        let bumped = text.replace("\"version\":1", "\"version\":2");
        let err = checkpoint_from_str(&bumped).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
    }
}

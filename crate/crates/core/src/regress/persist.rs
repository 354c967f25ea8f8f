//! JSON model files: `{"format", "version", "kind", "layout", "model"}`.
//! Floats are written in shortest round-trip form, so loading reproduces
//! predictions bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Model, RegressError, RegressorKind, TrainedModel};
use crate::featurize::FeatureLayout;

pub const MODEL_FORMAT: &str = "finsent-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    kind: RegressorKind,
    layout: FeatureLayout,
    model: Value,
}

pub fn write_model<W: Write>(model: &TrainedModel, out: W) -> Result<(), RegressError> {
    let env = Envelope {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        kind: model.model.kind(),
        layout: model.layout,
        model: serde_json::to_value(&model.model).map_err(|e| RegressError::Format(e.to_string()))?,
    };
    serde_json::to_writer(out, &env).map_err(|e| RegressError::Format(e.to_string()))
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), RegressError> {
    let path = path.as_ref();
    let io = |source| RegressError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    write_model(model, &mut file)?;
    file.flush().map_err(io)
}

pub fn read_model<R: Read>(mut input: R) -> Result<TrainedModel, RegressError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| RegressError::Format(format!("unreadable model file: {e}")))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| RegressError::Format(format!("malformed model file: {e}")))?;
    if raw.get("format").and_then(Value::as_str) != Some(MODEL_FORMAT) {
        return Err(RegressError::Format("not a model file".into()));
    }
    let version = raw
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| RegressError::Format("missing version".into()))?;
    if version != u64::from(MODEL_VERSION) {
        return Err(RegressError::VersionMismatch {
            found: version.min(u64::from(u32::MAX)) as u32,
            expected: MODEL_VERSION,
        });
    }
    let env: Envelope = serde_json::from_value(raw).map_err(|e| RegressError::Format(e.to_string()))?;
    let model: Model = serde_json::from_value(env.model).map_err(|e| RegressError::Format(e.to_string()))?;
    if model.kind() != env.kind {
        return Err(RegressError::Format(format!(
            "header says {} but parameters are {}",
            env.kind,
            model.kind()
        )));
    }
    let check = match &model {
        Model::RandomForest(m) => m.validate(),
        Model::Svr(m) if !m.weights.iter().chain([&m.bias]).all(|v| v.is_finite()) => {
            Err("non-finite SVR parameter".to_string())
        }
        Model::Svr(_) => Ok(()),
        Model::Mlp(m) => m.validate(),
    };
    check.map_err(RegressError::Format)?;
    TrainedModel::new(env.layout, model).map_err(|e| RegressError::Format(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, RegressError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| RegressError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_model(std::io::BufReader::new(file))
}

/// Loads a model and checks its kind and, when given, its feature layout.
pub fn load_model_expecting(
    path: impl AsRef<Path>,
    kind: RegressorKind,
    layout: Option<&FeatureLayout>,
) -> Result<TrainedModel, RegressError> {
    let model = load_model(path)?;
    if model.model.kind() != kind {
        return Err(RegressError::KindMismatch {
            expected: kind,
            found: model.model.kind(),
        });
    }
    if layout.is_some_and(|l| *l != model.layout) {
        return Err(RegressError::Format("feature layout differs from the expected layout".into()));
    }
    Ok(model)
}

//! Score regressors: random forest, linear epsilon-SVR and a one-hidden-layer
//! MLP, plus k-fold grid search and model files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::EvalError;
use crate::featurize::{FeatureLayout, FeatureVector};
use crate::sparse::SparseRow;

pub mod cv;
pub mod forest;
pub mod mlp;
mod persist;
pub mod svr;

pub use cv::{cross_validate, CvResult, GridPointScores};
pub use forest::{ForestModel, ForestParams, Node, Tree};
pub use mlp::{MlpModel, MlpParams};
pub use persist::{load_model, load_model_expecting, read_model, save_model, write_model, MODEL_FORMAT, MODEL_VERSION};
pub use svr::{SvrModel, SvrParams};

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("target {index} is {value}, expected a finite value in [-1, 1]")]
    InvalidTarget { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("feature layout does not match the layout the model was trained on")]
    LayoutMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("training diverged in epoch {epoch} (learning rate {learning_rate}): non-finite loss")]
    Divergence { epoch: usize, learning_rate: f64 },
    #[error("{folds} folds need at least {folds} instances, got {n}; use fewer folds")]
    TooFewForFolds { n: usize, folds: usize },
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("parameter grid mixes regressor kinds ({first} and {other})")]
    MixedGrid { first: RegressorKind, other: RegressorKind },
    #[error("model file: {0}")]
    Format(String),
    #[error("model file holds a {found} model, expected {expected}")]
    KindMismatch { expected: RegressorKind, found: RegressorKind },
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("failed to access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Feature rows and targets for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    rows: Vec<SparseRow>,
    targets: Vec<f64>,
    dim: usize,
}

impl TrainingSet {
    pub fn new(rows: Vec<SparseRow>, targets: Vec<f64>, dim: usize) -> Result<Self, RegressError> {
        if rows.is_empty() {
            return Err(RegressError::EmptyTrainingSet);
        }
        if rows.len() != targets.len() {
            return Err(RegressError::LengthMismatch {
                rows: rows.len(),
                targets: targets.len(),
            });
        }
        if let Some((index, &value)) = targets
            .iter()
            .enumerate()
            .find(|(_, t)| !t.is_finite() || t.abs() > 1.0)
        {
            return Err(RegressError::InvalidTarget { index, value });
        }
        for row in &rows {
            if row.min_dim() > dim {
                return Err(RegressError::Dimension {
                    expected: dim,
                    found: row.min_dim(),
                });
            }
        }
        Ok(Self { rows, targets, dim })
    }

    pub fn from_dense(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self, RegressError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(RegressError::Dimension {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(rows.iter().map(|r| SparseRow::from_dense(r)).collect(), targets, dim)
    }

    pub fn from_features(features: &[FeatureVector], targets: Vec<f64>) -> Result<Self, RegressError> {
        let layout = features.first().ok_or(RegressError::EmptyTrainingSet)?.layout;
        if features.iter().any(|f| f.layout != layout) {
            return Err(RegressError::LayoutMismatch);
        }
        Self::new(features.iter().map(FeatureVector::to_sparse).collect(), targets, layout.total_dim())
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Instances at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, RegressError> {
        Self::new(
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
            indices.iter().map(|&i| self.targets[i]).collect(),
            self.dim,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    #[serde(rename = "rf")]
    RandomForest,
    Svr,
    Mlp,
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegressorKind::RandomForest => "rf",
            RegressorKind::Svr => "svr",
            RegressorKind::Mlp => "mlp",
        })
    }
}

impl FromStr for RegressorKind {
    type Err = RegressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rf" | "random_forest" | "randomforest" | "forest" => Ok(RegressorKind::RandomForest),
            "svr" | "svm" => Ok(RegressorKind::Svr),
            "mlp" => Ok(RegressorKind::Mlp),
            other => Err(RegressError::InvalidParams(format!(
                "unknown regressor {other:?} (expected rf, svr or mlp)"
            ))),
        }
    }
}

/// Hyperparameters of one regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum RegressorParams {
    #[serde(rename = "rf")]
    RandomForest(ForestParams),
    Svr(SvrParams),
    Mlp(MlpParams),
}

impl RegressorParams {
    pub fn default_for(kind: RegressorKind) -> Self {
        match kind {
            RegressorKind::RandomForest => Self::RandomForest(ForestParams::default()),
            RegressorKind::Svr => Self::Svr(SvrParams::default()),
            RegressorKind::Mlp => Self::Mlp(MlpParams::default()),
        }
    }

    pub fn kind(&self) -> RegressorKind {
        match self {
            Self::RandomForest(_) => RegressorKind::RandomForest,
            Self::Svr(_) => RegressorKind::Svr,
            Self::Mlp(_) => RegressorKind::Mlp,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::RandomForest(p) => p.seed,
            Self::Svr(p) => p.seed,
            Self::Mlp(p) => p.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Self::RandomForest(p) => p.seed = seed,
            Self::Svr(p) => p.seed = seed,
            Self::Mlp(p) => p.seed = seed,
        }
        self
    }

    /// Short `key=value` description used in logs and CV reports.
    pub fn describe(&self) -> String {
        match self {
            Self::RandomForest(p) => format!(
                "rf trees={} max_depth={} min_samples_leaf={} features_per_split={} bootstrap={}",
                p.trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string()),
                p.min_samples_leaf,
                p.features_per_split.map_or("auto".to_string(), |m| m.to_string()),
                p.bootstrap
            ),
            Self::Svr(p) => format!(
                "svr epsilon={} c={} epochs={} learning_rate={}",
                p.epsilon, p.c, p.epochs, p.learning_rate
            ),
            Self::Mlp(p) => format!(
                "mlp hidden={} epochs={} learning_rate={} momentum={} batch_size={}",
                p.hidden, p.epochs, p.learning_rate, p.momentum, p.batch_size
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum Model {
    #[serde(rename = "rf")]
    RandomForest(ForestModel),
    Svr(SvrModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> RegressorKind {
        match self {
            Model::RandomForest(_) => RegressorKind::RandomForest,
            Model::Svr(_) => RegressorKind::Svr,
            Model::Mlp(_) => RegressorKind::Mlp,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::RandomForest(m) => m.dim(),
            Model::Svr(m) => m.weights.len(),
            Model::Mlp(m) => m.input_dim(),
        }
    }

    /// Unclipped model output.
    pub fn raw_predict(&self, row: &SparseRow) -> Result<f64, RegressError> {
        if row.min_dim() > self.dim() {
            return Err(RegressError::Dimension {
                expected: self.dim(),
                found: row.min_dim(),
            });
        }
        Ok(match self {
            Model::RandomForest(m) => m.predict_raw(row),
            Model::Svr(m) => m.predict_raw(row),
            Model::Mlp(m) => m.predict_raw(row),
        })
    }

    /// Model output clipped to `[-1, 1]`.
    pub fn predict(&self, row: &SparseRow) -> Result<f64, RegressError> {
        self.raw_predict(row).map(clip_score)
    }

    pub fn predict_all(&self, rows: &[SparseRow]) -> Result<Vec<f64>, RegressError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

pub fn clip_score(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

pub fn train(data: &TrainingSet, params: &RegressorParams) -> Result<Model, RegressError> {
    Ok(match params {
        RegressorParams::RandomForest(p) => Model::RandomForest(forest::train_random_forest(data, p)?),
        RegressorParams::Svr(p) => Model::Svr(svr::train_svr(data, p)?),
        RegressorParams::Mlp(p) => Model::Mlp(mlp::train_mlp(data, p)?),
    })
}

/// A model together with the feature layout it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub layout: FeatureLayout,
    pub model: Model,
}

impl TrainedModel {
    pub fn new(layout: FeatureLayout, model: Model) -> Result<Self, RegressError> {
        if layout.total_dim() != model.dim() {
            return Err(RegressError::Dimension {
                expected: layout.total_dim(),
                found: model.dim(),
            });
        }
        Ok(Self { layout, model })
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64, RegressError> {
        if features.layout != self.layout {
            return Err(RegressError::Dimension {
                expected: self.layout.total_dim(),
                found: features.layout.total_dim(),
            });
        }
        self.model.predict(&features.to_sparse())
    }
}

/// RNG for one independent task (`stream`) of a seeded trainer.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn check_dim(data: &TrainingSet) -> Result<(), RegressError> {
    if data.dim() == 0 {
        return Err(RegressError::InvalidParams("feature dimension is zero".into()));
    }
    Ok(())
}

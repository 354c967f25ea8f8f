//! End-to-end experiments: preprocessing, featurization, tuning, prediction
//! and feature-block ablations.

use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::embed::EmbedError;
use crate::evaluate::EvalError;
use crate::featurize::FeatureError;
use crate::lexicon::LexiconError;
use crate::regress::RegressError;
use crate::textprep::TextError;

mod config;
mod experiment;
pub mod fixtures;

pub use config::{ConfigEntries, ExperimentConfig, LexiconFormat, LexiconSource, CONFIG_KEYS};
pub use experiment::{
    ablation_label, fit_pipeline, format_ablation_table, run_ablation, run_ablation_on, run_experiment,
    run_experiment_on, run_validation, write_ablation_csv, AblationRow, ExperimentOutcome, FittedPipeline, Resources,
    ValidationOutcome, ABLATION_SETS, PIPELINE_FORMAT, PIPELINE_VERSION,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: StageError,
    },
    #[error("failed to access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Error from one of the underlying modules.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &str) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: &str) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::Stage {
            stage: stage.to_string(),
            source: e.into(),
        })
    }
}

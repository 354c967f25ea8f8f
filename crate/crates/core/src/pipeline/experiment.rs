use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ExperimentConfig, LexiconFormat};
use super::{PipelineError, StageContext};
use crate::dataset::{load_dataset, LabeledInstance, Prediction};
use crate::embed::{load_embeddings, EmbeddingMatrix};
use crate::evaluate::{make_validation_split, median, EvalError, EvalReport};
use crate::featurize::{assemble, fit_bow_vocabulary, BlockSet, BowVocabulary, FeatureLayout, FeatureSources};
use crate::lexicon::{import_loughran_mcdonald, import_mpqa, load_normalized, merge, Lexicon};
use crate::regress::{self, cross_validate, CvResult, RegressorParams, TrainedModel, TrainingSet};
use crate::textprep::{
    bundled_stopwords, default_number_bins, load_aliases, load_stopwords, preprocess, NormalizationConfig,
    TokenizedDocument,
};

pub const PIPELINE_FORMAT: &str = "finsent-pipeline";
pub const PIPELINE_VERSION: u32 = 1;

/// Ablation rows in report order.
pub const ABLATION_SETS: [BlockSet; 7] = [
    BlockSet { bow: false, lex: true, boe: false },
    BlockSet { bow: false, lex: false, boe: true },
    BlockSet { bow: true, lex: false, boe: false },
    BlockSet { bow: false, lex: true, boe: true },
    BlockSet { bow: true, lex: true, boe: false },
    BlockSet { bow: true, lex: false, boe: true },
    BlockSet::ALL,
];

/// Row label for a block combination, e.g. `BoW + Lex`.
pub fn ablation_label(blocks: BlockSet) -> String {
    if blocks == BlockSet::ALL {
        return "All".to_string();
    }
    let mut parts = Vec::new();
    if blocks.bow {
        parts.push("BoW");
    }
    if blocks.boe {
        parts.push("BoE");
    }
    if blocks.lex {
        parts.push("Lex");
    }
    parts.join(" + ")
}

/// Loaded normalization settings, lexicon and embeddings.
#[derive(Debug, Clone)]
pub struct Resources {
    pub normalization: NormalizationConfig,
    pub lexicon: Option<Lexicon>,
    pub embeddings: Option<EmbeddingMatrix>,
}

impl Resources {
    pub fn load(config: &ExperimentConfig) -> Result<Self, PipelineError> {
        let stopwords = match &config.stopwords {
            Some(p) => load_stopwords(p).stage("loading stopwords")?,
            None => bundled_stopwords(),
        };
        let aliases = match &config.aliases {
            Some(p) => load_aliases(p).stage("loading company aliases")?,
            None => Vec::new(),
        };
        let normalization =
            NormalizationConfig::new(stopwords, aliases, default_number_bins(), config.remove_stopwords)
                .stage("building normalization settings")?;
        let mut lexicons = Vec::new();
        for src in &config.lexicons {
            let lex = match src.format {
                LexiconFormat::Normalized => load_normalized(&src.path),
                LexiconFormat::LoughranMcDonald => import_loughran_mcdonald(&src.path),
                LexiconFormat::Mpqa => import_mpqa(&src.path).map(|(lex, stats)| {
                    log::info!("{}: skipped {stats:?}", src.path.display());
                    lex
                }),
            }
            .stage("loading lexicons")?;
            lexicons.push(lex);
        }
        let lexicon = (!lexicons.is_empty()).then(|| merge(&lexicons));
        let embeddings = match &config.embeddings {
            Some(p) => Some(load_embeddings(p).stage("loading embeddings")?),
            None => None,
        };
        Ok(Self {
            normalization,
            lexicon,
            embeddings,
        })
    }

    fn require(&self, blocks: BlockSet) -> Result<(), PipelineError> {
        if blocks.lex && self.lexicon.is_none() {
            return Err(PipelineError::Config("Lex features need a lexicon".into()));
        }
        if blocks.boe && self.embeddings.is_none() {
            return Err(PipelineError::Config("BoE features need an embeddings file".into()));
        }
        Ok(())
    }

    fn sources<'a>(&'a self, bow: Option<&'a BowVocabulary>) -> FeatureSources<'a> {
        FeatureSources {
            bow,
            lexicon: self.lexicon.as_ref(),
            embeddings: self.embeddings.as_ref(),
        }
    }

    /// Preprocesses each instance's span, treating its company as an alias.
    pub fn tokenize(&self, instances: &[LabeledInstance]) -> Result<Vec<TokenizedDocument>, PipelineError> {
        let mut per_company: HashMap<&str, NormalizationConfig> = HashMap::new();
        let mut docs = Vec::with_capacity(instances.len());
        for inst in instances {
            let company = inst.company.trim();
            // Cashtags are already recognized by the normalizer itself.
            let config = if company.is_empty() || company.starts_with('$') {
                &self.normalization
            } else {
                if !per_company.contains_key(company) {
                    let cfg = self
                        .normalization
                        .with_extra_aliases([company])
                        .stage("preprocessing")?;
                    per_company.insert(company, cfg);
                }
                &per_company[company]
            };
            docs.push(preprocess(inst.feature_text(), config).with_source_id(inst.id.clone()));
        }
        Ok(docs)
    }
}

fn gold_scores(instances: &[LabeledInstance]) -> Result<Vec<f64>, EvalError> {
    instances
        .iter()
        .map(|i| i.gold_score.ok_or_else(|| EvalError::MissingGold(i.id.clone())))
        .collect()
}

/// Everything fitted on the training data: vocabulary, chosen parameters,
/// CV scores and the model.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub config: ExperimentConfig,
    pub bow: Option<BowVocabulary>,
    pub params: RegressorParams,
    pub cv: Option<CvResult>,
    pub model: TrainedModel,
}

#[derive(Serialize, Deserialize)]
struct Bundle {
    format: String,
    version: u32,
    config: ExperimentConfig,
    bow: Option<BowVocabulary>,
    params: RegressorParams,
    cv: Option<CvResult>,
    model: Value,
}

/// Fits vocabulary, tunes on `folds`-fold CV when the grid has several
/// points, and retrains on all of `train`.
pub fn fit_pipeline(
    config: &ExperimentConfig,
    resources: &Resources,
    train: &[LabeledInstance],
) -> Result<FittedPipeline, PipelineError> {
    config.validate_settings()?;
    resources.require(config.blocks)?;
    let targets = gold_scores(train).stage("reading training data")?;
    let docs = resources.tokenize(train)?;
    let bow = if config.blocks.bow {
        Some(fit_bow_vocabulary(&docs, config.ngram_max).stage("fitting bag-of-words vocabulary")?)
    } else {
        None
    };
    let sources = resources.sources(bow.as_ref());
    let layout = FeatureLayout::for_sources(config.blocks, &sources).stage("featurizing training data")?;
    let features = docs
        .iter()
        .map(|d| assemble(d, &sources, &layout))
        .collect::<Result<Vec<_>, _>>()
        .stage("featurizing training data")?;
    let data = TrainingSet::from_features(&features, targets).stage("building training set")?;
    let (params, cv) = if config.grid.len() > 1 {
        let cv = cross_validate(&data, &config.grid, config.folds, config.seed).stage("cross-validation")?;
        for (i, p) in cv.points.iter().enumerate() {
            log::info!(
                "cv {}: cosine={:.4} mae={:.4} [{}]",
                i,
                p.mean_cosine,
                p.mean_mae,
                p.params.describe()
            );
        }
        (cv.best_params().clone(), Some(cv))
    } else {
        (config.grid[0].clone(), None)
    };
    log::info!("training {} on {} instances, {} features", params.describe(), data.len(), data.dim());
    let model = regress::train(&data, &params).stage("training")?;
    let model = TrainedModel::new(layout, model).stage("training")?;
    Ok(FittedPipeline {
        config: config.clone(),
        bow,
        params,
        cv,
        model,
    })
}

impl FittedPipeline {
    pub fn predict(
        &self,
        resources: &Resources,
        instances: &[LabeledInstance],
    ) -> Result<Vec<Prediction>, PipelineError> {
        resources.require(self.model.layout.blocks)?;
        let docs = resources.tokenize(instances)?;
        let sources = resources.sources(self.bow.as_ref());
        docs.iter()
            .zip(instances)
            .map(|(doc, inst)| {
                let fv = assemble(doc, &sources, &self.model.layout).stage("featurizing")?;
                let score = self.model.predict(&fv).stage("predicting")?;
                Ok(Prediction {
                    id: inst.id.clone(),
                    score,
                })
            })
            .collect()
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), PipelineError> {
        let mut model = Vec::new();
        regress::write_model(&self.model, &mut model).stage("saving model")?;
        let bundle = Bundle {
            format: PIPELINE_FORMAT.into(),
            version: PIPELINE_VERSION,
            config: self.config.clone(),
            bow: self.bow.clone(),
            params: self.params.clone(),
            cv: self.cv.clone(),
            model: serde_json::from_slice(&model).expect("model JSON parses"),
        };
        serde_json::to_writer(out, &bundle)
            .map_err(|e| PipelineError::Config(format!("cannot serialize model bundle: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        let io = |source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
        self.write(&mut file)?;
        file.flush().map_err(io)
    }

    pub fn read(text: &str) -> Result<Self, PipelineError> {
        let format_err = |m: String| PipelineError::Stage {
            stage: "loading model".into(),
            source: regress::RegressError::Format(m).into(),
        };
        let raw: Value = serde_json::from_str(text).map_err(|e| format_err(format!("malformed file: {e}")))?;
        if raw.get("format").and_then(Value::as_str) != Some(PIPELINE_FORMAT) {
            return Err(format_err("not a pipeline model file".into()));
        }
        let version = raw.get("version").and_then(Value::as_u64).unwrap_or(0);
        if version != u64::from(PIPELINE_VERSION) {
            return Err(PipelineError::Stage {
                stage: "loading model".into(),
                source: regress::RegressError::VersionMismatch {
                    found: version.min(u64::from(u32::MAX)) as u32,
                    expected: PIPELINE_VERSION,
                }
                .into(),
            });
        }
        let bundle: Bundle = serde_json::from_value(raw).map_err(|e| format_err(e.to_string()))?;
        let model = regress::read_model(bundle.model.to_string().as_bytes()).stage("loading model")?;
        if model.model.kind() != bundle.params.kind() {
            return Err(format_err("model kind does not match its parameters".into()));
        }
        if bundle.bow.as_ref().map_or(0, BowVocabulary::len) != model.layout.bow_size {
            return Err(format_err("bag-of-words vocabulary does not match the feature layout".into()));
        }
        Ok(Self {
            config: bundle.config,
            bow: bundle.bow,
            params: bundle.params,
            cv: bundle.cv,
            model,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub fitted: FittedPipeline,
    pub predictions: Vec<Prediction>,
    /// Present when every test instance has a gold score.
    pub report: Option<EvalReport>,
}

pub fn run_experiment_on(
    config: &ExperimentConfig,
    resources: &Resources,
    train: &[LabeledInstance],
    test: &[LabeledInstance],
) -> Result<ExperimentOutcome, PipelineError> {
    let fitted = fit_pipeline(config, resources, train)?;
    let predictions = fitted.predict(resources, test)?;
    let report = if test.iter().all(|i| i.gold_score.is_some()) && !test.is_empty() {
        let gold = gold_scores(test).stage("scoring")?;
        let pred: Vec<f64> = predictions.iter().map(|p| p.score).collect();
        Some(EvalReport::compute(&gold, &pred).stage("scoring")?)
    } else {
        None
    };
    Ok(ExperimentOutcome {
        fitted,
        predictions,
        report,
    })
}

pub fn run_experiment(
    config: &ExperimentConfig,
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
) -> Result<ExperimentOutcome, PipelineError> {
    config.validate()?;
    let resources = Resources::load(config)?;
    let train = load_dataset(train_path, config.genre).stage("loading training data")?;
    let test = load_dataset(test_path, config.genre).stage("loading test data")?;
    run_experiment_on(config, &resources, &train, &test)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub blocks: BlockSet,
    pub label: String,
    pub report: EvalReport,
}

/// Runs the experiment once per block combination in [`ABLATION_SETS`].
pub fn run_ablation_on(
    config: &ExperimentConfig,
    resources: &Resources,
    train: &[LabeledInstance],
    test: &[LabeledInstance],
) -> Result<Vec<AblationRow>, PipelineError> {
    resources.require(BlockSet::ALL)?;
    ABLATION_SETS
        .iter()
        .map(|&blocks| {
            let label = ablation_label(blocks);
            let outcome = run_experiment_on(&config.with_blocks(blocks), resources, train, test)?;
            let report = outcome.report.ok_or_else(|| {
                PipelineError::Config("ablation needs gold scores on every test instance".into())
            })?;
            log::info!("{label}: cosine={:.4} mae={:.4}", report.cosine, report.mae);
            Ok(AblationRow { blocks, label, report })
        })
        .collect()
}

pub fn run_ablation(
    config: &ExperimentConfig,
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
) -> Result<Vec<AblationRow>, PipelineError> {
    let all = config.with_blocks(BlockSet::ALL);
    all.validate()?;
    let resources = Resources::load(&all)?;
    let train = load_dataset(train_path, config.genre).stage("loading training data")?;
    let test = load_dataset(test_path, config.genre).stage("loading test data")?;
    run_ablation_on(config, &resources, &train, &test)
}

/// `features,cosine,mae` with six decimals.
pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["features", "cosine", "mae"])?;
    for row in rows {
        w.write_record([
            row.label.clone(),
            format!("{:.6}", row.report.cosine),
            format!("{:.6}", row.report.mae),
        ])?;
    }
    w.flush()
}

pub fn format_ablation_table(rows: &[AblationRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max("Features".len());
    let mut s = format!("{:<width$}  {:>8}  {:>8}\n", "Features", "Cosine", "MAE");
    for r in rows {
        let _ = writeln!(s, "{:<width$}  {:>8.4}  {:>8.4}", r.label, r.report.cosine, r.report.mae);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutcome {
    pub train_size: usize,
    pub validation_size: usize,
    pub report: EvalReport,
    /// Constant predictor at the median of the training scores.
    pub baseline: EvalReport,
    pub outcome: ExperimentOutcome,
}

/// Splits labelled data 80/20 by sorted score and evaluates on the held-out fifth.
pub fn run_validation(
    config: &ExperimentConfig,
    resources: &Resources,
    instances: &[LabeledInstance],
) -> Result<ValidationOutcome, PipelineError> {
    let (train, validation) = make_validation_split(instances).stage("splitting")?;
    let outcome = run_experiment_on(config, resources, &train, &validation)?;
    let report = outcome.report.clone().expect("validation instances carry gold scores");
    let gold = gold_scores(&validation).stage("scoring")?;
    let train_median = median(&gold_scores(&train).stage("scoring")?).unwrap_or(0.0);
    let baseline = EvalReport::compute(&gold, &vec![train_median; gold.len()]).stage("scoring")?;
    Ok(ValidationOutcome {
        train_size: train.len(),
        validation_size: validation.len(),
        report,
        baseline,
        outcome,
    })
}

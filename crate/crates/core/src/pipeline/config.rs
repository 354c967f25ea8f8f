//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # microblog run
//! genre = microblog
//! features = all
//! regressor = rf
//! lexicons = lm:LoughranMcDonald.csv, mpqa:subjclues.tff
//! embeddings = tweets.vec
//! rf.trees = 200
//! rf.max_depth = none, 20
//! ```
//!
//! Regressor keys take comma-separated lists; the grid is their cartesian
//! product. Relative paths resolve against the directory of the file (or the
//! working directory for command-line overrides).

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dataset::Genre;
use crate::featurize::BlockSet;
use crate::regress::{ForestParams, MlpParams, RegressorKind, RegressorParams, SvrParams};

pub const CONFIG_KEYS: &[&str] = &[
    "genre",
    "features",
    "regressor",
    "seed",
    "folds",
    "ngram_max",
    "stopwords",
    "remove_stopwords",
    "aliases",
    "lexicons",
    "embeddings",
    "rf.trees",
    "rf.max_depth",
    "rf.min_samples_leaf",
    "rf.features_per_split",
    "rf.bootstrap",
    "svr.epsilon",
    "svr.c",
    "svr.epochs",
    "svr.learning_rate",
    "mlp.hidden",
    "mlp.epochs",
    "mlp.learning_rate",
    "mlp.momentum",
    "mlp.batch_size",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconFormat {
    /// `word<TAB>CLASS` lines.
    Normalized,
    Mpqa,
    #[serde(rename = "lm")]
    LoughranMcDonald,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconSource {
    pub format: LexiconFormat,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub genre: Genre,
    pub blocks: BlockSet,
    pub regressor: RegressorKind,
    /// Candidate hyperparameters; every entry is of kind `regressor`.
    pub grid: Vec<RegressorParams>,
    pub seed: u64,
    pub folds: usize,
    pub ngram_max: usize,
    pub stopwords: Option<PathBuf>,
    pub remove_stopwords: bool,
    pub aliases: Option<PathBuf>,
    pub lexicons: Vec<LexiconSource>,
    pub embeddings: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigEntries::default().build().expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        ConfigEntries::load(path)?.build()
    }

    /// Full check, including that every enabled block has its files configured.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.blocks.boe && self.embeddings.is_none() {
            return bad("BoE features need an embeddings file (set `embeddings`)");
        }
        if self.blocks.lex && self.lexicons.is_empty() {
            return bad("Lex features need at least one lexicon (set `lexicons`)");
        }
        self.validate_settings()
    }

    /// Checks everything except resource paths.
    pub fn validate_settings(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.blocks.is_empty() {
            return bad("no feature blocks enabled");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if !(1..=3).contains(&self.ngram_max) {
            return bad("ngram_max must be 1, 2 or 3");
        }
        if self.grid.is_empty() {
            return bad("empty hyperparameter grid");
        }
        if let Some(p) = self.grid.iter().find(|p| p.kind() != self.regressor) {
            return Err(PipelineError::Config(format!(
                "grid entry of kind {} does not match regressor {}",
                p.kind(),
                self.regressor
            )));
        }
        Ok(())
    }

    pub fn with_blocks(&self, blocks: BlockSet) -> Self {
        Self {
            blocks,
            ..self.clone()
        }
    }
}

/// Raw configuration entries with the directory each relative path resolves against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigEntries {
    entries: BTreeMap<String, (String, PathBuf)>,
}

impl ConfigEntries {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut out = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            out.set(key.trim(), value.trim(), base_dir)
                .map_err(|e| PipelineError::Config(format!("line {}: {}", i + 1, strip(e))))?;
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<(), PipelineError> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(PipelineError::Config(format!("unknown key {key:?}")));
        }
        self.entries
            .insert(key.to_string(), (value.to_string(), base_dir.to_path_buf()));
        Ok(())
    }

    /// Applies a `key=value` override given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), PipelineError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("override {pair:?} is not key=value")))?;
        self.set(k.trim(), v.trim(), Path::new(""))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.entries
            .get(key)
            .filter(|(v, _)| !v.is_empty())
            .map(|(v, base)| base.join(v))
    }

    fn scalar<T: FromStr>(&self, key: &str, default: T) -> Result<T, PipelineError>
    where
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| PipelineError::Config(format!("{key}: cannot parse {v:?}: {e}"))),
        }
    }

    fn list<T: Clone>(
        &self,
        key: &str,
        default: &[T],
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Vec<T>, PipelineError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|item| parse(item.trim()).map_err(|e| PipelineError::Config(format!("{key}: {e}"))))
                .collect(),
        }
    }

    pub fn build(&self) -> Result<ExperimentConfig, PipelineError> {
        let genre: Genre = self
            .get("genre")
            .unwrap_or("microblog")
            .parse()
            .map_err(|e| PipelineError::Config(format!("genre: {e}")))?;
        let blocks = BlockSet::parse(self.get("features").unwrap_or("all"))
            .map_err(|e| PipelineError::Config(format!("features: {e}")))?;
        let regressor: RegressorKind = self
            .get("regressor")
            .unwrap_or("rf")
            .parse()
            .map_err(|e| PipelineError::Config(format!("regressor: {}", strip_regress(e))))?;
        let seed = self.scalar("seed", 1u64)?;
        let lexicons = match self.entries.get("lexicons") {
            None => Vec::new(),
            Some((v, base)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|item| parse_lexicon_source(item, base))
                .collect::<Result<_, _>>()?,
        };
        Ok(ExperimentConfig {
            genre,
            blocks,
            regressor,
            grid: self.grid(regressor, seed)?,
            seed,
            folds: self.scalar("folds", 10usize)?,
            ngram_max: self.scalar("ngram_max", 1usize)?,
            stopwords: self.path("stopwords"),
            remove_stopwords: self.scalar("remove_stopwords", true)?,
            aliases: self.path("aliases"),
            lexicons,
            embeddings: self.path("embeddings"),
        })
    }

    fn grid(&self, kind: RegressorKind, seed: u64) -> Result<Vec<RegressorParams>, PipelineError> {
        let grid = match kind {
            RegressorKind::RandomForest => {
                let d = ForestParams::default();
                let trees = self.list("rf.trees", &[d.trees], parse_num)?;
                let depth = self.list("rf.max_depth", &[d.max_depth], |s| parse_optional(s, "none"))?;
                let leaf = self.list("rf.min_samples_leaf", &[d.min_samples_leaf], parse_num)?;
                let mtry = self.list("rf.features_per_split", &[d.features_per_split], |s| parse_optional(s, "auto"))?;
                let boot = self.list("rf.bootstrap", &[d.bootstrap], parse_num)?;
                let mut out = Vec::new();
                for &trees in &trees {
                    for &max_depth in &depth {
                        for &min_samples_leaf in &leaf {
                            for &features_per_split in &mtry {
                                for &bootstrap in &boot {
                                    out.push(RegressorParams::RandomForest(ForestParams {
                                        trees,
                                        max_depth,
                                        min_samples_leaf,
                                        features_per_split,
                                        bootstrap,
                                        seed,
                                    }));
                                }
                            }
                        }
                    }
                }
                out
            }
            RegressorKind::Svr => {
                let d = SvrParams::default();
                let eps = self.list("svr.epsilon", &[d.epsilon], parse_num)?;
                let cs = self.list("svr.c", &[d.c], parse_num)?;
                let epochs = self.list("svr.epochs", &[d.epochs], parse_num)?;
                let lrs = self.list("svr.learning_rate", &[d.learning_rate], parse_num)?;
                let mut out = Vec::new();
                for &epsilon in &eps {
                    for &c in &cs {
                        for &epochs in &epochs {
                            for &learning_rate in &lrs {
                                out.push(RegressorParams::Svr(SvrParams {
                                    epsilon,
                                    c,
                                    epochs,
                                    learning_rate,
                                    seed,
                                }));
                            }
                        }
                    }
                }
                out
            }
            RegressorKind::Mlp => {
                let d = MlpParams::default();
                let hidden = self.list("mlp.hidden", &[d.hidden], parse_num)?;
                let epochs = self.list("mlp.epochs", &[d.epochs], parse_num)?;
                let lrs = self.list("mlp.learning_rate", &[0.001, 0.01, 0.05], parse_num)?;
                let moms = self.list("mlp.momentum", &[d.momentum], parse_num)?;
                let batches = self.list("mlp.batch_size", &[d.batch_size], parse_num)?;
                let mut out = Vec::new();
                for &hidden in &hidden {
                    for &epochs in &epochs {
                        for &learning_rate in &lrs {
                            for &momentum in &moms {
                                for &batch_size in &batches {
                                    out.push(RegressorParams::Mlp(MlpParams {
                                        hidden,
                                        epochs,
                                        learning_rate,
                                        momentum,
                                        batch_size,
                                        seed,
                                    }));
                                }
                            }
                        }
                    }
                }
                out
            }
        };
        Ok(grid)
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse().map_err(|e| format!("cannot parse {s:?}: {e}"))
}

fn parse_optional<T: FromStr>(s: &str, none: &str) -> Result<Option<T>, String>
where
    T::Err: Display,
{
    if s.eq_ignore_ascii_case(none) {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

fn parse_lexicon_source(item: &str, base: &Path) -> Result<LexiconSource, PipelineError> {
    let (format, path) = match item.split_once(':') {
        Some(("mpqa", p)) => (LexiconFormat::Mpqa, p),
        Some(("lm", p)) => (LexiconFormat::LoughranMcDonald, p),
        Some(("tsv", p)) => (LexiconFormat::Normalized, p),
        _ => (LexiconFormat::Normalized, item),
    };
    let path = path.trim();
    if path.is_empty() {
        return Err(PipelineError::Config(format!("lexicons: empty path in {item:?}")));
    }
    Ok(LexiconSource {
        format,
        path: base.join(path),
    })
}

fn strip(e: PipelineError) -> String {
    match e {
        PipelineError::Config(m) => m,
        other => other.to_string(),
    }
}

fn strip_regress(e: crate::regress::RegressError) -> String {
    match e {
        crate::regress::RegressError::InvalidParams(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.genre, Genre::Microblog);
        assert_eq!(c.blocks, BlockSet::ALL);
        assert_eq!(c.regressor, RegressorKind::RandomForest);
        assert_eq!(c.grid, vec![RegressorParams::RandomForest(ForestParams::default())]);
        assert_eq!((c.seed, c.folds, c.ngram_max), (1, 10, 1));
        assert!(c.remove_stopwords);
    }

    #[test]
    fn parses_file_with_grid_and_paths() {
        let text = "# comment\ngenre = headline\nfeatures = bow, lex\nregressor = svr\nseed = 7\n\
                    svr.c = 0.1, 1\nsvr.epsilon = 0.05,0.1\nlexicons = lm:lm.csv, mpqa:clues.tff, extra.tsv\n";
        let c = ConfigEntries::parse(text, Path::new("/data/exp")).unwrap().build().unwrap();
        assert_eq!(c.genre, Genre::Headline);
        assert_eq!(c.blocks, BlockSet::parse("bow,lex").unwrap());
        assert_eq!(c.grid.len(), 4);
        assert!(c.grid.iter().all(|p| p.seed() == 7 && p.kind() == RegressorKind::Svr));
        match &c.grid[1] {
            RegressorParams::Svr(p) => assert_eq!((p.epsilon, p.c), (0.05, 1.0)),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.lexicons[0].format, LexiconFormat::LoughranMcDonald);
        assert_eq!(c.lexicons[0].path, PathBuf::from("/data/exp/lm.csv"));
        assert_eq!(c.lexicons[1].format, LexiconFormat::Mpqa);
        assert_eq!(c.lexicons[2].format, LexiconFormat::Normalized);
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut e = ConfigEntries::parse("regressor = svr\nfolds = 10\n", Path::new("/x")).unwrap();
        e.set_pair("folds=3").unwrap();
        e.set_pair("regressor = rf").unwrap();
        e.set_pair("rf.max_depth=none,4").unwrap();
        let c = e.build().unwrap();
        assert_eq!(c.folds, 3);
        assert_eq!(c.grid.len(), 2);
        match &c.grid[1] {
            RegressorParams::RandomForest(p) => assert_eq!(p.max_depth, Some(4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let err = ConfigEntries::parse("genre = microblog\ncolour = red\n", Path::new("")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ConfigEntries::parse("just text\n", Path::new("")).is_err());
        let e = ConfigEntries::parse("folds = many\n", Path::new("")).unwrap();
        assert!(e.build().is_err());
        let e = ConfigEntries::parse("regressor = knn\n", Path::new("")).unwrap();
        assert!(e.build().is_err());
    }

    #[test]
    fn validation_requires_block_resources() {
        let c = ExperimentConfig::default();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("embeddings"), "{err}");
        let c = c.with_blocks(BlockSet::parse("bow").unwrap());
        assert!(c.validate().is_ok());
        let c = c.with_blocks(BlockSet::parse("lex").unwrap());
        assert!(c.validate().unwrap_err().to_string().contains("lexicon"));
    }
}

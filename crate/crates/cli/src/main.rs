use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use finsent::dataset::{
    convert_competition_json, load_dataset, load_predictions, write_dataset, write_predictions, Genre,
};
use finsent::embed::{load_embeddings, save_embeddings, train_skipgram, SkipgramConfig};
use finsent::evaluate::EvalReport;
use finsent::lexicon::{import_loughran_mcdonald, import_mpqa, load_normalized, merge};
use finsent::pipeline::{
    fit_pipeline, format_ablation_table, run_ablation, run_experiment, run_validation, write_ablation_csv,
    ConfigEntries, ExperimentConfig, FittedPipeline, Resources,
};
use finsent::textprep::{load_aliases, load_stopwords, preprocess, NormalizationConfig};

#[derive(Parser, Debug)]
#[command(name = "finsent", version, about = "Fine-grained sentiment scoring for financial text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize and tokenize text, one document per line
    Preprocess(PreprocessArgs),
    /// Train skip-gram embeddings on a corpus (one document per line)
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Words closest to vector(A) - vector(B) + vector(C)
    Analogy(AnalogyArgs),
    /// Nearest neighbours of a word by cosine
    MostSimilar(MostSimilarArgs),
    /// Convert a competition JSON file to the JSONL dataset format
    Convert(ConvertArgs),
    /// Convert MPQA or Loughran-McDonald files to the normalized lexicon format
    ImportLexicon(ImportLexiconArgs),
    /// Fit a pipeline and save it
    Train(TrainArgs),
    /// Score a dataset with a saved pipeline
    Predict(PredictArgs),
    /// Compare predictions against gold scores
    Evaluate(EvaluateArgs),
    /// Evaluate every feature-block combination
    Ablate(AblateArgs),
    /// Train and evaluate in one go
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Experiment configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set rf.trees=100`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Feature blocks, e.g. `bow,lex` or `all`
    #[arg(long)]
    features: Option<String>,
    /// rf, svr or mlp
    #[arg(long)]
    regressor: Option<String>,
    #[arg(long)]
    genre: Option<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut entries = match &self.config {
            Some(p) => ConfigEntries::load(p)?,
            None => ConfigEntries::default(),
        };
        let shortcuts = [
            ("seed", self.seed.map(|s| s.to_string())),
            ("features", self.features.clone()),
            ("regressor", self.regressor.clone()),
            ("genre", self.genre.clone()),
        ];
        for (key, value) in shortcuts {
            if let Some(v) = value {
                entries.set_pair(&format!("{key}={v}"))?;
            }
        }
        for pair in &self.overrides {
            entries.set_pair(pair)?;
        }
        Ok(entries.build()?)
    }
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Input file; standard input when omitted
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Company alias list, one per line
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    keep_stopwords: bool,
}

#[derive(Args, Debug)]
struct TrainEmbeddingsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 25)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// More than one thread trains faster but is not reproducible
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    keep_stopwords: bool,
}

#[derive(Args, Debug)]
struct AnalogyArgs {
    #[arg(long)]
    embeddings: PathBuf,
    a: String,
    b: String,
    c: String,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
}

#[derive(Args, Debug)]
struct MostSimilarArgs {
    #[arg(long)]
    embeddings: PathBuf,
    word: String,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    genre: Genre,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ImportLexiconArgs {
    #[arg(long)]
    mpqa: Vec<PathBuf>,
    #[arg(long)]
    lm: Vec<PathBuf>,
    /// Already-normalized `word<TAB>CLASS` files to merge in
    #[arg(long)]
    tsv: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    out_model: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value = "microblog")]
    genre: Genre,
    /// Also write the report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// CSV output
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    train: PathBuf,
    /// Held-out data; without it an 80/20 validation split of `--train` is used
    #[arg(long)]
    test: Option<PathBuf>,
    /// Write test predictions here
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Save the fitted pipeline here
    #[arg(long)]
    out_model: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = dispatch(Cli::parse().command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::TrainEmbeddings(a) => cmd_train_embeddings(a),
        Command::Analogy(a) => {
            let emb = load_embeddings(&a.embeddings)?;
            print_ranked(&emb.analogy(&a.a, &a.b, &a.c, a.top_k)?);
            Ok(())
        }
        Command::MostSimilar(a) => {
            let emb = load_embeddings(&a.embeddings)?;
            print_ranked(&emb.most_similar(&a.word, a.top_k)?);
            Ok(())
        }
        Command::Convert(a) => {
            let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let instances = convert_competition_json(&text, a.genre)?;
            write_dataset(&instances, create(&a.out)?)?;
            log::info!("wrote {} instances to {}", instances.len(), a.out.display());
            Ok(())
        }
        Command::ImportLexicon(a) => cmd_import_lexicon(a),
        Command::Train(a) => {
            let config = a.config.build()?;
            config.validate()?;
            let resources = Resources::load(&config)?;
            let train = load_dataset(&a.train, config.genre)?;
            let fitted = fit_pipeline(&config, &resources, &train)?;
            if let Some(cv) = &fitted.cv {
                let best = cv.best();
                log::info!(
                    "selected {} (cv cosine {:.4}, mae {:.4})",
                    fitted.params.describe(),
                    best.mean_cosine,
                    best.mean_mae
                );
            }
            fitted.save(&a.out_model)?;
            Ok(())
        }
        Command::Predict(a) => {
            let fitted = FittedPipeline::load(&a.model)?;
            let resources = Resources::load(&fitted.config)?;
            let instances = load_dataset(&a.input, fitted.config.genre)?;
            let predictions = fitted.predict(&resources, &instances)?;
            write_predictions(&predictions, create(&a.out)?)?;
            Ok(())
        }
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Ablate(a) => {
            let config = a.config.build()?;
            let rows = run_ablation(&config, &a.train, &a.test)?;
            write_ablation_csv(&rows, create(&a.out)?)?;
            print!("{}", format_ablation_table(&rows));
            Ok(())
        }
        Command::Run(a) => cmd_run(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_ranked(ranked: &[(String, f64)]) {
    for (word, score) in ranked {
        println!("{word}\t{score:.6}");
    }
}

fn normalization(
    stopwords: Option<&Path>,
    aliases: Option<&Path>,
    keep_stopwords: bool,
) -> Result<NormalizationConfig> {
    let mut config = NormalizationConfig::default().with_stopword_removal(!keep_stopwords);
    if let Some(p) = stopwords {
        config = config.with_stopwords(load_stopwords(p)?);
    }
    if let Some(p) = aliases {
        config = config.with_extra_aliases(load_aliases(p)?)?;
    }
    Ok(config)
}

fn read_lines(input: Option<&Path>) -> Result<Vec<String>> {
    let mut bytes = Vec::new();
    match input {
        Some(p) => {
            File::open(p)
                .with_context(|| format!("opening {}", p.display()))?
                .read_to_end(&mut bytes)?;
        }
        None => {
            io::stdin().lock().read_to_end(&mut bytes)?;
        }
    }
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(&bytes[..]).split(b'\n').enumerate() {
        let line = line?;
        let text = String::from_utf8(line).with_context(|| format!("line {} is not valid UTF-8", i + 1))?;
        lines.push(text.trim_end_matches('\r').to_string());
    }
    Ok(lines)
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<()> {
    let config = normalization(a.stopwords.as_deref(), a.aliases.as_deref(), a.keep_stopwords)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    for line in read_lines(a.input.as_deref())? {
        writeln!(out, "{}", preprocess(&line, &config).tokens.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_train_embeddings(a: TrainEmbeddingsArgs) -> Result<()> {
    let norm = normalization(None, None, a.keep_stopwords)?;
    let corpus: Vec<_> = read_lines(Some(&a.corpus))?
        .iter()
        .map(|l| preprocess(l, &norm))
        .filter(|d| !d.is_empty())
        .collect();
    let config = SkipgramConfig {
        dimensions: a.dim,
        window: a.window,
        negatives: a.negatives,
        min_count: a.min_count,
        epochs: a.epochs,
        initial_learning_rate: a.learning_rate,
        seed: a.seed,
        threads: a.threads,
        ..SkipgramConfig::default()
    };
    let trained = train_skipgram(&corpus, &config)?;
    for (epoch, loss) in trained.epoch_losses.iter().enumerate() {
        log::info!("epoch {}: loss {loss:.5}", epoch + 1);
    }
    log::info!("{} words x {} dimensions", trained.embeddings.len(), trained.embeddings.dim());
    save_embeddings(&trained.embeddings, &a.out)?;
    Ok(())
}

fn cmd_import_lexicon(a: ImportLexiconArgs) -> Result<()> {
    if a.mpqa.is_empty() && a.lm.is_empty() && a.tsv.is_empty() {
        bail!("give at least one of --mpqa, --lm or --tsv");
    }
    let mut lexicons = Vec::new();
    for p in &a.mpqa {
        let (lex, stats) = import_mpqa(p)?;
        log::info!("{}: {} words, skipped {stats:?}", p.display(), lex.len());
        lexicons.push(lex);
    }
    for p in &a.lm {
        lexicons.push(import_loughran_mcdonald(p)?);
    }
    for p in &a.tsv {
        lexicons.push(load_normalized(p)?);
    }
    let merged = merge(&lexicons);
    let mut out = create(&a.out)?;
    merged.write_tsv(&mut out)?;
    out.flush()?;
    log::info!("wrote {} words to {}", merged.len(), a.out.display());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let gold = load_dataset(&a.gold, a.genre)?;
    let predictions = load_predictions(&a.pred)?;
    let by_id: HashMap<&str, f64> = predictions.iter().map(|p| (p.id.as_str(), p.score)).collect();
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for inst in &gold {
        let Some(score) = inst.gold_score else {
            bail!("gold instance {} has no score", inst.id);
        };
        let Some(&pred) = by_id.get(inst.id.as_str()) else {
            bail!("no prediction for {}", inst.id);
        };
        g.push(score);
        p.push(pred);
    }
    if predictions.len() > gold.len() {
        log::warn!("{} predictions have no gold instance", predictions.len() - gold.len());
    }
    let report = EvalReport::compute(&g, &p)?;
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        fs::write(out, report.to_text()).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let config = a.config.build()?;
    let (outcome, summary) = match &a.test {
        Some(test) => {
            let outcome = run_experiment(&config, &a.train, test)?;
            let summary = outcome.report.as_ref().map(|r| r.to_text());
            (outcome, summary)
        }
        None => {
            config.validate()?;
            let resources = Resources::load(&config)?;
            let data = load_dataset(&a.train, config.genre)?;
            let v = run_validation(&config, &resources, &data)?;
            let summary = format!(
                "{}baseline_cosine={}\nbaseline_mae={}\ntrain={}\nvalidation={}\n",
                v.report.to_text(),
                v.baseline.cosine,
                v.baseline.mae,
                v.train_size,
                v.validation_size
            );
            (v.outcome, Some(summary))
        }
    };
    log::info!("selected {}", outcome.fitted.params.describe());
    match summary {
        Some(s) => print!("{s}"),
        None => log::info!("test data has no gold scores; skipping evaluation"),
    }
    if let Some(p) = &a.predictions {
        write_predictions(&outcome.predictions, create(p)?)?;
    }
    if let Some(p) = &a.out_model {
        outcome.fitted.save(p)?;
    }
    Ok(())
}

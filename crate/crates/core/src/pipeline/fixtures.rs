//! Seeded synthetic data whose gold score is the lexicon polarity of the
//! preprocessed span, for smoke tests and reproducibility checks.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{write_dataset, Genre, LabeledInstance};
use crate::embed::{write_embeddings, EmbeddingMatrix, Vocabulary};
use crate::evaluate::make_validation_split;
use crate::featurize::lexicon_features;
use crate::lexicon::{Lexicon, WordClass};
use crate::textprep::{preprocess, NormalizationConfig, COMPANY_TOKEN};

pub const POSITIVE_WORDS: [&str; 10] = [
    "gain", "profit", "surge", "beat", "upgrade", "strong", "growth", "record", "rally", "bullish",
];
pub const NEGATIVE_WORDS: [&str; 10] = [
    "loss", "drop", "miss", "downgrade", "weak", "decline", "lawsuit", "plunge", "bearish", "fraud",
];
pub const NEUTRAL_WORDS: [&str; 12] = [
    "shares", "market", "today", "trading", "quarter", "report", "price", "investors", "week", "analysts",
    "session", "volume",
];
const CASHTAGS: [&str; 6] = ["$AAPL", "$TSLA", "$AMZN", "$FB", "$JPM", "$BP"];

/// LM and MPQA classes for the fixture vocabulary.
pub fn fixture_lexicon() -> Lexicon {
    let mut lex = Lexicon::new("synthetic");
    for w in POSITIVE_WORDS {
        lex.insert(w, WordClass::LmPositive);
        lex.insert(w, WordClass::MpqaPositive);
    }
    for w in NEGATIVE_WORDS {
        lex.insert(w, WordClass::LmNegative);
        lex.insert(w, WordClass::MpqaNegative);
    }
    lex.insert("lawsuit", WordClass::LmLitigious);
    lex.insert("report", WordClass::MpqaNeutral);
    lex.insert("volume", WordClass::MpqaNeutral);
    lex
}

/// Random (untrained) vectors for every fixture word.
pub fn fixture_embeddings(dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut tokens: Vec<String> = POSITIVE_WORDS
        .iter()
        .chain(&NEGATIVE_WORDS)
        .chain(&NEUTRAL_WORDS)
        .map(|w| w.to_string())
        .collect();
    tokens.push(COMPANY_TOKEN.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..tokens.len() * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    EmbeddingMatrix::new(Vocabulary::from_ordered_tokens(tokens), dim, vectors).expect("consistent shapes")
}

/// `n` microblog-style instances; gold = LM polarity of the preprocessed text.
pub fn lexicon_instances(n: usize, seed: u64) -> Vec<LabeledInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = fixture_lexicon();
    let normalization = NormalizationConfig::default();
    (0..n)
        .map(|i| {
            let company = *CASHTAGS.choose(&mut rng).expect("non-empty");
            let len = rng.random_range(3..=8);
            let sentiment = rng.random_range(0..=len.min(4));
            let mut words: Vec<&str> = (0..len)
                .map(|k| {
                    if k < sentiment {
                        let pool = if rng.random_bool(0.5) { &POSITIVE_WORDS } else { &NEGATIVE_WORDS };
                        *pool.choose(&mut rng).expect("non-empty")
                    } else {
                        *NEUTRAL_WORDS.choose(&mut rng).expect("non-empty")
                    }
                })
                .collect();
            words.shuffle(&mut rng);
            let text = format!("{company} {}", words.join(" "));
            let doc = preprocess(&text, &normalization);
            let gold = lexicon_features(&doc, &lexicon)[6];
            LabeledInstance {
                id: format!("syn-{i}"),
                span: text.clone(),
                text,
                company: company.to_string(),
                gold_score: Some(gold),
                genre: Genre::Microblog,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticFixture {
    pub train: Vec<LabeledInstance>,
    pub test: Vec<LabeledInstance>,
    pub lexicon: Lexicon,
    pub embeddings: EmbeddingMatrix,
}

/// `n` instances split 80/20 by sorted score, plus lexicon and 8-d embeddings.
pub fn synthetic_fixture(n: usize, seed: u64) -> SyntheticFixture {
    let (train, test) = make_validation_split(&lexicon_instances(n, seed)).expect("n >= 5 with gold scores");
    SyntheticFixture {
        train,
        test,
        lexicon: fixture_lexicon(),
        embeddings: fixture_embeddings(8, seed),
    }
}

/// Files written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub config: PathBuf,
    pub train: PathBuf,
    pub test: PathBuf,
    pub lexicon: PathBuf,
    pub embeddings: PathBuf,
}

/// Writes the fixture and a fast experiment config into `dir`.
pub fn write_fixture(dir: &Path, n: usize, seed: u64) -> std::io::Result<FixtureFiles> {
    let fx = synthetic_fixture(n, seed);
    fs::create_dir_all(dir)?;
    let files = FixtureFiles {
        config: dir.join("experiment.conf"),
        train: dir.join("train.jsonl"),
        test: dir.join("test.jsonl"),
        lexicon: dir.join("lexicon.tsv"),
        embeddings: dir.join("embeddings.txt"),
    };
    write_dataset(&fx.train, BufWriter::new(fs::File::create(&files.train)?))?;
    write_dataset(&fx.test, BufWriter::new(fs::File::create(&files.test)?))?;
    fx.lexicon.write_tsv(BufWriter::new(fs::File::create(&files.lexicon)?))?;
    write_embeddings(&fx.embeddings, BufWriter::new(fs::File::create(&files.embeddings)?))?;
    fs::write(
        &files.config,
        format!(
            "# synthetic lexicon-signal fixture\ngenre = microblog\nfeatures = all\nregressor = rf\n\
             seed = {seed}\nfolds = 5\nlexicons = lexicon.tsv\nembeddings = embeddings.txt\nrf.trees = 50\n"
        ),
    )?;
    Ok(files)
}

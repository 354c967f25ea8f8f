//! Feature extraction: bag-of-words counts, lexicon features and
//! bag-of-embeddings, concatenated in that order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbeddingMatrix, Vocabulary};
use crate::lexicon::{Lexicon, WordClass};
use crate::sparse::SparseRow;
use crate::textprep::TokenizedDocument;

/// Width of the lexicon block.
pub const LEXICON_FEATURES: usize = 11;

/// Lexicon block order. Each class yields a 0/1 presence feature; the two
/// polarity scores follow their family.
const LM_CLASSES: [WordClass; 6] = [
    WordClass::LmPositive,
    WordClass::LmNegative,
    WordClass::LmConstraining,
    WordClass::LmLitigious,
    WordClass::LmUncertain,
    WordClass::LmModal,
];
const MPQA_CLASSES: [WordClass; 3] = [
    WordClass::MpqaPositive,
    WordClass::MpqaNegative,
    WordClass::MpqaNeutral,
];

pub const LEXICON_FEATURE_NAMES: [&str; LEXICON_FEATURES] = [
    "lm_positive",
    "lm_negative",
    "lm_constraining",
    "lm_litigious",
    "lm_uncertain",
    "lm_modal",
    "lm_polarity",
    "mpqa_positive",
    "mpqa_negative",
    "mpqa_neutral",
    "mpqa_polarity",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("at least one feature block must be enabled")]
    NoBlocks,
    #[error("{0} block is enabled but its component was not provided")]
    MissingComponent(FeatureBlock),
    #[error("n-gram order must be 1, 2 or 3, got {0}")]
    InvalidNgramOrder(usize),
    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("unknown feature block {0:?}")]
    UnknownBlock(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureBlock {
    Bow,
    Lex,
    Boe,
}

impl fmt::Display for FeatureBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureBlock::Bow => "BoW",
            FeatureBlock::Lex => "Lex",
            FeatureBlock::Boe => "BoE",
        })
    }
}

/// Which feature blocks are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BlockSet {
    pub bow: bool,
    pub lex: bool,
    pub boe: bool,
}

impl BlockSet {
    pub const ALL: BlockSet = BlockSet {
        bow: true,
        lex: true,
        boe: true,
    };

    pub fn of(blocks: &[FeatureBlock]) -> Self {
        let mut set = BlockSet::default();
        for b in blocks {
            match b {
                FeatureBlock::Bow => set.bow = true,
                FeatureBlock::Lex => set.lex = true,
                FeatureBlock::Boe => set.boe = true,
            }
        }
        set
    }

    pub fn contains(self, block: FeatureBlock) -> bool {
        match block {
            FeatureBlock::Bow => self.bow,
            FeatureBlock::Lex => self.lex,
            FeatureBlock::Boe => self.boe,
        }
    }

    pub fn is_empty(self) -> bool {
        !(self.bow || self.lex || self.boe)
    }

    pub fn blocks(self) -> Vec<FeatureBlock> {
        [FeatureBlock::Bow, FeatureBlock::Lex, FeatureBlock::Boe]
            .into_iter()
            .filter(|&b| self.contains(b))
            .collect()
    }

    /// Parses a comma-separated list such as `bow,lex` or the word `all`.
    pub fn parse(spec: &str) -> Result<Self, FeatureError> {
        if spec.trim().eq_ignore_ascii_case("all") {
            return Ok(BlockSet::ALL);
        }
        let mut set = BlockSet::default();
        for part in spec.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "bow" => set.bow = true,
                "lex" => set.lex = true,
                "boe" => set.boe = true,
                _ => return Err(FeatureError::UnknownBlock(part.to_string())),
            }
        }
        if set.is_empty() {
            return Err(FeatureError::NoBlocks);
        }
        Ok(set)
    }

    /// Comma-separated form accepted by [`BlockSet::parse`].
    pub fn to_config_string(self) -> String {
        self.blocks()
            .iter()
            .map(|b| b.to_string().to_ascii_lowercase())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Bag-of-words vocabulary over n-grams of order `1..=ngram_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowVocabulary {
    pub vocabulary: Vocabulary,
    pub ngram_max: usize,
}

impl BowVocabulary {
    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }
}

/// All n-grams of order `1..=ngram_max`, joined with `_`.
pub fn ngrams(tokens: &[String], ngram_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=ngram_max {
        out.extend(tokens.windows(n).map(|w| w.join("_")));
    }
    out
}

/// Fits the bag-of-words vocabulary on training documents (min count 1).
pub fn fit_bow_vocabulary(
    train_docs: &[TokenizedDocument],
    ngram_max: usize,
) -> Result<BowVocabulary, FeatureError> {
    if !(1..=3).contains(&ngram_max) {
        return Err(FeatureError::InvalidNgramOrder(ngram_max));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in train_docs {
        for gram in ngrams(&doc.tokens, ngram_max) {
            *counts.entry(gram).or_default() += 1;
        }
    }
    Ok(BowVocabulary {
        vocabulary: Vocabulary::from_counts(counts, 1),
        ngram_max,
    })
}

/// Raw n-gram counts; out-of-vocabulary n-grams are dropped.
pub fn bow_vector(doc: &TokenizedDocument, vocab: &BowVocabulary) -> BTreeMap<usize, f64> {
    let mut counts = BTreeMap::new();
    for gram in ngrams(&doc.tokens, vocab.ngram_max) {
        if let Some(i) = vocab.vocabulary.index(&gram) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    counts
}

/// The 11 lexicon features: six Loughran-McDonald presence flags, the LM
/// polarity score, three MPQA presence flags and the MPQA polarity score.
/// Polarity is `(#positive - #negative) / max(1, #tokens)`.
pub fn lexicon_features(doc: &TokenizedDocument, lex: &Lexicon) -> [f64; LEXICON_FEATURES] {
    let mut present = [false; 9];
    let (mut lm_pos, mut lm_neg, mut mpqa_pos, mut mpqa_neg) = (0usize, 0usize, 0usize, 0usize);
    for token in &doc.tokens {
        let classes = lex.lookup(token);
        if classes.is_empty() {
            continue;
        }
        for class in classes.iter() {
            present[class as usize] = true;
        }
        lm_pos += classes.contains(WordClass::LmPositive) as usize;
        lm_neg += classes.contains(WordClass::LmNegative) as usize;
        mpqa_pos += classes.contains(WordClass::MpqaPositive) as usize;
        mpqa_neg += classes.contains(WordClass::MpqaNegative) as usize;
    }
    let span = doc.len().max(1) as f64;
    let flag = |c: WordClass| if present[c as usize] { 1.0 } else { 0.0 };
    let mut out = [0.0; LEXICON_FEATURES];
    for (slot, class) in out.iter_mut().zip(LM_CLASSES) {
        *slot = flag(class);
    }
    out[6] = (lm_pos as f64 - lm_neg as f64) / span;
    for (slot, class) in out[7..10].iter_mut().zip(MPQA_CLASSES) {
        *slot = flag(class);
    }
    out[10] = (mpqa_pos as f64 - mpqa_neg as f64) / span;
    out
}

/// Mean of the embedding rows of in-vocabulary tokens; zeros if there are none.
pub fn bag_of_embeddings(doc: &TokenizedDocument, matrix: &EmbeddingMatrix) -> Vec<f64> {
    let mut sum = vec![0.0; matrix.dim()];
    let mut found = 0usize;
    for token in &doc.tokens {
        if let Some(v) = matrix.vector(token) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            found += 1;
        }
    }
    if found > 0 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    sum
}

/// Sizes and positions of the enabled blocks in the concatenated vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub bow_size: usize,
    pub lexicon_size: usize,
    pub embedding_size: usize,
    pub blocks: BlockSet,
}

impl FeatureLayout {
    /// Disabled blocks get size zero regardless of the sizes passed in.
    pub fn new(blocks: BlockSet, bow_size: usize, embedding_size: usize) -> Result<Self, FeatureError> {
        if blocks.is_empty() {
            return Err(FeatureError::NoBlocks);
        }
        Ok(Self {
            bow_size: if blocks.bow { bow_size } else { 0 },
            lexicon_size: if blocks.lex { LEXICON_FEATURES } else { 0 },
            embedding_size: if blocks.boe { embedding_size } else { 0 },
            blocks,
        })
    }

    /// Layout matching the sizes of the given components.
    pub fn for_sources(blocks: BlockSet, sources: &FeatureSources<'_>) -> Result<Self, FeatureError> {
        sources.check(blocks)?;
        Self::new(
            blocks,
            sources.bow.map_or(0, BowVocabulary::len),
            sources.embeddings.map_or(0, EmbeddingMatrix::dim),
        )
    }

    pub fn total_dim(&self) -> usize {
        self.bow_size + self.lexicon_size + self.embedding_size
    }

    /// Index range of `block`, or `None` when it is disabled.
    pub fn range(&self, block: FeatureBlock) -> Option<Range<usize>> {
        if !self.blocks.contains(block) {
            return None;
        }
        let start = match block {
            FeatureBlock::Bow => 0,
            FeatureBlock::Lex => self.bow_size,
            FeatureBlock::Boe => self.bow_size + self.lexicon_size,
        };
        let len = match block {
            FeatureBlock::Bow => self.bow_size,
            FeatureBlock::Lex => self.lexicon_size,
            FeatureBlock::Boe => self.embedding_size,
        };
        Some(start..start + len)
    }

    pub fn offset(&self, block: FeatureBlock) -> Option<usize> {
        self.range(block).map(|r| r.start)
    }
}

/// Fitted components available to [`assemble`].
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureSources<'a> {
    pub bow: Option<&'a BowVocabulary>,
    pub lexicon: Option<&'a Lexicon>,
    pub embeddings: Option<&'a EmbeddingMatrix>,
}

impl FeatureSources<'_> {
    fn check(&self, blocks: BlockSet) -> Result<(), FeatureError> {
        if blocks.bow && self.bow.is_none() {
            return Err(FeatureError::MissingComponent(FeatureBlock::Bow));
        }
        if blocks.lex && self.lexicon.is_none() {
            return Err(FeatureError::MissingComponent(FeatureBlock::Lex));
        }
        if blocks.boe && self.embeddings.is_none() {
            return Err(FeatureError::MissingComponent(FeatureBlock::Boe));
        }
        Ok(())
    }
}

/// Feature blocks of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub bow: BTreeMap<usize, f64>,
    pub lex: Vec<f64>,
    pub boe: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    /// The concatenated vector in sparse form, zeros omitted.
    pub fn to_sparse(&self) -> SparseRow {
        let mut entries: Vec<(usize, f64)> = self.bow.iter().map(|(&i, &v)| (i, v)).collect();
        if let Some(off) = self.layout.offset(FeatureBlock::Lex) {
            entries.extend(self.lex.iter().enumerate().map(|(i, &v)| (off + i, v)));
        }
        if let Some(off) = self.layout.offset(FeatureBlock::Boe) {
            entries.extend(self.boe.iter().enumerate().map(|(i, &v)| (off + i, v)));
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseRow::from_entries(entries)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.to_sparse().to_dense(self.layout.total_dim())
    }
}

/// Computes the enabled blocks of `doc` for `layout`.
pub fn assemble(
    doc: &TokenizedDocument,
    sources: &FeatureSources<'_>,
    layout: &FeatureLayout,
) -> Result<FeatureVector, FeatureError> {
    let blocks = layout.blocks;
    if blocks.is_empty() {
        return Err(FeatureError::NoBlocks);
    }
    sources.check(blocks)?;
    let bow = match sources.bow.filter(|_| blocks.bow) {
        Some(vocab) => {
            if vocab.len() != layout.bow_size {
                return Err(FeatureError::LayoutMismatch(format!(
                    "bag-of-words vocabulary has {} entries, layout expects {}",
                    vocab.len(),
                    layout.bow_size
                )));
            }
            bow_vector(doc, vocab)
        }
        None => BTreeMap::new(),
    };
    let lex = match sources.lexicon.filter(|_| blocks.lex) {
        Some(lexicon) => lexicon_features(doc, lexicon).to_vec(),
        None => Vec::new(),
    };
    let boe = match sources.embeddings.filter(|_| blocks.boe) {
        Some(matrix) => {
            if matrix.dim() != layout.embedding_size {
                return Err(FeatureError::LayoutMismatch(format!(
                    "embeddings have dimension {}, layout expects {}",
                    matrix.dim(),
                    layout.embedding_size
                )));
            }
            bag_of_embeddings(doc, matrix)
        }
        None => Vec::new(),
    };
    Ok(FeatureVector {
        bow,
        lex,
        boe,
        layout: *layout,
    })
}

/// Dumps rows as `"<rows> <cols>"` followed by `"row col value"` triplets.
pub fn write_sparse_matrix<W: Write>(rows: &[SparseRow], cols: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", rows.len(), cols)?;
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row.entries() {
            writeln!(out, "{r} {c} {v}")?;
        }
    }
    out.flush()
}

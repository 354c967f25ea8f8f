//! Sentiment lexicons normalized to a word → word-class map.
//!
//! The canonical on-disk form is a TSV of `word<TAB>CLASS` lines. Importers
//! convert the Loughran-McDonald master dictionary (CSV) and the MPQA
//! subjectivity clues (`key=value` records) into that form.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{source_name} line {line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WordClass {
    LmPositive,
    LmNegative,
    LmConstraining,
    LmLitigious,
    LmUncertain,
    LmModal,
    MpqaPositive,
    MpqaNegative,
    MpqaNeutral,
}

impl WordClass {
    pub const ALL: [WordClass; 9] = [
        WordClass::LmPositive,
        WordClass::LmNegative,
        WordClass::LmConstraining,
        WordClass::LmLitigious,
        WordClass::LmUncertain,
        WordClass::LmModal,
        WordClass::MpqaPositive,
        WordClass::MpqaNegative,
        WordClass::MpqaNeutral,
    ];

    pub fn label(self) -> &'static str {
        match self {
            WordClass::LmPositive => "LM_POSITIVE",
            WordClass::LmNegative => "LM_NEGATIVE",
            WordClass::LmConstraining => "LM_CONSTRAINING",
            WordClass::LmLitigious => "LM_LITIGIOUS",
            WordClass::LmUncertain => "LM_UNCERTAIN",
            WordClass::LmModal => "LM_MODAL",
            WordClass::MpqaPositive => "MPQA_POSITIVE",
            WordClass::MpqaNegative => "MPQA_NEGATIVE",
            WordClass::MpqaNeutral => "MPQA_NEUTRAL",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for WordClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WordClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown word class {s:?}"))
    }
}

/// Set of [`WordClass`] values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassSet(u16);

impl ClassSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, class: WordClass) {
        self.0 |= class.bit();
    }

    pub fn contains(self, class: WordClass) -> bool {
        self.0 & class.bit() != 0
    }

    pub fn union(self, other: ClassSet) -> ClassSet {
        ClassSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = WordClass> {
        WordClass::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

impl FromIterator<WordClass> for ClassSet {
    fn from_iter<T: IntoIterator<Item = WordClass>>(iter: T) -> Self {
        let mut set = ClassSet::empty();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, ClassSet>,
    source_name: String,
}

impl Lexicon {
    pub fn new(source_name: impl Into<String>) -> Self {
        Self {
            entries: BTreeMap::new(),
            source_name: source_name.into(),
        }
    }

    /// Adds `class` to `word` (lowercased). Returns false, without inserting,
    /// for empty or multiword entries.
    pub fn insert(&mut self, word: &str, class: WordClass) -> bool {
        let word = word.trim();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return false;
        }
        self.entries.entry(word.to_lowercase()).or_default().insert(class);
        true
    }

    /// Classes of `word`; empty when absent. Case-insensitive.
    pub fn lookup(&self, word: &str) -> ClassSet {
        match self.entries.get(word) {
            Some(set) => *set,
            None if word.chars().any(char::is_uppercase) => {
                self.entries.get(&word.to_lowercase()).copied().unwrap_or_default()
            }
            None => ClassSet::empty(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, ClassSet> {
        &self.entries
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the normalized TSV form.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (word, classes) in &self.entries {
            for class in classes.iter() {
                writeln!(out, "{word}\t{class}")?;
            }
        }
        out.flush()
    }
}

fn read_to_string(path: &Path) -> Result<String, LexiconError> {
    fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn source_name_of(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parses the normalized `word<TAB>CLASS` format.
pub fn parse_normalized(text: &str, source_name: &str) -> Result<Lexicon, LexiconError> {
    let mut lexicon = Lexicon::new(source_name);
    let err = |line: usize, message: String| LexiconError::Format {
        source_name: source_name.to_string(),
        line,
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (word, class) = line
            .split_once('\t')
            .ok_or_else(|| err(line_no, "expected \"word<TAB>CLASS\"".into()))?;
        let class: WordClass = class.trim().parse().map_err(|m| err(line_no, m))?;
        if !lexicon.insert(word, class) {
            return Err(err(line_no, format!("{word:?} is not a single token")));
        }
    }
    Ok(lexicon)
}

pub fn load_normalized(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    parse_normalized(&read_to_string(path)?, &source_name_of(path))
}

/// Counts of MPQA records that were not imported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MpqaImportStats {
    pub imported: usize,
    pub skipped_multiword: usize,
    pub skipped_missing_word: usize,
    pub skipped_unknown_polarity: usize,
}

/// Parses MPQA subjectivity clue records such as
/// `type=strongsubj len=1 word1=great pos1=adj stemmed1=n priorpolarity=positive`.
pub fn parse_mpqa(text: &str, source_name: &str) -> (Lexicon, MpqaImportStats) {
    let mut lexicon = Lexicon::new(source_name);
    let mut stats = MpqaImportStats::default();
    for line in text.lines() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut word = None;
        let mut polarity = None;
        let mut len = 1usize;
        for field in line.split_whitespace() {
            if let Some((key, value)) = field.split_once('=') {
                match key {
                    "word1" => word = Some(value),
                    "priorpolarity" => polarity = Some(value),
                    "len" => len = value.parse().unwrap_or(1),
                    _ => {}
                }
            }
        }
        let Some(word) = word.filter(|w| !w.is_empty()) else {
            stats.skipped_missing_word += 1;
            continue;
        };
        if len > 1 {
            stats.skipped_multiword += 1;
            continue;
        }
        let classes: &[WordClass] = match polarity {
            Some("positive") => &[WordClass::MpqaPositive],
            Some("negative") => &[WordClass::MpqaNegative],
            Some("neutral") => &[WordClass::MpqaNeutral],
            Some("both") => &[WordClass::MpqaPositive, WordClass::MpqaNegative],
            _ => {
                stats.skipped_unknown_polarity += 1;
                continue;
            }
        };
        for &class in classes {
            lexicon.insert(word, class);
        }
        stats.imported += 1;
    }
    if stats.skipped_multiword + stats.skipped_missing_word + stats.skipped_unknown_polarity > 0 {
        log::warn!(
            "{source_name}: skipped {} multiword, {} word-less and {} unknown-polarity records",
            stats.skipped_multiword,
            stats.skipped_missing_word,
            stats.skipped_unknown_polarity
        );
    }
    (lexicon, stats)
}

pub fn import_mpqa(path: impl AsRef<Path>) -> Result<(Lexicon, MpqaImportStats), LexiconError> {
    let path = path.as_ref();
    Ok(parse_mpqa(&read_to_string(path)?, &source_name_of(path)))
}

fn lm_column_class(header: &str) -> Option<WordClass> {
    let key: String = header
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    match key.as_str() {
        "positive" => Some(WordClass::LmPositive),
        "negative" => Some(WordClass::LmNegative),
        "constraining" => Some(WordClass::LmConstraining),
        "litigious" => Some(WordClass::LmLitigious),
        "uncertainty" | "uncertain" => Some(WordClass::LmUncertain),
        "modal" | "strongmodal" | "weakmodal" => Some(WordClass::LmModal),
        _ => None,
    }
}

/// Parses the Loughran-McDonald master dictionary CSV. A word belongs to a
/// class when that class column holds a non-zero number (the release year).
/// Strong and weak modal columns both map to [`WordClass::LmModal`].
pub fn parse_loughran_mcdonald(text: &str, source_name: &str) -> Result<Lexicon, LexiconError> {
    let err = |line: usize, message: String| LexiconError::Format {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let word_col = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("word"))
        .ok_or_else(|| err(1, "no \"Word\" column".into()))?;
    let class_cols: Vec<(usize, WordClass)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| lm_column_class(h).map(|c| (i, c)))
        .collect();
    if class_cols.is_empty() {
        return Err(err(1, "no sentiment class columns".into()));
    }
    let mut lexicon = Lexicon::new(source_name);
    for (i, record) in reader.records().enumerate() {
        let line_no = i + 2;
        let record = record.map_err(|e| err(line_no, e.to_string()))?;
        let Some(word) = record.get(word_col) else {
            return Err(err(line_no, "missing word field".into()));
        };
        for &(col, class) in &class_cols {
            let value = record.get(col).unwrap_or("").trim();
            if value.is_empty() {
                continue;
            }
            let number: f64 = value
                .parse()
                .map_err(|_| err(line_no, format!("non-numeric class flag {value:?}")))?;
            if number != 0.0 {
                lexicon.insert(word, class);
            }
        }
    }
    Ok(lexicon)
}

pub fn import_loughran_mcdonald(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    parse_loughran_mcdonald(&read_to_string(path)?, &source_name_of(path))
}

/// Union of all entries; class sets are unioned per word.
pub fn merge(lexicons: &[Lexicon]) -> Lexicon {
    let mut names: Vec<&str> = lexicons.iter().map(|l| l.source_name.as_str()).collect();
    names.sort_unstable();
    let mut merged = Lexicon::new(names.join("+"));
    for lexicon in lexicons {
        for (word, classes) in &lexicon.entries {
            let slot = merged.entries.entry(word.clone()).or_default();
            *slot = slot.union(*classes);
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn tsv(text: &str) -> Lexicon {
        parse_normalized(text, "test").unwrap()
    }

    #[test]
    fn parses_single_entry() {
        let lex = tsv("gain\tLM_POSITIVE\n");
        assert_eq!(lex.lookup("gain"), ClassSet::from_iter([WordClass::LmPositive]));
    }

    #[test]
    fn repeated_words_union() {
        let lex = tsv("abandon\tLM_NEGATIVE\n# comment\nAbandon\tMPQA_NEGATIVE\n");
        assert_eq!(lex.len(), 1);
        assert_eq!(
            lex.lookup("abandon"),
            ClassSet::from_iter([WordClass::LmNegative, WordClass::MpqaNegative])
        );
    }

    #[test]
    fn unknown_class_names_the_line() {
        let err = parse_normalized("ok\tLM_MODAL\ngain\tBOGUS\n", "x").unwrap_err();
        assert!(matches!(err, LexiconError::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_empty_lexicon() {
        assert!(tsv("").is_empty());
        assert!(parse_mpqa("", "m").0.is_empty());
    }

    #[test]
    fn lookup_is_case_insensitive_and_total() {
        let lex = tsv("gain\tLM_POSITIVE\n");
        assert!(lex.lookup("GAIN").contains(WordClass::LmPositive));
        assert!(lex.lookup("nothing").is_empty());
    }

    #[test]
    fn mpqa_records() {
        let text = "type=strongsubj len=1 word1=great pos1=adj stemmed1=n priorpolarity=positive\n\
                    type=weaksubj len=1 word1=mixed pos1=adj stemmed1=n priorpolarity=both\n\
                    type=weaksubj len=1 word1=fact pos1=noun stemmed1=n priorpolarity=neutral\n\
                    type=weaksubj len=1 pos1=noun stemmed1=n priorpolarity=neutral\n\
                    type=weaksubj len=2 word1=ups_downs pos1=noun stemmed1=n priorpolarity=negative\n\
                    type=weaksubj len=1 word1=odd pos1=adj stemmed1=n priorpolarity=weakneg\n";
        let (lex, stats) = parse_mpqa(text, "mpqa");
        assert_eq!(lex.lookup("great"), ClassSet::from_iter([WordClass::MpqaPositive]));
        assert_eq!(
            lex.lookup("mixed"),
            ClassSet::from_iter([WordClass::MpqaPositive, WordClass::MpqaNegative])
        );
        assert!(lex.lookup("fact").contains(WordClass::MpqaNeutral));
        assert_eq!(
            stats,
            MpqaImportStats {
                imported: 3,
                skipped_multiword: 1,
                skipped_missing_word: 1,
                skipped_unknown_polarity: 1,
            }
        );
    }

    #[test]
    fn loughran_mcdonald_csv() {
        let text = "Word,Seq_num,Negative,Positive,Uncertainty,Litigious,Strong_Modal,Weak_Modal,Constraining\n\
                    ABANDON,1,2009,0,0,0,0,0,0\n\
                    GAIN,2,0,2009,0,0,0,0,0\n\
                    MUST,3,0,0,0,0,2009,0,0\n\
                    MIGHT,4,0,0,2009,0,0,2009,0\n\
                    TABLE,5,0,0,0,0,0,0,0\n";
        let lex = parse_loughran_mcdonald(text, "lm").unwrap();
        assert_eq!(lex.lookup("abandon"), ClassSet::from_iter([WordClass::LmNegative]));
        assert_eq!(lex.lookup("gain"), ClassSet::from_iter([WordClass::LmPositive]));
        assert_eq!(lex.lookup("must"), ClassSet::from_iter([WordClass::LmModal]));
        assert_eq!(
            lex.lookup("might"),
            ClassSet::from_iter([WordClass::LmUncertain, WordClass::LmModal])
        );
        assert!(lex.lookup("table").is_empty());
        assert_eq!(lex.len(), 4);
    }

    #[test]
    fn tsv_round_trip() {
        let lex = tsv("b\tLM_MODAL\na\tMPQA_NEUTRAL\na\tLM_LITIGIOUS\n");
        let mut out = Vec::new();
        lex.write_tsv(&mut out).unwrap();
        let back = parse_normalized(std::str::from_utf8(&out).unwrap(), "test").unwrap();
        assert_eq!(back, lex);
    }

    #[test]
    fn merge_identity_and_sizes() {
        let l = tsv("gain\tLM_POSITIVE\nloss\tLM_NEGATIVE\n");
        assert_eq!(merge(std::slice::from_ref(&l)).entries(), l.entries());
        let a = tsv("a\tLM_POSITIVE\nb\tLM_POSITIVE\nc\tLM_POSITIVE\n");
        let b = tsv("d\tMPQA_NEGATIVE\ne\tMPQA_NEGATIVE\nf\tMPQA_NEGATIVE\ng\tMPQA_NEGATIVE\n");
        assert_eq!(merge(&[a, b]).len(), 7);
    }

    fn arb_lexicon() -> impl Strategy<Value = Lexicon> {
        prop::collection::vec(("[a-e]{1,2}", 0usize..9), 0..12).prop_map(|pairs| {
            let mut lex = Lexicon::new("p");
            for (w, c) in pairs {
                lex.insert(&w, WordClass::ALL[c]);
            }
            lex
        })
    }

    proptest! {
        #[test]
        fn merge_is_commutative_associative_and_monotone(
            a in arb_lexicon(), b in arb_lexicon(), c in arb_lexicon()
        ) {
            let ab = merge(&[a.clone(), b.clone()]);
            let ba = merge(&[b.clone(), a.clone()]);
            prop_assert_eq!(ab.entries(), ba.entries());
            let left = merge(&[ab.clone(), c.clone()]);
            let right = merge(&[a.clone(), merge(&[b.clone(), c.clone()])]);
            prop_assert_eq!(left.entries(), right.entries());
            for (word, classes) in a.entries() {
                let merged = ab.lookup(word);
                prop_assert!(classes.iter().all(|cl| merged.contains(cl)));
            }
            prop_assert!(ab.entries().values().all(|s| !s.is_empty()));
        }
    }
}

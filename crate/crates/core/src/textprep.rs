//! Normalization and tokenization of financial microblogs and news headlines.
//!
//! Every text, whether a labelled instance or a line of an embedding corpus,
//! goes through the same fixed sequence:
//!
//! 1. [`obfuscate`]: cash amounts become `_cash_amount_`, company names and
//!    cashtags become `_company_`.
//! 2. [`map_numbers_and_signs`]: signs, magnitudes, `%`, `?` and `!` become
//!    words and every remaining number is replaced by the label of its bin.
//! 3. [`tokenize`]: tweet-aware splitting, punctuation removal, lowercasing
//!    and stopword removal.
//!
//! [`preprocess`] runs all three.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

/// Placeholder substituted for company names and cashtags.
pub const COMPANY_TOKEN: &str = "_company_";
/// Placeholder substituted for currency amounts.
pub const CASH_TOKEN: &str = "_cash_amount_";
pub const QUESTION_TOKEN: &str = "question_mark";
pub const EXCLAMATION_TOKEN: &str = "exclamation_mark";

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

const EMOTICONS: &[&str] = &[
    ":-)", ":-(", ":-d", ":-p", ";-)", ":)", ":(", ":d", ":p", ";)",
];

static CASH_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[$€]\d+(?:[.,]\d+)*(?:[BM]\b)?").unwrap());
static CASHTAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\$[A-Za-z]{1,6}\b").unwrap());

#[derive(Debug, Error)]
pub enum TextError {
    #[error("input is not valid UTF-8 (first bad byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid number bins: {0}")]
    InvalidBins(String),
    #[error("invalid company alias {0:?}")]
    InvalidAlias(String),
}

/// A half-open magnitude interval `[lower, upper)` and the word it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberBin {
    pub lower: f64,
    pub upper: f64,
    pub label: String,
}

impl NumberBin {
    fn new(lower: f64, upper: f64, label: &str) -> Self {
        Self {
            lower,
            upper,
            label: label.to_string(),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower && value < self.upper
    }
}

const BIN_LABELS: [&str; 5] = ["0-10", "10-20", "20-50", "50-100", ">100"];

/// The five magnitude bins used for numbers.
pub fn default_number_bins() -> Vec<NumberBin> {
    vec![
        NumberBin::new(0.0, 10.0, "0-10"),
        NumberBin::new(10.0, 20.0, "10-20"),
        NumberBin::new(20.0, 50.0, "20-50"),
        NumberBin::new(50.0, 100.0, "50-100"),
        NumberBin::new(100.0, f64::INFINITY, ">100"),
    ]
}

/// Checks that bins are contiguous, sorted, start at zero, end open-ended and
/// carry the five standard labels.
pub fn validate_number_bins(bins: &[NumberBin]) -> Result<(), TextError> {
    if bins.len() != BIN_LABELS.len() {
        return Err(TextError::InvalidBins(format!(
            "expected {} bins, got {}",
            BIN_LABELS.len(),
            bins.len()
        )));
    }
    if bins[0].lower != 0.0 {
        return Err(TextError::InvalidBins("first bin must start at 0".into()));
    }
    if bins[bins.len() - 1].upper != f64::INFINITY {
        return Err(TextError::InvalidBins("last bin must be open-ended".into()));
    }
    for (i, (bin, label)) in bins.iter().zip(BIN_LABELS).enumerate() {
        if bin.label != label {
            return Err(TextError::InvalidBins(format!(
                "bin {i} is labelled {:?}, expected {label:?}",
                bin.label
            )));
        }
        if !(bin.lower < bin.upper) {
            return Err(TextError::InvalidBins(format!("bin {i} is empty")));
        }
        if i > 0 && bins[i - 1].upper != bin.lower {
            return Err(TextError::InvalidBins(format!(
                "bins {} and {i} are not contiguous",
                i - 1
            )));
        }
    }
    Ok(())
}

/// Settings shared by every call to the normalization functions.
#[derive(Debug, Clone)]
pub struct NormalizationConfig {
    stopwords: HashSet<String>,
    company_aliases: Vec<String>,
    alias_matcher: Option<Regex>,
    number_bins: Vec<NumberBin>,
    remove_stopwords: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self::new(bundled_stopwords(), Vec::new(), default_number_bins(), true)
            .expect("bundled configuration is valid")
    }
}

impl NormalizationConfig {
    pub fn new(
        stopwords: impl IntoIterator<Item = String>,
        company_aliases: impl IntoIterator<Item = String>,
        number_bins: Vec<NumberBin>,
        remove_stopwords: bool,
    ) -> Result<Self, TextError> {
        validate_number_bins(&number_bins)?;
        let stopwords = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        let mut config = Self {
            stopwords,
            company_aliases: Vec::new(),
            alias_matcher: None,
            number_bins,
            remove_stopwords,
        };
        config.set_aliases(company_aliases.into_iter().collect())?;
        Ok(config)
    }

    fn set_aliases(&mut self, aliases: Vec<String>) -> Result<(), TextError> {
        let mut aliases: Vec<String> = aliases
            .into_iter()
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        // Longest first so the leftmost-first alternation prefers the longest alias.
        aliases.sort_by(|a, b| {
            b.chars()
                .count()
                .cmp(&a.chars().count())
                .then_with(|| a.cmp(b))
        });
        aliases.dedup();
        self.alias_matcher = if aliases.is_empty() {
            None
        } else {
            let alternatives: Vec<String> = aliases.iter().map(|a| alias_pattern(a)).collect();
            let pattern = format!("(?i)(?:{})", alternatives.join("|"));
            Some(Regex::new(&pattern).map_err(|_| TextError::InvalidAlias(aliases.join(", ")))?)
        };
        self.company_aliases = aliases;
        Ok(())
    }

    /// Returns a copy that additionally treats `extra` as company names.
    pub fn with_extra_aliases<I, S>(&self, extra: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut config = self.clone();
        let mut aliases = self.company_aliases.clone();
        aliases.extend(extra.into_iter().map(Into::into));
        config.set_aliases(aliases)?;
        Ok(config)
    }

    pub fn with_stopword_removal(mut self, enabled: bool) -> Self {
        self.remove_stopwords = enabled;
        self
    }

    pub fn with_stopwords(mut self, stopwords: impl IntoIterator<Item = String>) -> Self {
        self.stopwords = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        self
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn company_aliases(&self) -> &[String] {
        &self.company_aliases
    }

    pub fn number_bins(&self) -> &[NumberBin] {
        &self.number_bins
    }

    pub fn removes_stopwords(&self) -> bool {
        self.remove_stopwords
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    fn bin_label(&self, value: f64) -> &str {
        let magnitude = value.abs();
        self.number_bins
            .iter()
            .find(|b| b.contains(magnitude))
            .map(|b| b.label.as_str())
            // NaN only; unreachable for parsed digit strings.
            .unwrap_or(&self.number_bins[0].label)
    }
}

fn alias_pattern(alias: &str) -> String {
    let mut pattern = String::new();
    if alias.chars().next().is_some_and(is_word_char) {
        pattern.push_str(r"\b");
    }
    pattern.push_str(&regex::escape(alias));
    if alias.chars().last().is_some_and(is_word_char) {
        pattern.push_str(r"\b");
    }
    pattern
}

/// The bundled list of standard English stopwords.
pub fn bundled_stopwords() -> Vec<String> {
    parse_word_list(BUNDLED_STOPWORDS, false)
}

/// Parses a one-entry-per-line list. With `comments`, lines starting with `#`
/// are skipped.
pub fn parse_word_list(text: &str, comments: bool) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !(comments && l.starts_with('#')))
        .map(str::to_string)
        .collect()
}

fn read_utf8(path: &Path) -> Result<String, TextError> {
    let bytes = fs::read(path).map_err(|source| TextError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_utf8(&bytes).map(str::to_string)
}

/// Loads a stopword file: UTF-8, one token per line.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<Vec<String>, TextError> {
    Ok(parse_word_list(&read_utf8(path.as_ref())?, false)
        .into_iter()
        .map(|w| w.to_lowercase())
        .collect())
}

/// Loads a company alias file: UTF-8, one alias per line, `#` comments.
pub fn load_aliases(path: impl AsRef<Path>) -> Result<Vec<String>, TextError> {
    Ok(parse_word_list(&read_utf8(path.as_ref())?, true))
}

pub fn decode_utf8(bytes: &[u8]) -> Result<&str, TextError> {
    std::str::from_utf8(bytes).map_err(|e| TextError::Encoding {
        offset: e.valid_up_to(),
    })
}

/// A normalized token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedDocument {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenizedDocument {
    pub fn new(tokens: Vec<String>) -> Self {
        Self {
            tokens,
            source_id: String::new(),
        }
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined tokens.
    pub fn detokenize(&self) -> String {
        self.tokens.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for TokenizedDocument {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        Self::new(iter.into_iter().map(Into::into).collect())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Replaces every match of `re` by `replacement`, inserting a space on any
/// side where the match touches a word character, so placeholders never fuse
/// with neighbouring text.
fn replace_padded(text: &str, re: &Regex, replacement: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in re.find_iter(text) {
        out.push_str(&text[last..m.start()]);
        if text[..m.start()].chars().next_back().is_some_and(is_word_char) {
            out.push(' ');
        }
        out.push_str(replacement);
        if text[m.end()..].chars().next().is_some_and(is_word_char) {
            out.push(' ');
        }
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

/// Replaces cash amounts by [`CASH_TOKEN`], then company aliases and
/// cashtags by [`COMPANY_TOKEN`].
pub fn obfuscate(text: &str, config: &NormalizationConfig) -> String {
    let mut out = replace_padded(text, &CASH_RE, CASH_TOKEN);
    if let Some(matcher) = &config.alias_matcher {
        out = replace_padded(&out, matcher, COMPANY_TOKEN);
    }
    replace_padded(&out, &CASHTAG_RE, COMPANY_TOKEN)
}

/// Output buffer that keeps emitted words separated from surrounding text.
struct Emitter {
    out: String,
    pending_space: bool,
}

impl Emitter {
    fn word(&mut self, word: &str) {
        if self.out.chars().next_back().is_some_and(|c| !c.is_whitespace()) {
            self.out.push(' ');
        }
        self.out.push_str(word);
        self.pending_space = true;
    }

    fn char(&mut self, c: char) {
        if self.pending_space && !c.is_whitespace() {
            self.out.push(' ');
        }
        self.pending_space = false;
        self.out.push(c);
    }
}

fn is_sign(c: char) -> Option<&'static str> {
    match c {
        '-' | '\u{2212}' => Some("minus"),
        '+' => Some("plus"),
        _ => None,
    }
}

fn starts_with_at(chars: &[char], at: usize, pattern: &str) -> bool {
    let mut i = at;
    for p in pattern.chars() {
        if chars.get(i) != Some(&p) {
            return false;
        }
        i += 1;
    }
    true
}

/// Length in chars of a bin label starting at `at` and ending at a word edge.
fn label_at(chars: &[char], at: usize, bins: &[NumberBin]) -> Option<usize> {
    bins.iter()
        .filter(|b| starts_with_at(chars, at, &b.label))
        .map(|b| b.label.chars().count())
        .filter(|&len| !chars.get(at + len).copied().is_some_and(is_word_char))
        .max()
}

fn parse_number(literal: &str) -> f64 {
    let plain: String = literal.chars().filter(|&c| c != ',').collect();
    plain.parse::<f64>().unwrap_or_else(|_| {
        // More than one decimal point: bin on the leading component.
        plain
            .split('.')
            .next()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.0)
    })
}

/// Turns signs, magnitude suffixes, `%`, `?`, `!` and numbers into words.
pub fn map_numbers_and_signs(text: &str, config: &NormalizationConfig) -> String {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut em = Emitter {
        out: String::with_capacity(text.len() + 16),
        pending_space: false,
    };
    let mut i = 0;
    while i < n {
        let c = chars[i];
        let prev = if i > 0 { Some(chars[i - 1]) } else { None };
        let at_boundary = !prev.is_some_and(|p| is_word_char(p) || p == '#');

        if at_boundary {
            if let Some(len) = label_at(&chars, i, &config.number_bins) {
                let label: String = chars[i..i + len].iter().collect();
                em.word(&label);
                i += len;
                continue;
            }
        }

        if let Some(sign) = is_sign(c) {
            let next = chars.get(i + 1).copied();
            let standalone = prev.is_none_or(char::is_whitespace) && next.is_none_or(char::is_whitespace);
            let prefix = at_boundary && next.is_some_and(|d| d.is_ascii_digit());
            if standalone || prefix {
                em.word(sign);
            } else {
                em.char(c);
            }
            i += 1;
            continue;
        }

        if c.is_ascii_digit() && at_boundary {
            let mut j = i;
            while j < n && chars[j].is_ascii_digit() {
                j += 1;
            }
            while j + 1 < n && matches!(chars[j], '.' | ',') && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < n && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let suffix = match chars.get(j) {
                Some('B') if !chars.get(j + 1).copied().is_some_and(is_word_char) => Some("billions"),
                Some('M') if !chars.get(j + 1).copied().is_some_and(is_word_char) => Some("millions"),
                _ => None,
            };
            if suffix.is_none() && chars.get(j).copied().is_some_and(is_word_char) {
                // Alphanumeric word such as "3D" or "10am": leave it alone.
                while j < n && is_word_char(chars[j]) {
                    j += 1;
                }
                for &ch in &chars[i..j] {
                    em.char(ch);
                }
                i = j;
                continue;
            }
            let literal: String = chars[i..j].iter().collect();
            em.word(config.bin_label(parse_number(&literal)));
            if let Some(word) = suffix {
                em.word(word);
                j += 1;
            }
            i = j;
            continue;
        }

        match c {
            '%' => em.word("percent"),
            '?' => em.word(QUESTION_TOKEN),
            '!' => em.word(EXCLAMATION_TOKEN),
            _ if is_word_char(c) => {
                // Copy the whole word so digits inside it are not revisited.
                let mut j = i;
                while j < n && is_word_char(chars[j]) {
                    em.char(chars[j]);
                    j += 1;
                }
                i = j;
                continue;
            }
            _ => em.char(c),
        }
        i += 1;
    }
    em.out
}

fn emoticon_at(chars: &[char], at: usize) -> Option<usize> {
    EMOTICONS
        .iter()
        .filter(|e| {
            e.chars()
                .enumerate()
                .all(|(k, ec)| chars.get(at + k).is_some_and(|c| c.to_ascii_lowercase() == ec))
        })
        .map(|e| e.chars().count())
        .find(|&len| !chars.get(at + len).copied().is_some_and(char::is_alphanumeric))
}

/// Splits one whitespace-free chunk into raw (not yet lowercased) tokens.
fn split_chunk(chunk: &str, bins: &[NumberBin], out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().map(|c| if c == '\u{2019}' { '\'' } else { c }).collect();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let prev_word = i > 0 && is_word_char(chars[i - 1]);
        if let Some(len) = emoticon_at(&chars, i) {
            out.push(chars[i..i + len].iter().collect());
            i += len;
            continue;
        }
        if !prev_word {
            if let Some(len) = label_at(&chars, i, bins) {
                out.push(chars[i..i + len].iter().collect());
                i += len;
                continue;
            }
        }
        let c = chars[i];
        if c == '#' && chars.get(i + 1).copied().is_some_and(is_word_char) {
            let mut j = i + 1;
            while j < n && is_word_char(chars[j]) {
                j += 1;
            }
            out.push(chars[i..j].iter().collect());
            i = j;
            continue;
        }
        if is_word_char(c) {
            let mut j = i;
            loop {
                while j < n && is_word_char(chars[j]) {
                    j += 1;
                }
                if j + 1 < n && chars[j] == '\'' && is_word_char(chars[j + 1]) {
                    j += 1;
                } else {
                    break;
                }
            }
            let mut word: String = chars[i..j].iter().collect();
            if word.len() > 2 && word.ends_with("'s") {
                word.truncate(word.len() - 2);
            }
            out.push(word);
            i = j;
            continue;
        }
        // Punctuation or symbol: dropped.
        i += 1;
    }
}

/// Splits normalized text into lowercase tokens, dropping punctuation and,
/// when enabled, stopwords.
pub fn tokenize(text: &str, config: &NormalizationConfig) -> TokenizedDocument {
    let mut raw = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &config.number_bins, &mut raw);
    }
    let tokens = raw
        .into_iter()
        .map(|t| t.to_lowercase())
        .filter(|t| !(config.remove_stopwords && config.stopwords.contains(t)))
        .collect();
    TokenizedDocument::new(tokens)
}

/// The full normalization pipeline.
pub fn preprocess(text: &str, config: &NormalizationConfig) -> TokenizedDocument {
    tokenize(&map_numbers_and_signs(&obfuscate(text, config), config), config)
}

/// [`preprocess`] on raw bytes, rejecting invalid UTF-8.
pub fn preprocess_bytes(bytes: &[u8], config: &NormalizationConfig) -> Result<TokenizedDocument, TextError> {
    Ok(preprocess(decode_utf8(bytes)?, config))
}

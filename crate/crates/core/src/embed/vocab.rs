use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::textprep::TokenizedDocument;

/// Token index with corpus frequencies.
///
/// Indices are dense, ordered by descending frequency with ties broken by
/// token, so two vocabularies built from the same counts are identical.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    index_to_token: Vec<String>,
    frequency: Vec<u64>,
    token_to_index: HashMap<String, usize>,
    min_count: u64,
    total_tokens: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    frequency: Vec<u64>,
    min_count: u64,
    total_tokens: u64,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let token_to_index = r
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            index_to_token: r.tokens,
            frequency: r.frequency,
            token_to_index,
            min_count: r.min_count,
            total_tokens: r.total_tokens,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            tokens: v.index_to_token,
            frequency: v.frequency,
            min_count: v.min_count,
            total_tokens: v.total_tokens,
        }
    }
}

impl Vocabulary {
    /// Keeps every entry of `counts` occurring at least `min_count` times.
    pub fn from_counts(counts: HashMap<String, u64>, min_count: u64) -> Self {
        let mut kept: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total_tokens = kept.iter().map(|(_, c)| c).sum();
        let (index_to_token, frequency): (Vec<String>, Vec<u64>) = kept.into_iter().unzip();
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            index_to_token,
            frequency,
            token_to_index,
            min_count,
            total_tokens,
        }
    }

    /// A vocabulary over `tokens` in the given order, each with frequency 1.
    /// Used when the original counts are unknown, e.g. for loaded embeddings.
    pub fn from_ordered_tokens(tokens: Vec<String>) -> Self {
        let frequency = vec![1; tokens.len()];
        let token_to_index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            total_tokens: tokens.len() as u64,
            index_to_token: tokens,
            frequency,
            token_to_index,
            min_count: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_index.contains_key(token)
    }

    pub fn token(&self, index: usize) -> &str {
        &self.index_to_token[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequency[index]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequency
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Number of corpus occurrences of kept tokens.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// Counts tokens over `corpus` and prunes those seen fewer than `min_count` times.
pub fn build_vocabulary<'a, I>(corpus: I, min_count: u64) -> Result<Vocabulary, EmbedError>
where
    I: IntoIterator<Item = &'a TokenizedDocument>,
{
    if min_count == 0 {
        return Err(EmbedError::InvalidMinCount);
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in corpus {
        for token in &doc.tokens {
            *counts.entry(token.clone()).or_default() += 1;
        }
    }
    Ok(Vocabulary::from_counts(counts, min_count))
}

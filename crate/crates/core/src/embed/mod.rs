//! Skip-gram word embeddings with negative sampling.
//!
//! [`train_skipgram`] learns an [`EmbeddingMatrix`] from preprocessed text;
//! the matrix answers nearest-neighbour and analogy queries and is stored in
//! the plain-text `"<V> <d>"` format handled by [`save_embeddings`] and
//! [`load_embeddings`].

mod io;
mod matrix;
mod sampler;
mod skipgram;
mod vocab;

use std::path::PathBuf;

use thiserror::Error;

pub use io::{load_embeddings, read_embeddings, save_embeddings, write_embeddings};
pub use matrix::{cosine, EmbeddingMatrix};
pub use sampler::{sample_negative, NegativeSampler};
pub use skipgram::{
    negative_sampling_loss, train_skipgram, PairGradient, SkipgramConfig, TrainedEmbeddings,
};
pub use vocab::{build_vocabulary, Vocabulary};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("invalid skip-gram configuration: {0}")]
    InvalidConfig(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("corpus is degenerate: {types} word type(s) survive pruning, at least 2 are needed")]
    DegenerateCorpus { types: usize },
    #[error("training diverged in epoch {epoch} (non-finite loss)")]
    Divergence { epoch: usize },
    #[error("{0:?} is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

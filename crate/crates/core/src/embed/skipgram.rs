use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_vocabulary, EmbedError, EmbeddingMatrix, NegativeSampler};
use crate::textprep::TokenizedDocument;

/// Hyperparameters for skip-gram training with negative sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramConfig {
    pub dimensions: usize,
    /// Context words on each side of the centre word.
    pub window: usize,
    /// Negative samples per positive (centre, context) pair.
    pub negatives: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub seed: u64,
    pub unigram_power: f64,
    /// Worker threads. More than one gives lock-free, non-deterministic updates.
    pub threads: usize,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        Self {
            dimensions: 50,
            window: 5,
            negatives: 25,
            min_count: 5,
            epochs: 5,
            initial_learning_rate: 0.025,
            seed: 1,
            unigram_power: 0.75,
            threads: 1,
        }
    }
}

impl SkipgramConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |msg: &str| Err(EmbedError::InvalidConfig(msg.to_string()));
        if self.dimensions == 0 {
            return bad("dimensions must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.min_count == 0 {
            return Err(EmbedError::InvalidMinCount);
        }
        if !(self.initial_learning_rate > 0.0 && self.initial_learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !self.unigram_power.is_finite() {
            return bad("unigram power must be finite");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }
}

/// Result of [`train_skipgram`].
#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    pub embeddings: EmbeddingMatrix,
    /// Output (context) vectors, row-major V×d. Only needed during training.
    pub context_vectors: Vec<f64>,
    /// Mean per-pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Loss and gradients of one (centre, context, negatives) example.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Loss contribution of one score `s = u·v` and its derivative with respect to `s`.
/// Positive pairs contribute `-ln σ(s)`, negatives `-ln σ(-s)`.
#[inline]
fn score_term(s: f64, positive: bool) -> (f64, f64) {
    if positive {
        (softplus(-s), sigmoid(s) - 1.0)
    } else {
        (softplus(s), sigmoid(s))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss `-ln σ(u·v) - Σ ln σ(-u_i·v)` for centre vector `v`,
/// context vector `u` and negative context vectors `u_i`, with its gradients.
pub fn negative_sampling_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let (mut loss, g) = score_term(dot(context, center), true);
    let mut grad_center: Vec<f64> = context.iter().map(|u| g * u).collect();
    let grad_context = center.iter().map(|v| g * v).collect();
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for &neg in negatives {
        let (l, g) = score_term(dot(neg, center), false);
        loss += l;
        for (gc, u) in grad_center.iter_mut().zip(neg) {
            *gc += g * u;
        }
        grad_negatives.push(center.iter().map(|v| g * v).collect());
    }
    PairGradient {
        loss,
        center: grad_center,
        context: grad_context,
        negatives: grad_negatives,
    }
}

/// Row-major parameter matrix shared between workers. Relaxed atomic access
/// gives unsynchronized last-write-wins updates without data races.
struct SharedMatrix {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl SharedMatrix {
    fn from_values(values: Vec<f64>, dim: usize) -> Self {
        Self {
            data: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
            dim,
        }
    }

    #[inline]
    fn load_row(&self, row: usize, out: &mut [f64]) {
        let start = row * self.dim;
        for (o, cell) in out.iter_mut().zip(&self.data[start..start + self.dim]) {
            *o = f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn dot_row(&self, row: usize, v: &[f64]) -> f64 {
        let start = row * self.dim;
        self.data[start..start + self.dim]
            .iter()
            .zip(v)
            .map(|(cell, x)| f64::from_bits(cell.load(Ordering::Relaxed)) * x)
            .sum()
    }

    /// `row += scale * v`, also accumulating `g * row_old` into `acc`.
    #[inline]
    fn axpy_row(&self, row: usize, scale: f64, v: &[f64], g: f64, acc: &mut [f64]) {
        let start = row * self.dim;
        for ((cell, x), a) in self.data[start..start + self.dim].iter().zip(v).zip(acc.iter_mut()) {
            let old = f64::from_bits(cell.load(Ordering::Relaxed));
            *a += g * old;
            cell.store((old + scale * x).to_bits(), Ordering::Relaxed);
        }
    }

    #[inline]
    fn add_row(&self, row: usize, scale: f64, v: &[f64]) {
        let start = row * self.dim;
        for (cell, x) in self.data[start..start + self.dim].iter().zip(v) {
            let old = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((old + scale * x).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_values(self) -> Vec<f64> {
        self.data.into_iter().map(|c| f64::from_bits(c.into_inner())).collect()
    }
}

struct TrainState<'a> {
    input: &'a SharedMatrix,
    output: &'a SharedMatrix,
    sampler: &'a NegativeSampler,
    config: &'a SkipgramConfig,
    processed: &'a AtomicU64,
    planned: u64,
}

impl TrainState<'_> {
    fn learning_rate(&self) -> f64 {
        let progress = self.processed.load(Ordering::Relaxed) as f64 / self.planned.max(1) as f64;
        let floor = 1e-4;
        self.config.initial_learning_rate * (1.0 - (1.0 - floor) * progress.min(1.0))
    }

    /// Trains on `docs`; returns (summed pair loss, pair count).
    fn run(&self, docs: &[Vec<usize>], rng: &mut ChaCha8Rng) -> (f64, u64) {
        let dim = self.config.dimensions;
        let window = self.config.window;
        let mut center = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for doc in docs {
            let lr = self.learning_rate();
            for (t, &w) in doc.iter().enumerate() {
                let lo = t.saturating_sub(window);
                let hi = (t + window).min(doc.len() - 1);
                for (j, &ctx) in doc.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == t {
                        continue;
                    }
                    self.input.load_row(w, &mut center);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let (l, g) = score_term(self.output.dot_row(ctx, &center), true);
                    loss_sum += l;
                    self.output.axpy_row(ctx, -lr * g, &center, g, &mut grad);
                    for _ in 0..self.config.negatives {
                        let neg = self.sampler.sample(rng);
                        if neg == ctx {
                            continue;
                        }
                        let (l, g) = score_term(self.output.dot_row(neg, &center), false);
                        loss_sum += l;
                        self.output.axpy_row(neg, -lr * g, &center, g, &mut grad);
                    }
                    self.input.add_row(w, -lr, &grad);
                    pairs += 1;
                }
            }
            self.processed.fetch_add(doc.len() as u64, Ordering::Relaxed);
        }
        (loss_sum, pairs)
    }
}

fn epoch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Trains skip-gram embeddings with negative sampling by SGD.
///
/// Input vectors start uniform in `[-0.5/d, 0.5/d]` and context vectors at
/// zero. The learning rate decays linearly to `1e-4` of its initial value over
/// all planned centre-word updates. With `threads == 1` the result depends only
/// on the corpus and the seed.
pub fn train_skipgram(
    corpus: &[TokenizedDocument],
    config: &SkipgramConfig,
) -> Result<TrainedEmbeddings, EmbedError> {
    config.validate()?;
    let vocabulary = build_vocabulary(corpus, config.min_count)?;
    if vocabulary.len() < 2 {
        return Err(EmbedError::DegenerateCorpus {
            types: vocabulary.len(),
        });
    }
    let sampler = NegativeSampler::new(&vocabulary, config.unigram_power)?;
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocabulary.index(t)).collect::<Vec<_>>())
        .filter(|d| d.len() > 1)
        .collect();

    let dim = config.dimensions;
    let v = vocabulary.len();
    let mut init_rng = epoch_rng(config.seed, 0);
    let bound = 0.5 / dim as f64;
    let initial: Vec<f64> = (0..v * dim).map(|_| init_rng.random_range(-bound..bound)).collect();
    let input = SharedMatrix::from_values(initial, dim);
    let output = SharedMatrix::from_values(vec![0.0; v * dim], dim);

    let words: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let processed = AtomicU64::new(0);
    let state = TrainState {
        input: &input,
        output: &output,
        sampler: &sampler,
        config,
        processed: &processed,
        planned: words * config.epochs as u64,
    };

    let threads = config.threads.min(docs.len().max(1));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, pairs) = if threads == 1 {
            let mut rng = epoch_rng(config.seed, 1 + epoch as u64);
            state.run(&docs, &mut rng)
        } else {
            let chunk = docs.len().div_ceil(threads);
            std::thread::scope(|scope| {
                let handles: Vec<_> = docs
                    .chunks(chunk)
                    .enumerate()
                    .map(|(t, part)| {
                        let state = &state;
                        let stream = 1 + (epoch * threads + t) as u64;
                        scope.spawn(move || state.run(part, &mut epoch_rng(config.seed, stream)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .fold((0.0, 0), |(l, p), (l2, p2)| (l + l2, p + p2))
            })
        };
        let mean = loss / pairs.max(1) as f64;
        if !mean.is_finite() {
            return Err(EmbedError::Divergence { epoch });
        }
        log::debug!("skip-gram epoch {epoch}: mean loss {mean:.6} over {pairs} pairs");
        epoch_losses.push(mean);
    }

    let embeddings = EmbeddingMatrix::new(vocabulary, dim, input.into_values())?;
    Ok(TrainedEmbeddings {
        embeddings,
        context_vectors: output.into_values(),
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(words: &[&str]) -> TokenizedDocument {
        words.iter().copied().collect()
    }

    fn small_config() -> SkipgramConfig {
        SkipgramConfig {
            dimensions: 10,
            window: 2,
            negatives: 3,
            min_count: 1,
            epochs: 3,
            ..SkipgramConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let corpus = vec![sentence(&["a", "b", "c"]); 3];
        let config = SkipgramConfig {
            epochs: 0,
            ..small_config()
        };
        let trained = train_skipgram(&corpus, &config).unwrap();
        let bound = 0.5 / 10.0;
        assert!(trained.embeddings.vectors().iter().all(|x| x.abs() <= bound));
        assert!(trained.context_vectors.iter().all(|&x| x == 0.0));
        assert!(trained.epoch_losses.is_empty());

        let mut rng = epoch_rng(config.seed, 0);
        let expected: Vec<f64> = (0..3 * 10).map(|_| rng.random_range(-bound..bound)).collect();
        assert_eq!(trained.embeddings.vectors(), expected.as_slice());
    }

    #[test]
    fn single_type_corpus_is_degenerate() {
        let corpus = vec![sentence(&["a", "a"])];
        let err = train_skipgram(&corpus, &small_config()).unwrap_err();
        assert!(matches!(err, EmbedError::DegenerateCorpus { types: 1 }));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let corpus = vec![sentence(&["a", "b"])];
        let config = SkipgramConfig {
            window: 0,
            ..small_config()
        };
        assert!(matches!(train_skipgram(&corpus, &config), Err(EmbedError::InvalidConfig(_))));
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let corpus = vec![sentence(&["a", "b", "c", "d"]); 50];
        let config = SkipgramConfig {
            initial_learning_rate: 1e300,
            ..small_config()
        };
        assert!(matches!(train_skipgram(&corpus, &config), Err(EmbedError::Divergence { .. })));
    }

    #[test]
    fn initial_loss_is_log_two_per_sample() {
        // Zero context vectors make every score 0, so each term costs ln 2.
        let g = negative_sampling_loss(&[0.1, 0.2], &[0.0, 0.0], &[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!((g.loss - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn default_settings_reduce_loss_on_repeated_sentence() {
        let s = sentence(&[
            "_company_", "shares", "rally", "after", "strong", "earnings", "beat", "bullish", "outlook",
        ]);
        let corpus = vec![s; 20];
        let config = SkipgramConfig {
            dimensions: 50,
            window: 5,
            negatives: 25,
            min_count: 5,
            epochs: 5,
            ..SkipgramConfig::default()
        };
        let trained = train_skipgram(&corpus, &config).unwrap();
        let losses = &trained.epoch_losses;
        assert!(losses.last().unwrap() < losses.first().unwrap(), "{losses:?}");
    }

    #[test]
    fn single_thread_training_is_bit_reproducible() {
        let corpus: Vec<_> = (0..40)
            .map(|i| sentence(&["w1", "w2", if i % 2 == 0 { "w3" } else { "w4" }, "w5"]))
            .collect();
        let a = train_skipgram(&corpus, &small_config()).unwrap();
        let b = train_skipgram(&corpus, &small_config()).unwrap();
        assert_eq!(a.embeddings.vectors(), b.embeddings.vectors());
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn parallel_training_runs() {
        let corpus: Vec<_> = (0..200).map(|_| sentence(&["a", "b", "c", "d", "e"])).collect();
        let config = SkipgramConfig {
            threads: 4,
            ..small_config()
        };
        let trained = train_skipgram(&corpus, &config).unwrap();
        assert!(trained.embeddings.vectors().iter().all(|x| x.is_finite()));
        assert_eq!(trained.epoch_losses.len(), 3);
    }
}

use rand::Rng;

use super::{EmbedError, Vocabulary};

/// Draws word indices with probability proportional to `frequency^power`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(vocabulary: &Vocabulary, power: f64) -> Result<Self, EmbedError> {
        Self::from_frequencies(vocabulary.frequencies(), power)
    }

    pub fn from_frequencies(frequencies: &[u64], power: f64) -> Result<Self, EmbedError> {
        if frequencies.is_empty() {
            return Err(EmbedError::EmptyVocabulary);
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = frequencies
            .iter()
            .map(|&f| {
                acc += (f as f64).powf(power);
                acc
            })
            .collect();
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(EmbedError::EmptyVocabulary);
        }
        Ok(Self { cumulative })
    }

    /// Probability of drawing `index`.
    pub fn probability(&self, index: usize) -> f64 {
        let total = self.cumulative[self.cumulative.len() - 1];
        let below = if index == 0 { 0.0 } else { self.cumulative[index - 1] };
        (self.cumulative[index] - below) / total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// One draw from the smoothed unigram distribution of `vocabulary`.
pub fn sample_negative<R: Rng + ?Sized>(
    vocabulary: &Vocabulary,
    power: f64,
    rng: &mut R,
) -> Result<usize, EmbedError> {
    Ok(NegativeSampler::new(vocabulary, power)?.sample(rng))
}

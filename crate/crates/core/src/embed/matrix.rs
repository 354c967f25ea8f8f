use super::{EmbedError, Vocabulary};

/// Learned word vectors, one row per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocabulary: Vocabulary,
    dim: usize,
    vectors: Vec<f64>,
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    ab / (aa.sqrt() * bb.sqrt())
}

impl EmbeddingMatrix {
    /// `vectors` is row-major `vocabulary.len() × dim`.
    pub fn new(vocabulary: Vocabulary, dim: usize, vectors: Vec<f64>) -> Result<Self, EmbedError> {
        if vectors.len() != vocabulary.len() * dim {
            return Err(EmbedError::InvalidConfig(format!(
                "{} values do not form a {}x{dim} matrix",
                vectors.len(),
                vocabulary.len()
            )));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::InvalidConfig("embedding values must be finite".into()));
        }
        Ok(Self {
            vocabulary,
            dim,
            vectors,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.vocabulary.index(token).map(|i| self.row(i))
    }

    fn lookup(&self, token: &str) -> Result<usize, EmbedError> {
        self.vocabulary
            .index(token)
            .ok_or_else(|| EmbedError::OutOfVocabulary(token.to_string()))
    }

    /// Ranks all rows except `exclude` by cosine to `target`, best first.
    /// Ties keep vocabulary order.
    pub fn rank_by_vector(
        &self,
        target: &[f64],
        exclude: &[usize],
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, EmbedError> {
        if top_k == 0 {
            return Err(EmbedError::InvalidTopK);
        }
        let mut scored: Vec<(usize, f64)> = (0..self.len())
            .filter(|i| !exclude.contains(i))
            .map(|i| (i, cosine(target, self.row(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(top_k);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.vocabulary.token(i).to_string(), s))
            .collect())
    }

    /// The `top_k` nearest words to `query`, excluding the query itself.
    pub fn most_similar(&self, query: &str, top_k: usize) -> Result<Vec<(String, f64)>, EmbedError> {
        let q = self.lookup(query)?;
        self.rank_by_vector(self.row(q), &[q], top_k)
    }

    /// Words closest to `vector(a) - vector(b) + vector(c)`, excluding the inputs.
    pub fn analogy(
        &self,
        a: &str,
        b: &str,
        c: &str,
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, EmbedError> {
        let (ia, ib, ic) = (self.lookup(a)?, self.lookup(b)?, self.lookup(c)?);
        let target: Vec<f64> = self
            .row(ia)
            .iter()
            .zip(self.row(ib))
            .zip(self.row(ic))
            .map(|((x, y), z)| x - y + z)
            .collect();
        self.rank_by_vector(&target, &[ia, ib, ic], top_k)
    }
}

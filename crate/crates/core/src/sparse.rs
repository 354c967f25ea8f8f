//! Sparse feature rows shared by the featurizer and the regressors.

use serde::{Deserialize, Serialize};

/// Non-zero entries of one feature row, sorted by strictly increasing index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow(Vec<(usize, f64)>);

impl SparseRow {
    /// Builds a row from arbitrary entries: sorts, sums duplicates and drops zeros.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|&(_, v)| v != 0.0);
        Self(out)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self(
            values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    /// Value at `index` (zero when absent).
    pub fn get(&self, index: usize) -> f64 {
        match self.0.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.0[pos].1,
            Err(_) => 0.0,
        }
    }

    /// One past the largest stored index, or 0 for an empty row.
    pub fn min_dim(&self) -> usize {
        self.0.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.0.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.0 {
            out[i] = v;
        }
        out
    }
}

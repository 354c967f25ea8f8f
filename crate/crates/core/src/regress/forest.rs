//! Random forest of variance-reduction regression trees over sparse rows.
//!
//! Splits are searched per node over the features that are non-zero in at
//! least one of the node's samples; absent features are constant zero and
//! cannot split. Drawing `features_per_split` candidates from all `D`
//! features is simulated by drawing how many of them land among the present
//! features (hypergeometric) and then which ones.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, stream_rng, RegressError, TrainingSet};
use crate::sparse::SparseRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means ⌈D/3⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 200,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            seed: 1,
        }
    }
}

impl ForestParams {
    fn validate(&self) -> Result<(), RegressError> {
        if self.trees == 0 {
            return Err(RegressError::InvalidParams("trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(RegressError::InvalidParams("min_samples_leaf must be at least 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(RegressError::InvalidParams("features_per_split must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_features_per_split(&self, dim: usize) -> usize {
        self.features_per_split.unwrap_or_else(|| dim.div_ceil(3)).clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, row: &SparseRow) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row.get(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Split { .. } => None,
        })
    }

    fn validate(&self, dim: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Leaf { value } if !value.is_finite() => return Err(format!("node {i}: non-finite leaf")),
                Node::Split {
                    feature, left, right, ..
                } if feature >= dim || left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() => {
                    return Err(format!("node {i}: invalid split"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<Tree>,
    params: ForestParams,
    dim: usize,
}

impl ForestModel {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean of the tree predictions.
    pub fn predict_raw(&self, row: &SparseRow) -> f64 {
        let first = self.trees[0].predict(row);
        let (mut sum, mut same) = (first, true);
        for t in &self.trees[1..] {
            let p = t.predict(row);
            same &= p == first;
            sum += p;
        }
        // Identical trees must reproduce their value exactly, not up to rounding.
        if same {
            first
        } else {
            sum / self.trees.len() as f64
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.trees.is_empty() {
            return Err("forest has no trees".into());
        }
        self.trees.iter().try_for_each(|t| t.validate(self.dim))
    }
}

pub fn train_random_forest(data: &TrainingSet, params: &ForestParams) -> Result<ForestModel, RegressError> {
    params.validate()?;
    check_dim(data)?;
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(params.seed, t as u64);
            let n = data.len();
            let samples: Vec<u32> = if params.bootstrap {
                let mut s: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
                s.sort_unstable();
                s
            } else {
                (0..n as u32).collect()
            };
            TreeBuilder::new(data, params, rng).build(samples)
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: params.clone(),
        dim: data.dim(),
    })
}

struct TreeBuilder<'a, R> {
    rows: &'a [SparseRow],
    targets: &'a [f64],
    dim: usize,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    rng: R,
    nodes: Vec<Node>,
    // Per-feature scratch: `stamp[f] == visit` marks f as seen in this node.
    stamp: Vec<u32>,
    slot: Vec<u32>,
    visit: u32,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    fn new(data: &'a TrainingSet, params: &ForestParams, rng: R) -> Self {
        Self {
            rows: data.rows(),
            targets: data.targets(),
            dim: data.dim(),
            max_depth: params.max_depth.unwrap_or(usize::MAX),
            min_leaf: params.min_samples_leaf,
            mtry: params.resolved_features_per_split(data.dim()),
            rng,
            nodes: Vec::new(),
            stamp: vec![0; data.dim()],
            slot: vec![0; data.dim()],
            visit: 0,
        }
    }

    fn build(mut self, samples: Vec<u32>) -> Tree {
        self.grow(samples, 0);
        Tree { nodes: self.nodes }
    }

    fn grow(&mut self, samples: Vec<u32>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let first = self.targets[samples[0] as usize];
        let uniform = samples.iter().all(|&s| self.targets[s as usize] == first);
        let value = if uniform {
            first
        } else {
            samples.iter().map(|&s| self.targets[s as usize]).sum::<f64>() / samples.len() as f64
        };
        let splittable = !uniform && depth < self.max_depth && samples.len() >= 2 * self.min_leaf;
        let best = if splittable { self.best_split(&samples) } else { None };
        let Some(best) = best else {
            self.nodes[id] = Node::Leaf { value };
            return id;
        };
        let (left, right): (Vec<u32>, Vec<u32>) = samples
            .iter()
            .partition(|&&s| self.rows[s as usize].get(best.feature) <= best.threshold);
        drop(samples);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn next_visit(&mut self) -> u32 {
        self.visit = self.visit.wrapping_add(1);
        if self.visit == 0 {
            self.stamp.fill(0);
            self.visit = 1;
        }
        self.visit
    }

    fn candidates(&mut self, samples: &[u32]) -> Vec<usize> {
        let visit = self.next_visit();
        let mut present = Vec::new();
        for &s in samples {
            for &(f, _) in self.rows[s as usize].entries() {
                if self.stamp[f] != visit {
                    self.stamp[f] = visit;
                    present.push(f);
                }
            }
        }
        present.sort_unstable();
        if self.mtry >= self.dim || present.is_empty() {
            return present;
        }
        let hits = Hypergeometric::new(self.dim as u64, present.len() as u64, self.mtry as u64)
            .expect("valid hypergeometric parameters")
            .sample(&mut self.rng) as usize;
        let mut chosen: Vec<usize> = sample_indices(&mut self.rng, present.len(), hits)
            .into_iter()
            .map(|i| present[i])
            .collect();
        chosen.sort_unstable();
        chosen
    }

    fn best_split(&mut self, samples: &[u32]) -> Option<BestSplit> {
        let candidates = self.candidates(samples);
        if candidates.is_empty() {
            return None;
        }
        let visit = self.next_visit();
        for (j, &f) in candidates.iter().enumerate() {
            self.stamp[f] = visit;
            self.slot[f] = j as u32;
        }
        // (value, target) of the non-zero entries of each candidate.
        let mut buckets: Vec<Vec<(f64, f64)>> = vec![Vec::new(); candidates.len()];
        for &s in samples {
            let y = self.targets[s as usize];
            for &(f, v) in self.rows[s as usize].entries() {
                if self.stamp[f] == visit {
                    buckets[self.slot[f] as usize].push((v, y));
                }
            }
        }
        let n = samples.len();
        let total: f64 = samples.iter().map(|&s| self.targets[s as usize]).sum();
        let mut best: Option<BestSplit> = None;
        let mut groups: Vec<(f64, usize, f64)> = Vec::new();
        for (j, bucket) in buckets.iter_mut().enumerate() {
            bucket.sort_by(|a, b| a.0.total_cmp(&b.0));
            group_values(bucket, n, total, &mut groups);
            scan_groups(&groups, n, total, self.min_leaf, candidates[j], &mut best);
        }
        best
    }
}

/// Collapses sorted non-zero entries plus the implicit zeros into
/// `(value, count, target sum)` groups in ascending value order.
fn group_values(bucket: &[(f64, f64)], n: usize, total: f64, groups: &mut Vec<(f64, usize, f64)>) {
    groups.clear();
    let zeros = n - bucket.len();
    let zero_sum = total - bucket.iter().map(|e| e.1).sum::<f64>();
    let mut zero_pending = zeros > 0;
    for &(v, y) in bucket {
        if zero_pending && v > 0.0 {
            groups.push((0.0, zeros, zero_sum));
            zero_pending = false;
        }
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                g.1 += 1;
                g.2 += y;
            }
            _ => groups.push((v, 1, y)),
        }
    }
    if zero_pending {
        groups.push((0.0, zeros, zero_sum));
    }
}

fn scan_groups(
    groups: &[(f64, usize, f64)],
    n: usize,
    total: f64,
    min_leaf: usize,
    feature: usize,
    best: &mut Option<BestSplit>,
) {
    let (mut nl, mut sl) = (0usize, 0.0f64);
    for w in groups.windows(2) {
        nl += w[0].1;
        sl += w[0].2;
        let nr = n - nl;
        if nl < min_leaf {
            continue;
        }
        if nr < min_leaf {
            break;
        }
        let sr = total - sl;
        let score = sl * sl / nl as f64 + sr * sr / nr as f64;
        if best.as_ref().is_none_or(|b| score > b.score) {
            let (a, b) = (w[0].0, w[1].0);
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            *best = Some(BestSplit {
                feature,
                threshold,
                score,
            });
        }
    }
}

//! One-hidden-layer tanh network with a linear output, trained on squared
//! error by minibatch SGD with momentum.
//!
//! Momentum for input rows that a batch does not touch is applied lazily:
//! after `k` idle steps the weight has moved by `v·μ(1−μᵏ)/(1−μ)` and the
//! velocity decayed to `v·μᵏ`, which is settled when the row is next used.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, stream_rng, RegressError, TrainingSet};
use crate::sparse::SparseRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 100,
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Input-major: the weights of input `i` are `[i*hidden, (i+1)*hidden)`.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub hidden: usize,
}

impl MlpModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            hidden_weights: vec![0.0; input_dim * hidden],
            hidden_bias: vec![0.0; hidden],
            output_weights: vec![0.0; hidden],
            output_bias: 0.0,
            hidden,
        }
    }

    /// Glorot-uniform hidden weights; everything else zero.
    pub fn init<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(input_dim, hidden);
        let limit = (6.0 / (input_dim + hidden) as f64).sqrt();
        m.hidden_weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
        m
    }

    pub fn input_dim(&self) -> usize {
        self.hidden_weights.len().checked_div(self.hidden).unwrap_or(0)
    }

    fn hidden_activations(&self, row: &SparseRow, z: &mut [f64]) {
        let h = self.hidden;
        z.copy_from_slice(&self.hidden_bias);
        for &(i, x) in row.entries() {
            let w = &self.hidden_weights[i * h..(i + 1) * h];
            z.iter_mut().zip(w).for_each(|(a, &wij)| *a += x * wij);
        }
        z.iter_mut().for_each(|a| *a = a.tanh());
    }

    fn output(&self, z: &[f64]) -> f64 {
        self.output_bias + z.iter().zip(&self.output_weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict_raw(&self, row: &SparseRow) -> f64 {
        let mut z = vec![0.0; self.hidden];
        self.hidden_activations(row, &mut z);
        self.output(&z)
    }

    pub fn mse(&self, rows: &[SparseRow], targets: &[f64]) -> f64 {
        let mut z = vec![0.0; self.hidden];
        let sum: f64 = rows
            .iter()
            .zip(targets)
            .map(|(r, &y)| {
                self.hidden_activations(r, &mut z);
                (self.output(&z) - y).powi(2)
            })
            .sum();
        sum / rows.len() as f64
    }

    pub fn num_params(&self) -> usize {
        self.hidden_weights.len() + 2 * self.hidden + 1
    }

    /// Parameters in the order hidden weights, hidden bias, output weights, output bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend_from_slice(&self.hidden_weights);
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) -> Result<(), RegressError> {
        if p.len() != self.num_params() {
            return Err(RegressError::Dimension {
                expected: self.num_params(),
                found: p.len(),
            });
        }
        let (w1, rest) = p.split_at(self.hidden_weights.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        self.hidden_weights.copy_from_slice(w1);
        self.hidden_bias.copy_from_slice(b1);
        self.output_weights.copy_from_slice(w2);
        self.output_bias = b2[0];
        Ok(())
    }

    /// Mean squared error over the rows and its gradient in [`flat_params`](Self::flat_params) order.
    pub fn loss_and_gradient(&self, rows: &[SparseRow], targets: &[f64]) -> (f64, Vec<f64>) {
        let h = self.hidden;
        let nw1 = self.hidden_weights.len();
        let mut grad = vec![0.0; self.num_params()];
        let mut z = vec![0.0; h];
        let scale = 2.0 / rows.len() as f64;
        let mut loss = 0.0;
        for (row, &y) in rows.iter().zip(targets) {
            self.hidden_activations(row, &mut z);
            let r = self.output(&z) - y;
            loss += r * r;
            let d = scale * r;
            for j in 0..h {
                let delta = d * self.output_weights[j] * (1.0 - z[j] * z[j]);
                grad[nw1 + j] += delta;
                grad[nw1 + h + j] += d * z[j];
                for &(i, x) in row.entries() {
                    grad[i * h + j] += x * delta;
                }
            }
            grad[nw1 + 2 * h] += d;
        }
        (loss / rows.len() as f64, grad)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.hidden == 0
            || self.hidden_bias.len() != self.hidden
            || self.output_weights.len() != self.hidden
            || !self.hidden_weights.len().is_multiple_of(self.hidden)
        {
            return Err("inconsistent network shapes".into());
        }
        if !self.flat_params().iter().all(|p| p.is_finite()) {
            return Err("non-finite network parameter".into());
        }
        Ok(())
    }
}

struct Momentum {
    mu: f64,
    lr: f64,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    /// Step after which each input row's weights were last brought up to date.
    synced: Vec<u64>,
    step: u64,
}

impl Momentum {
    fn new(model: &MlpModel, mu: f64, lr: f64) -> Self {
        Self {
            mu,
            lr,
            w1: vec![0.0; model.hidden_weights.len()],
            b1: vec![0.0; model.hidden],
            w2: vec![0.0; model.hidden],
            b2: 0.0,
            synced: vec![0; model.input_dim()],
            step: 0,
        }
    }

    /// Applies the momentum-only steps row `i` missed since it was last synced.
    fn catch_up(&mut self, model: &mut MlpModel, i: usize, upto: u64) {
        let idle = upto - self.synced[i];
        if idle == 0 {
            return;
        }
        let h = model.hidden;
        let decay = self.mu.powi(idle.min(i32::MAX as u64) as i32);
        let moved = if self.mu == 0.0 {
            0.0
        } else {
            self.mu * (1.0 - decay) / (1.0 - self.mu)
        };
        let v = &mut self.w1[i * h..(i + 1) * h];
        let w = &mut model.hidden_weights[i * h..(i + 1) * h];
        for (wj, vj) in w.iter_mut().zip(v.iter_mut()) {
            *wj += *vj * moved;
            *vj *= decay;
        }
        self.synced[i] = upto;
    }

    fn flush(&mut self, model: &mut MlpModel) {
        for i in 0..self.synced.len() {
            self.catch_up(model, i, self.step);
        }
    }
}

pub fn train_mlp(data: &TrainingSet, params: &MlpParams) -> Result<MlpModel, RegressError> {
    if params.hidden == 0 {
        return Err(RegressError::InvalidParams("hidden must be at least 1".into()));
    }
    if params.batch_size == 0 {
        return Err(RegressError::InvalidParams("batch_size must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(RegressError::InvalidParams("learning_rate must be finite and > 0".into()));
    }
    if !(0.0..1.0).contains(&params.momentum) {
        return Err(RegressError::InvalidParams("momentum must be in [0, 1)".into()));
    }
    check_dim(data)?;
    let (rows, targets) = (data.rows(), data.targets());
    let n = data.len();
    let h = params.hidden;
    let lr = params.learning_rate;
    let diverged = |epoch| RegressError::Divergence {
        epoch,
        learning_rate: lr,
    };

    let mut model = MlpModel::init(data.dim(), h, &mut stream_rng(params.seed, 0));
    let mut best = model.clone();
    let mut best_loss = model.mse(rows, targets);
    if !best_loss.is_finite() {
        return Err(diverged(0));
    }

    let mut mom = Momentum::new(&model, params.momentum, lr);
    let mut order: Vec<usize> = (0..n).collect();
    let mut z = vec![0.0; h];
    let mut g_w1 = vec![0.0; data.dim() * h];
    let mut touched_mark = vec![false; data.dim()];
    let mut touched: Vec<usize> = Vec::new();
    let mut g_b1 = vec![0.0; h];
    let mut g_w2 = vec![0.0; h];

    for epoch in 1..=params.epochs {
        order.shuffle(&mut stream_rng(params.seed, epoch as u64));
        for batch in order.chunks(params.batch_size) {
            g_b1.fill(0.0);
            g_w2.fill(0.0);
            let mut g_b2 = 0.0;
            let scale = 2.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            let step = mom.step;
            // Rows read by this batch must be current before the forward pass.
            for &s in batch {
                for &(i, _) in rows[s].entries() {
                    if !touched_mark[i] {
                        touched_mark[i] = true;
                        touched.push(i);
                        mom.catch_up(&mut model, i, step);
                    }
                }
            }
            for &s in batch {
                let row = &rows[s];
                model.hidden_activations(row, &mut z);
                let r = model.output(&z) - targets[s];
                batch_loss += r * r;
                let d = scale * r;
                g_b2 += d;
                for j in 0..h {
                    let delta = d * model.output_weights[j] * (1.0 - z[j] * z[j]);
                    g_b1[j] += delta;
                    g_w2[j] += d * z[j];
                    for &(i, x) in row.entries() {
                        g_w1[i * h + j] += x * delta;
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(diverged(epoch));
            }

            mom.step += 1;
            let (mu, lr) = (mom.mu, mom.lr);
            for &i in &touched {
                for j in i * h..(i + 1) * h {
                    mom.w1[j] = mu * mom.w1[j] - lr * g_w1[j];
                    model.hidden_weights[j] += mom.w1[j];
                    g_w1[j] = 0.0;
                }
                mom.synced[i] = mom.step;
                touched_mark[i] = false;
            }
            touched.clear();
            for j in 0..h {
                mom.b1[j] = mu * mom.b1[j] - lr * g_b1[j];
                model.hidden_bias[j] += mom.b1[j];
                mom.w2[j] = mu * mom.w2[j] - lr * g_w2[j];
                model.output_weights[j] += mom.w2[j];
            }
            mom.b2 = mu * mom.b2 - lr * g_b2;
            model.output_bias += mom.b2;
        }
        mom.flush(&mut model);
        let loss = model.mse(rows, targets);
        if !loss.is_finite() {
            return Err(diverged(epoch));
        }
        if loss < best_loss {
            best_loss = loss;
            best.clone_from(&model);
        }
    }
    Ok(best)
}

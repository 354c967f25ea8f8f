//! Linear epsilon-insensitive support vector regression trained by
//! stochastic subgradient descent on
//! `(1/N) Σ max(0, |w·x + b − y| − ε) + ‖w‖² / (2CN)`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_dim, stream_rng, RegressError, TrainingSet};
use crate::sparse::SparseRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub epsilon: f64,
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            c: 1.0,
            epochs: 100,
            learning_rate: 0.01,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl SvrModel {
    pub fn predict_raw(&self, row: &SparseRow) -> f64 {
        row.dot(&self.weights) + self.bias
    }

    pub fn objective(&self, data: &TrainingSet) -> f64 {
        objective(data, &self.weights, self.bias, self.epsilon, self.c)
    }
}

pub fn objective(data: &TrainingSet, w: &[f64], b: f64, epsilon: f64, c: f64) -> f64 {
    let n = data.len() as f64;
    let loss: f64 = data
        .rows()
        .iter()
        .zip(data.targets())
        .map(|(x, &y)| ((x.dot(w) + b - y).abs() - epsilon).max(0.0))
        .sum();
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    loss / n + norm2 / (2.0 * c * n)
}

pub fn train_svr(data: &TrainingSet, params: &SvrParams) -> Result<SvrModel, RegressError> {
    if !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
        return Err(RegressError::InvalidParams("epsilon must be finite and >= 0".into()));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(RegressError::InvalidParams("c must be finite and > 0".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(RegressError::InvalidParams("learning_rate must be finite and > 0".into()));
    }
    check_dim(data)?;
    let n = data.len();
    let lambda = 1.0 / (params.c * n as f64);
    let (eps, lr) = (params.epsilon, params.learning_rate);

    // w = scale · v keeps the shrink step O(1) on sparse rows.
    let mut v = vec![0.0; data.dim()];
    let mut scale = 1.0f64;
    let mut b = data.targets().iter().sum::<f64>() / n as f64;

    let mut best = SvrModel {
        weights: v.clone(),
        bias: b,
        epsilon: eps,
        c: params.c,
    };
    let mut best_obj = best.objective(data);
    if !best_obj.is_finite() {
        return Err(RegressError::Divergence {
            epoch: 0,
            learning_rate: lr,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for epoch in 1..=params.epochs {
        let mut rng = stream_rng(params.seed, epoch as u64);
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = lr / (1.0 + lr * lambda * t as f64);
            let x = &data.rows()[i];
            let r = scale * x.dot(&v) + b - data.targets()[i];
            let g = if r.abs() > eps { r.signum() } else { 0.0 };
            scale *= 1.0 - eta * lambda;
            if g != 0.0 {
                for &(j, xj) in x.entries() {
                    v[j] -= eta * g * xj / scale;
                }
                b -= eta * g;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|vj| *vj *= scale);
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|vj| vj * scale).collect();
        let obj = objective(data, &w, b, eps, params.c);
        if !obj.is_finite() {
            return Err(RegressError::Divergence {
                epoch,
                learning_rate: lr,
            });
        }
        if obj < best_obj {
            best_obj = obj;
            best = SvrModel {
                weights: w,
                bias: b,
                epsilon: eps,
                c: params.c,
            };
        }
    }
    Ok(best)
}

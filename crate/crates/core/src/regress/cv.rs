//! Seeded k-fold grid search scored by cosine similarity.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stream_rng, train, RegressError, RegressorParams, TrainingSet};
use crate::evaluate::{cosine_score, mae};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointScores {
    pub params: RegressorParams,
    pub fold_cosines: Vec<f64>,
    pub fold_maes: Vec<f64>,
    pub mean_cosine: f64,
    pub mean_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best_index: usize,
    pub points: Vec<GridPointScores>,
}

impl CvResult {
    pub fn best(&self) -> &GridPointScores {
        &self.points[self.best_index]
    }

    pub fn best_params(&self) -> &RegressorParams {
        &self.best().params
    }
}

/// Fold of each instance: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, 0));
    let mut fold = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Scores every grid point with `folds`-fold CV and picks the highest mean
/// cosine; ties go to the lower mean MAE, then to the earlier grid point.
pub fn cross_validate(
    data: &TrainingSet,
    grid: &[RegressorParams],
    folds: usize,
    seed: u64,
) -> Result<CvResult, RegressError> {
    let first = grid.first().ok_or(RegressError::EmptyGrid)?.kind();
    if let Some(other) = grid.iter().map(RegressorParams::kind).find(|&k| k != first) {
        return Err(RegressError::MixedGrid { first, other });
    }
    if folds < 2 {
        return Err(RegressError::InvalidParams("folds must be at least 2".into()));
    }
    if data.len() < folds {
        return Err(RegressError::TooFewForFolds { n: data.len(), folds });
    }
    let assignment = fold_assignment(data.len(), folds, seed);
    let splits: Vec<(TrainingSet, TrainingSet)> = (0..folds)
        .map(|k| {
            let (held, kept): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| assignment[i] == k);
            Ok((data.subset(&kept)?, data.subset(&held)?))
        })
        .collect::<Result<_, RegressError>>()?;

    let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds).map(move |k| (g, k))).collect();
    let scores: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(g, k)| {
            let (train_set, held) = &splits[k];
            let model = train(train_set, &grid[g])?;
            let pred = model.predict_all(held.rows())?;
            Ok((cosine_score(held.targets(), &pred)?, mae(held.targets(), &pred)?))
        })
        .collect::<Result<_, RegressError>>()?;

    let points: Vec<GridPointScores> = grid
        .iter()
        .enumerate()
        .map(|(g, params)| {
            let cell = &scores[g * folds..(g + 1) * folds];
            let fold_cosines: Vec<f64> = cell.iter().map(|s| s.0).collect();
            let fold_maes: Vec<f64> = cell.iter().map(|s| s.1).collect();
            GridPointScores {
                params: params.clone(),
                mean_cosine: fold_cosines.iter().sum::<f64>() / folds as f64,
                mean_mae: fold_maes.iter().sum::<f64>() / folds as f64,
                fold_cosines,
                fold_maes,
            }
        })
        .collect();

    let mut best_index = 0;
    for (g, p) in points.iter().enumerate().skip(1) {
        let b = &points[best_index];
        if p.mean_cosine > b.mean_cosine || (p.mean_cosine == b.mean_cosine && p.mean_mae < b.mean_mae) {
            best_index = g;
        }
    }
    Ok(CvResult { best_index, points })
}

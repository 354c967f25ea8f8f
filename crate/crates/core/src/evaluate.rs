//! Scoring (cosine similarity, mean absolute error) and the score-stratified
//! 80/20 validation split.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::LabeledInstance;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("score lists are empty")]
    Empty,
    #[error("gold has {gold} scores but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("non-finite score at position {0}")]
    NonFinite(usize),
    #[error("a validation split needs at least 5 instances, got {0}")]
    TooFewForSplit(usize),
    #[error("instance {0:?} has no gold score")]
    MissingGold(String),
    #[error("report line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn check(gold: &[f64], pred: &[f64]) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(i) = gold
        .iter()
        .zip(pred)
        .position(|(g, p)| !g.is_finite() || !p.is_finite())
    {
        return Err(EvalError::NonFinite(i));
    }
    Ok(())
}

/// Cosine and whether the zero-norm guard fired.
fn cosine_with_flag(gold: &[f64], pred: &[f64]) -> (f64, bool) {
    let dot: f64 = gold.iter().zip(pred).map(|(g, p)| g * p).sum();
    let gg: f64 = gold.iter().map(|g| g * g).sum();
    let pp: f64 = pred.iter().map(|p| p * p).sum();
    if gg == 0.0 || pp == 0.0 {
        return (0.0, true);
    }
    ((dot / (gg.sqrt() * pp.sqrt())).clamp(-1.0, 1.0), false)
}

/// `gold·pred / (‖gold‖ ‖pred‖)`, or 0 when either vector is all zeros.
pub fn cosine_score(gold: &[f64], pred: &[f64]) -> Result<f64, EvalError> {
    check(gold, pred)?;
    Ok(cosine_with_flag(gold, pred).0)
}

/// Mean absolute error.
pub fn mae(gold: &[f64], pred: &[f64]) -> Result<f64, EvalError> {
    check(gold, pred)?;
    Ok(gold.iter().zip(pred).map(|(g, p)| (g - p).abs()).sum::<f64>() / gold.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cosine: f64,
    pub mae: f64,
    pub count: usize,
    /// `pred - gold` per instance.
    pub per_instance_error: Vec<f64>,
    /// Set when one of the score vectors had zero norm and cosine was forced to 0.
    pub zero_norm: bool,
}

impl EvalReport {
    pub fn compute(gold: &[f64], pred: &[f64]) -> Result<Self, EvalError> {
        check(gold, pred)?;
        let (cosine, zero_norm) = cosine_with_flag(gold, pred);
        Ok(Self {
            cosine,
            mae: mae(gold, pred)?,
            count: gold.len(),
            per_instance_error: pred.iter().zip(gold).map(|(p, g)| p - g).collect(),
            zero_norm,
        })
    }

    /// Flat `key=value` block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "cosine={}", self.cosine);
        let _ = writeln!(out, "mae={}", self.mae);
        let _ = writeln!(out, "count={}", self.count);
        let _ = writeln!(out, "zero_norm={}", self.zero_norm);
        out
    }

    /// Reads back the summary fields of [`EvalReport::to_text`]. The
    /// per-instance errors are not part of the text form.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut report = EvalReport {
            cosine: f64::NAN,
            mae: f64::NAN,
            count: 0,
            per_instance_error: Vec::new(),
            zero_norm: false,
        };
        let mut seen = [false; 3];
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| EvalError::Parse {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key=value".into()))?;
            let value = value.trim();
            match key.trim() {
                "cosine" => {
                    report.cosine = value.parse().map_err(|_| bad(format!("bad cosine {value:?}")))?;
                    seen[0] = true;
                }
                "mae" => {
                    report.mae = value.parse().map_err(|_| bad(format!("bad mae {value:?}")))?;
                    seen[1] = true;
                }
                "count" => {
                    report.count = value.parse().map_err(|_| bad(format!("bad count {value:?}")))?;
                    seen[2] = true;
                }
                "zero_norm" => {
                    report.zero_norm = value.parse().map_err(|_| bad(format!("bad flag {value:?}")))?;
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(EvalError::Parse {
                line: text.lines().count(),
                message: "cosine, mae and count are required".into(),
            });
        }
        Ok(report)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// Report for predicting the median gold score everywhere.
pub fn median_baseline(gold: &[f64]) -> Result<EvalReport, EvalError> {
    let m = median(gold).ok_or(EvalError::Empty)?;
    EvalReport::compute(gold, &vec![m; gold.len()])
}

/// Train/validation positions into the original list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Sorts by score (ascending, ties by original index) and sends every fifth
/// item, sorted positions 4, 9, 14, ..., to validation. Both lists come back
/// in original index order.
pub fn validation_split_indices(scores: &[f64]) -> Result<SplitIndices, EvalError> {
    if scores.len() < 5 {
        return Err(EvalError::TooFewForSplit(scores.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut train = Vec::with_capacity(scores.len());
    let mut validation = Vec::with_capacity(scores.len() / 5);
    for (pos, &i) in order.iter().enumerate() {
        if pos % 5 == 4 {
            validation.push(i);
        } else {
            train.push(i);
        }
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(SplitIndices { train, validation })
}

/// Splits labelled instances 80/20 with [`validation_split_indices`].
pub fn make_validation_split(
    instances: &[LabeledInstance],
) -> Result<(Vec<LabeledInstance>, Vec<LabeledInstance>), EvalError> {
    let scores = instances
        .iter()
        .map(|i| i.gold_score.ok_or_else(|| EvalError::MissingGold(i.id.clone())))
        .collect::<Result<Vec<f64>, _>>()?;
    let split = validation_split_indices(&scores)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| instances[i].clone()).collect();
    Ok((pick(&split.train), pick(&split.validation)))
}

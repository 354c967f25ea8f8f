//! Labelled instances and the JSON-lines dataset and prediction files.
//!
//! Dataset lines look like
//! `{"id":"1","company":"JPMorgan","span":"its time to sell banks","score":-0.763,"text":"...","genre":"microblog"}`;
//! `span`, `score` and `genre` are optional. Prediction lines are `{"id":"1","score":0.25}`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unknown genre {0:?} (expected microblog or headline)")]
    UnknownGenre(String),
    #[error("unrecognised competition record at position {0}")]
    UnknownRecord(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Microblog,
    Headline,
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Genre::Microblog => "microblog",
            Genre::Headline => "headline",
        })
    }
}

impl FromStr for Genre {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "microblog" | "microblogs" | "tweet" | "tweets" => Ok(Genre::Microblog),
            "headline" | "headlines" | "news" => Ok(Genre::Headline),
            other => Err(DatasetError::UnknownGenre(other.to_string())),
        }
    }
}

/// One (text, company, score) example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub id: String,
    pub text: String,
    pub company: String,
    /// Sentiment-bearing span; equals `text` when the source gave none.
    pub span: String,
    pub gold_score: Option<f64>,
    pub genre: Genre,
}

impl LabeledInstance {
    /// Text that features are computed from.
    pub fn feature_text(&self) -> &str {
        if self.span.trim().is_empty() {
            &self.text
        } else {
            &self.span
        }
    }
}

fn id_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn score_value(value: &Value) -> Option<f64> {
    match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Parses JSON-lines dataset text; `genre` is assigned to every instance.
pub fn parse_dataset(text: &str, genre: Genre) -> Result<Vec<LabeledInstance>, DatasetError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| DatasetError::Line {
            line: line_no,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| err(format!("malformed JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| err("expected a JSON object".into()))?;
        let id = obj
            .get("id")
            .and_then(id_string)
            .ok_or_else(|| err("missing or invalid \"id\"".into()))?;
        let text = obj
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| err("missing \"text\"".into()))?
            .to_string();
        if text.trim().is_empty() {
            return Err(err("\"text\" is empty".into()));
        }
        let company = obj.get("company").and_then(Value::as_str).unwrap_or("").to_string();
        let span = obj
            .get("span")
            .and_then(Value::as_str)
            .filter(|s| !s.trim().is_empty())
            .unwrap_or(&text)
            .to_string();
        let gold_score = match obj.get("score") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let s = score_value(v).ok_or_else(|| err(format!("invalid score {v}")))?;
                if !(-1.0..=1.0).contains(&s) {
                    return Err(err(format!("score {s} outside [-1, 1]")));
                }
                Some(s)
            }
        };
        if let Some(g) = obj.get("genre").and_then(Value::as_str) {
            let declared: Genre = g.parse().map_err(|e: DatasetError| err(e.to_string()))?;
            if declared != genre {
                return Err(err(format!("genre {declared} does not match requested {genre}")));
            }
        }
        if !seen.insert(id.clone()) {
            log::warn!("line {line_no}: duplicate id {id:?}");
        }
        out.push(LabeledInstance {
            id,
            text,
            company,
            span,
            gold_score,
            genre,
        });
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dataset(path: impl AsRef<Path>, genre: Genre) -> Result<Vec<LabeledInstance>, DatasetError> {
    parse_dataset(&read(path.as_ref())?, genre)
}

/// Serializes instances in the canonical JSON-lines schema.
pub fn write_dataset<W: Write>(instances: &[LabeledInstance], mut out: W) -> std::io::Result<()> {
    for inst in instances {
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), Value::String(inst.id.clone()));
        obj.insert("text".into(), Value::String(inst.text.clone()));
        obj.insert("company".into(), Value::String(inst.company.clone()));
        obj.insert("span".into(), Value::String(inst.span.clone()));
        if let Some(s) = inst.gold_score {
            obj.insert("score".into(), serde_json::json!(s));
        }
        obj.insert("genre".into(), Value::String(inst.genre.to_string()));
        writeln!(out, "{}", Value::Object(obj))?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
}

pub fn write_predictions<W: Write>(predictions: &[Prediction], mut out: W) -> std::io::Result<()> {
    for p in predictions {
        writeln!(out, "{}", serde_json::to_string(p).expect("predictions serialize"))?;
    }
    out.flush()
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| DatasetError::Line { line: i + 1, message };
        let value: Value = serde_json::from_str(line).map_err(|e| err(format!("malformed JSON: {e}")))?;
        let id = value
            .get("id")
            .and_then(id_string)
            .ok_or_else(|| err("missing \"id\"".into()))?;
        let score = value
            .get("score")
            .and_then(score_value)
            .filter(|s| s.is_finite())
            .ok_or_else(|| err("missing or invalid \"score\"".into()))?;
        out.push(Prediction { id, score });
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, DatasetError> {
    parse_predictions(&read(path.as_ref())?)
}

/// Converts a competition-format JSON array into instances.
///
/// Microblog records carry `cashtag`, `spans` and `sentiment score`; headline
/// records carry `company`, `title` and `sentiment`.
pub fn convert_competition_json(text: &str, genre: Genre) -> Result<Vec<LabeledInstance>, DatasetError> {
    let records: Vec<Value> = serde_json::from_str(text).map_err(|e| DatasetError::Line {
        line: e.line(),
        message: format!("malformed JSON: {e}"),
    })?;
    let mut out = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let id = rec.get("id").and_then(id_string).ok_or(DatasetError::UnknownRecord(i))?;
        let company = rec
            .get("cashtag")
            .or_else(|| rec.get("company"))
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        let span = match rec.get("spans") {
            Some(Value::Array(parts)) => parts.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(" "),
            Some(Value::String(s)) => s.clone(),
            _ => String::new(),
        };
        let text = rec
            .get("title")
            .or_else(|| rec.get("text"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| span.clone());
        if text.trim().is_empty() {
            return Err(DatasetError::UnknownRecord(i));
        }
        let gold_score = rec
            .get("sentiment score")
            .or_else(|| rec.get("sentiment"))
            .and_then(score_value)
            .map(|s| s.clamp(-1.0, 1.0));
        out.push(LabeledInstance {
            id,
            span: if span.is_empty() { text.clone() } else { span },
            text,
            company,
            gold_score,
            genre,
        });
    }
    Ok(out)
}

//! Fixed-behavior classifiers used as stand-ins for trained models in
//! tests and in pipeline runs without an ML runtime. Training is a no-op.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use super::{Classifier, PredictionRecord, TextItem, TextSample, TrainReport, TrainingConfig};
use crate::error::{Error, Result};
use crate::text::fold;

fn untrained() -> TrainReport {
    TrainReport {
        epochs_run: 0,
        best_val_loss: 0.0,
    }
}

/// Gives every item the same score.
pub struct ConstantClassifier {
    name: String,
    score: f64,
}

impl ConstantClassifier {
    pub fn new(name: impl Into<String>, score: f64) -> Self {
        ConstantClassifier {
            name: name.into(),
            score,
        }
    }
}

impl Classifier for ConstantClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn train(&mut self, _: &[TextSample], _: &[TextSample], _: &TrainingConfig) -> Result<TrainReport> {
        Ok(untrained())
    }

    fn predict(&mut self, items: &[TextItem]) -> Result<Vec<PredictionRecord>> {
        Ok(items
            .iter()
            .map(|it| PredictionRecord::from_score(&it.pair_id, self.score))
            .collect())
    }
}

/// Scores 0.9 when the text contains any of the keywords (case-insensitive
/// substring), 0.1 otherwise.
pub struct KeywordClassifier {
    name: String,
    keywords: Vec<String>,
}

impl KeywordClassifier {
    pub const HIT: f64 = 0.9;
    pub const MISS: f64 = 0.1;

    pub fn new(name: impl Into<String>, keywords: Vec<String>) -> Self {
        KeywordClassifier {
            name: name.into(),
            keywords: keywords.iter().map(|k| fold(k)).collect(),
        }
    }

    fn score(&self, text: &str) -> f64 {
        let folded = fold(text);
        if self.keywords.iter().any(|k| folded.contains(k.as_str())) {
            Self::HIT
        } else {
            Self::MISS
        }
    }
}

impl Classifier for KeywordClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn train(&mut self, _: &[TextSample], _: &[TextSample], _: &TrainingConfig) -> Result<TrainReport> {
        Ok(untrained())
    }

    fn predict(&mut self, items: &[TextItem]) -> Result<Vec<PredictionRecord>> {
        Ok(items
            .iter()
            .map(|it| PredictionRecord::from_score(&it.pair_id, self.score(&it.masked)))
            .collect())
    }
}

/// Replays scores from a table keyed by pair id.
pub struct TableClassifier {
    name: String,
    scores: HashMap<String, f64>,
}

#[derive(Deserialize)]
struct TableRow {
    pair_id: String,
    score: f64,
}

impl TableClassifier {
    pub fn new(name: impl Into<String>, scores: HashMap<String, f64>) -> Self {
        TableClassifier {
            name: name.into(),
            scores,
        }
    }

    /// Read a JSON Lines table of `{"pair_id": ..., "score": ...}`.
    pub fn from_file(name: impl Into<String>, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut scores = HashMap::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: TableRow = serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e))?;
            if !(0.0..=1.0).contains(&row.score) {
                return Err(Error::format(path, i + 1, format!("score {} outside [0,1]", row.score)));
            }
            scores.insert(row.pair_id, row.score);
        }
        Ok(Self::new(name, scores))
    }
}

impl Classifier for TableClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn train(&mut self, _: &[TextSample], _: &[TextSample], _: &TrainingConfig) -> Result<TrainReport> {
        Ok(untrained())
    }

    fn predict(&mut self, items: &[TextItem]) -> Result<Vec<PredictionRecord>> {
        items
            .iter()
            .map(|it| {
                let score = self.scores.get(&it.pair_id).ok_or_else(|| Error::Classifier {
                    model: self.name.clone(),
                    message: format!("no score for {}", it.pair_id),
                })?;
                Ok(PredictionRecord::from_score(&it.pair_id, *score))
            })
            .collect()
    }
}

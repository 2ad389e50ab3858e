use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::classifier::PredictionRecord;
use crate::error::{Error, Result};

/// Per-class precision/recall/F1 for labels {0, 1} plus the macro F1.
/// Zero denominators give 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub macro_f1: f64,
    pub support: [usize; 2],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Metrics {
    /// From a 2×2 confusion matrix with class 1 as positive.
    pub fn from_confusion(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let p1 = ratio(tp, tp + fp);
        let r1 = ratio(tp, tp + fn_);
        let p0 = ratio(tn, tn + fn_);
        let r0 = ratio(tn, tn + fp);
        let f1 = [harmonic(p0, r0), harmonic(p1, r1)];
        Metrics {
            precision: [p0, p1],
            recall: [r0, r1],
            f1,
            macro_f1: (f1[0] + f1[1]) / 2.0,
            support: [tn + fp, tp + fn_],
        }
    }

    pub fn from_labels(predicted: &[u8], gold: &[u8]) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (p, g) in predicted.iter().zip(gold) {
            match (p, g) {
                (1, 1) => tp += 1,
                (1, _) => fp += 1,
                (_, 1) => fn_ += 1,
                _ => tn += 1,
            }
        }
        Self::from_confusion(tp, fp, fn_, tn)
    }
}

/// Score predictions against gold labels matched by pair id. Both sides
/// must cover the same ids exactly once.
pub fn compute_metrics(predictions: &[PredictionRecord], gold: &[(String, u8)]) -> Result<Metrics> {
    if gold.is_empty() {
        return Err(Error::Validation("no gold labels to score against".into()));
    }
    if predictions.len() != gold.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    let mut by_id: HashMap<&str, u8> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.pair_id.as_str(), p.label).is_some() {
            return Err(Error::Validation(format!("pair {} predicted twice", p.pair_id)));
        }
    }
    let mut predicted = Vec::with_capacity(gold.len());
    let mut labels = Vec::with_capacity(gold.len());
    for (id, label) in gold {
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Validation(format!("no prediction for gold pair {id}")))?;
        predicted.push(*p);
        labels.push(*label);
    }
    Ok(Metrics::from_labels(&predicted, &labels))
}

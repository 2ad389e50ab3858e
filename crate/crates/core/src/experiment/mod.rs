//! Cross-validated evaluation: stratified folds, training-set strategies,
//! metrics, and report files.

mod kfold;
mod metrics;
mod runner;

pub use kfold::{stratified_kfold, stratified_kfold_ids, validation_size, FoldSplit, VALIDATION_PERCENT};
pub use metrics::{compute_metrics, Metrics};
pub use runner::{
    read_report, run_experiment, write_report, write_summary, CellFailure, ExperimentOutcome, ExperimentPlan,
    MetricsReport, REPORT_HEADER,
};

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::LabeledSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    NonAugmented,
    AugmentedUnbalanced,
    AugmentedBalanced,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::NonAugmented,
        Strategy::AugmentedUnbalanced,
        Strategy::AugmentedBalanced,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::NonAugmented => "non_augmented",
            Strategy::AugmentedUnbalanced => "augmented_unbalanced",
            Strategy::AugmentedBalanced => "augmented_balanced",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Count of (negatives, positives).
pub fn class_counts(samples: &[LabeledSample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.label == 1).count();
    (samples.len() - pos, pos)
}

/// Golden samples whose ids are listed, in golden order.
pub fn select<'a>(golden: &'a [LabeledSample], ids: &[String]) -> Vec<&'a LabeledSample> {
    let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
    golden.iter().filter(|s| wanted.contains(s.pair_id())).collect()
}

/// Training samples for one fold under a strategy.
///
/// The golden part is the fold's training ids. Augmented strategies add
/// the silver corpus; the balanced one then drops negatives, chosen
/// uniformly at random with `seed`, until the classes are equal.
pub fn assemble_training_set(
    strategy: Strategy,
    fold: &FoldSplit,
    golden: &[LabeledSample],
    silver: &[LabeledSample],
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    crate::silver::ensure_disjoint(golden, silver)?;
    let held_out: HashSet<&str> = fold.val_ids.iter().chain(&fold.test_ids).map(String::as_str).collect();
    if let Some(id) = fold.train_ids.iter().find(|id| held_out.contains(id.as_str())) {
        return Err(Error::Validation(format!(
            "fold {} lists {id} for both training and evaluation",
            fold.fold_id
        )));
    }
    let mut set: Vec<LabeledSample> = select(golden, &fold.train_ids).into_iter().cloned().collect();
    if set.len() != fold.train_ids.len() {
        return Err(Error::Validation(format!(
            "fold {} references ids missing from the golden set",
            fold.fold_id
        )));
    }
    if strategy == Strategy::NonAugmented {
        return Ok(set);
    }
    set.extend(silver.iter().cloned());
    if strategy == Strategy::AugmentedUnbalanced {
        return Ok(set);
    }

    let (neg, pos) = class_counts(&set);
    if neg < pos {
        return Err(Error::Validation(format!(
            "cannot balance by dropping negatives: {pos} positives but only {neg} negatives"
        )));
    }
    let negatives: Vec<usize> = (0..set.len()).filter(|&i| set[i].label == 0).collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut keep = vec![true; set.len()];
    for i in &negatives {
        keep[*i] = false;
    }
    for j in sample(&mut rng, negatives.len(), pos) {
        keep[negatives[j]] = true;
    }
    Ok(set.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect())
}

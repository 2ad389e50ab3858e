use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::LabeledSample;

/// Share of each fold's held-out portion used for validation, per class.
pub const VALIDATION_PERCENT: usize = 30;

/// Ids of one cross-validation fold. Validation and test together form
/// the fold's held-out portion; training is every other fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_id: usize,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Validation size for a held-out class count: 30% rounded half up.
pub fn validation_size(held_out: usize) -> usize {
    (held_out * VALIDATION_PERCENT * 2 + 100) / 200
}

pub fn stratified_kfold(samples: &[LabeledSample], k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    let labeled: Vec<(&str, u8)> = samples.iter().map(|s| (s.pair_id(), s.label)).collect();
    stratified_kfold_ids(&labeled, k, seed)
}

/// Stratified k-fold over (id, label) pairs. Ids of each class are sorted,
/// shuffled with a seeded xoshiro256++ generator (positives first), then
/// dealt round-robin; negatives start where positives stopped so fold
/// totals stay within one of each other.
pub fn stratified_kfold_ids(samples: &[(&str, u8)], k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::Validation(format!("k must be >= 2, got {k}")));
    }
    let mut seen = HashSet::new();
    let mut classes: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
    for (id, label) in samples {
        if !seen.insert(*id) {
            return Err(Error::Validation(format!("duplicate sample id {id}")));
        }
        match label {
            0 | 1 => classes[usize::from(*label)].push(id),
            l => return Err(Error::Validation(format!("label {l} for {id} is not 0 or 1"))),
        }
    }
    for (c, ids) in classes.iter().enumerate() {
        if ids.len() < k {
            return Err(Error::Validation(format!(
                "class {c} has {} samples; {k}-fold splitting needs at least {k}",
                ids.len()
            )));
        }
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut members: Vec<[Vec<&str>; 2]> = vec![[Vec::new(), Vec::new()]; k];
    let mut next = 0;
    for class in [1usize, 0] {
        let ids = &mut classes[class];
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            members[next][class].push(id);
            next = (next + 1) % k;
        }
    }

    let sorted = |mut v: Vec<String>| {
        v.sort_unstable();
        v
    };
    let folds = (0..k)
        .map(|f| {
            let mut val = Vec::new();
            let mut test = Vec::new();
            for class in members[f].iter() {
                let v = validation_size(class.len());
                val.extend(class[..v].iter().map(|s| s.to_string()));
                test.extend(class[v..].iter().map(|s| s.to_string()));
            }
            let train = members
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, m)| m.iter().flatten().map(|s| s.to_string()))
                .collect();
            FoldSplit {
                fold_id: f,
                train_ids: sorted(train),
                val_ids: sorted(val),
                test_ids: sorted(test),
            }
        })
        .collect();
    Ok(folds)
}

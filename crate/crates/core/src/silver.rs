//! Unanimity voting over k classifiers and silver corpus construction.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::PredictionRecord;
use crate::error::{Error, Result};
use crate::pairs::{CandidatePair, LabeledSample, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteOutcome {
    Positive,
    Negative,
    Discard,
}

/// All ones → positive, all zeros → negative, anything else → discard.
/// The label count must equal `k_expected` so that a missing prediction is
/// an error rather than a quiet discard.
pub fn vote(labels: &[u8], k_expected: usize) -> Result<VoteOutcome> {
    if k_expected < 2 {
        return Err(Error::Validation(format!("voting needs k >= 2, got {k_expected}")));
    }
    if labels.len() != k_expected {
        return Err(Error::Validation(format!(
            "expected {k_expected} labels, got {}",
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|l| **l > 1) {
        return Err(Error::Validation(format!("label {l} is not 0 or 1")));
    }
    Ok(if labels.iter().all(|l| *l == 1) {
        VoteOutcome::Positive
    } else if labels.iter().all(|l| *l == 0) {
        VoteOutcome::Negative
    } else {
        VoteOutcome::Discard
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub pair_id: String,
    /// One label per model, in model order.
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SilverSummary {
    pub positive: usize,
    pub negative: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SilverCorpus {
    pub samples: Vec<LabeledSample>,
    pub discards: Vec<Discard>,
    pub summary: SilverSummary,
}

fn id_list(ids: &[&str]) -> String {
    const SHOWN: usize = 20;
    let mut s = ids.iter().take(SHOWN).copied().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        s.push_str(&format!(" and {} more", ids.len() - SHOWN));
    }
    s
}

/// Vote every pair using one prediction list per model. Each model must
/// predict each pair exactly once; input pair order is kept.
pub fn build_silver_corpus(
    unlabeled: &[CandidatePair],
    predictions_per_model: &[Vec<PredictionRecord>],
) -> Result<SilverCorpus> {
    let k = predictions_per_model.len();
    if k < 2 {
        return Err(Error::Validation(format!(
            "silver voting needs at least 2 models, got {k}"
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = unlabeled.iter().find(|p| !seen.insert(p.pair_id.as_str())) {
        return Err(Error::Validation(format!("pair {} listed twice", dup.pair_id)));
    }

    let mut tables: Vec<HashMap<&str, u8>> = Vec::with_capacity(k);
    for (m, preds) in predictions_per_model.iter().enumerate() {
        let mut table = HashMap::with_capacity(preds.len());
        for p in preds {
            if !seen.contains(p.pair_id.as_str()) {
                return Err(Error::Validation(format!(
                    "model {m} predicted unknown pair {}",
                    p.pair_id
                )));
            }
            if table.insert(p.pair_id.as_str(), p.label).is_some() {
                return Err(Error::Validation(format!(
                    "model {m} predicted pair {} more than once",
                    p.pair_id
                )));
            }
        }
        tables.push(table);
    }
    let incomplete: Vec<&str> = unlabeled
        .iter()
        .map(|p| p.pair_id.as_str())
        .filter(|id| tables.iter().any(|t| !t.contains_key(id)))
        .collect();
    if !incomplete.is_empty() {
        return Err(Error::Validation(format!(
            "pairs predicted by fewer than {k} models: {}",
            id_list(&incomplete)
        )));
    }

    let mut corpus = SilverCorpus {
        samples: Vec::new(),
        discards: Vec::new(),
        summary: SilverSummary::default(),
    };
    for pair in unlabeled {
        let labels: Vec<u8> = tables.iter().map(|t| t[pair.pair_id.as_str()]).collect();
        let label = match vote(&labels, k)? {
            VoteOutcome::Positive => {
                corpus.summary.positive += 1;
                1
            }
            VoteOutcome::Negative => {
                corpus.summary.negative += 1;
                0
            }
            VoteOutcome::Discard => {
                corpus.summary.discarded += 1;
                corpus.discards.push(Discard {
                    pair_id: pair.pair_id.clone(),
                    labels,
                });
                continue;
            }
        };
        corpus.samples.push(LabeledSample {
            pair: pair.clone(),
            label,
            provenance: Provenance::Silver,
        });
    }
    Ok(corpus)
}

/// Fails if any silver pair id also appears in the golden set.
pub fn ensure_disjoint(golden: &[LabeledSample], silver: &[LabeledSample]) -> Result<()> {
    let golden_ids: HashSet<&str> = golden.iter().map(|s| s.pair_id()).collect();
    let shared: Vec<&str> = silver
        .iter()
        .map(|s| s.pair_id())
        .filter(|id| golden_ids.contains(id))
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "silver samples overlap the golden set: {}",
            id_list(&shared)
        )))
    }
}

/// Pairs whose ids are not in the golden set, in input order.
pub fn unlabeled_pairs(pairs: &[CandidatePair], golden: &[LabeledSample]) -> Vec<CandidatePair> {
    let golden_ids: HashSet<&str> = golden.iter().map(|s| s.pair_id()).collect();
    pairs
        .iter()
        .filter(|p| !golden_ids.contains(p.pair_id.as_str()))
        .cloned()
        .collect()
}

pub fn write_discards(discards: &[Discard], path: &Path) -> Result<()> {
    crate::corpus::write_atomic(path, &crate::segment::to_jsonl(discards))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ner::{EntityClass, EntityMention, Links, MentionSource};

    fn pair(id: &str) -> CandidatePair {
        let m = |class| EntityMention {
            sent_id: "s".into(),
            start: 0,
            end: 1,
            surface: "x".into(),
            entity_class: class,
            source: MentionSource::Voted,
            links: Links::default(),
            food_group: None,
            food_subgroup: None,
        };
        CandidatePair {
            pair_id: id.into(),
            sent_id: "s".into(),
            sentence: "x".into(),
            food: m(EntityClass::Food),
            chemical: m(EntityClass::Chemical),
            masked_text: "XXX".into(),
        }
    }

    fn preds(labels: &[(&str, u8)]) -> Vec<PredictionRecord> {
        labels
            .iter()
            .map(|(id, l)| PredictionRecord::from_score(*id, f64::from(*l)))
            .collect()
    }

    #[test]
    fn vote_rules() {
        assert_eq!(vote(&[1, 1, 1], 3).unwrap(), VoteOutcome::Positive);
        assert_eq!(vote(&[0, 0, 0], 3).unwrap(), VoteOutcome::Negative);
        assert_eq!(vote(&[1, 0, 1], 3).unwrap(), VoteOutcome::Discard);
        assert!(vote(&[1, 1], 3).is_err());
        assert!(vote(&[1], 1).is_err());
        assert!(vote(&[1, 2], 2).is_err());
    }

    #[test]
    fn three_stub_models_on_five_pairs() {
        let pairs: Vec<CandidatePair> = ["a", "b", "c", "d", "e"].iter().map(|i| pair(i)).collect();
        let m1 = preds(&[("a", 1), ("b", 1), ("c", 0), ("d", 1), ("e", 0)]);
        let m2 = preds(&[("e", 1), ("d", 0), ("c", 0), ("b", 1), ("a", 1)]);
        let m3 = preds(&[("a", 1), ("b", 1), ("c", 0), ("d", 1), ("e", 0)]);
        let silver = build_silver_corpus(&pairs, &[m1, m2, m3]).unwrap();
        assert_eq!(
            silver.summary,
            SilverSummary {
                positive: 2,
                negative: 1,
                discarded: 2
            }
        );
        let ids: Vec<&str> = silver.samples.iter().map(|s| s.pair_id()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(silver.samples.iter().all(|s| s.provenance == Provenance::Silver));
        assert_eq!(
            silver.discards,
            vec![
                Discard {
                    pair_id: "d".into(),
                    labels: vec![1, 0, 1]
                },
                Discard {
                    pair_id: "e".into(),
                    labels: vec![0, 1, 0]
                },
            ]
        );
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let pairs = vec![pair("a"), pair("b")];
        let full = preds(&[("a", 1), ("b", 1)]);
        let short = preds(&[("a", 1)]);
        let err = build_silver_corpus(&pairs, &[full.clone(), short]).unwrap_err();
        assert!(err.to_string().contains("fewer than 2 models: b"), "{err}");
        let dup = preds(&[("a", 1), ("a", 1), ("b", 0)]);
        assert!(build_silver_corpus(&pairs, &[full, dup]).is_err());
    }

    #[test]
    fn empty_input() {
        let silver = build_silver_corpus(&[], &[vec![], vec![], vec![]]).unwrap();
        assert!(silver.samples.is_empty());
        assert_eq!(silver.summary, SilverSummary::default());
    }

    #[test]
    fn disjointness() {
        let g = LabeledSample {
            pair: pair("a"),
            label: 1,
            provenance: Provenance::Golden,
        };
        let s = LabeledSample {
            pair: pair("a"),
            label: 1,
            provenance: Provenance::Silver,
        };
        assert!(ensure_disjoint(std::slice::from_ref(&g), &[s]).is_err());
        assert_eq!(unlabeled_pairs(&[pair("a"), pair("b")], &[g]), vec![pair("b")]);
    }
}

//! Sentence relevance: label derivation from knowledge-type annotations, the
//! food+chemical co-occurrence prefilter, and classifier-based filtering.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, TextItem, TextSample};
use crate::error::{Error, Result};
use crate::ner::{EntityClass, EntityMention};
use crate::segment::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KnowledgeType {
    Investigation,
    Analysis,
    Method,
    Fact,
    Other,
}

impl KnowledgeType {
    pub const ALL: [KnowledgeType; 5] = [
        KnowledgeType::Investigation,
        KnowledgeType::Analysis,
        KnowledgeType::Method,
        KnowledgeType::Fact,
        KnowledgeType::Other,
    ];
}

impl FromStr for KnowledgeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Investigation" => KnowledgeType::Investigation,
            "Analysis" => KnowledgeType::Analysis,
            "Method" => KnowledgeType::Method,
            "Fact" => KnowledgeType::Fact,
            "Other" => KnowledgeType::Other,
            other => return Err(Error::Validation(format!("unknown knowledge type {other:?}"))),
        })
    }
}

impl fmt::Display for KnowledgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceLabel {
    Relevant,
    Irrelevant,
    /// Kept out of training data altogether.
    Excluded,
}

pub fn derive_relevance_label(kt: KnowledgeType) -> RelevanceLabel {
    match kt {
        KnowledgeType::Fact | KnowledgeType::Analysis => RelevanceLabel::Relevant,
        KnowledgeType::Investigation | KnowledgeType::Method => RelevanceLabel::Irrelevant,
        KnowledgeType::Other => RelevanceLabel::Excluded,
    }
}

/// Sentences with at least one food and at least one chemical mention, in
/// input order.
pub fn prefilter_cooccurrence(sentences: &[Sentence], mentions: &[EntityMention]) -> Vec<Sentence> {
    let mut foods = HashSet::new();
    let mut chems = HashSet::new();
    for m in mentions {
        match m.entity_class {
            EntityClass::Food => foods.insert(m.sent_id.as_str()),
            EntityClass::Chemical => chems.insert(m.sent_id.as_str()),
        };
    }
    sentences
        .iter()
        .filter(|s| foods.contains(s.sent_id.as_str()) && chems.contains(s.sent_id.as_str()))
        .cloned()
        .collect()
}

/// Score sentences in batches and keep those scoring at or above
/// `threshold`, in input order.
pub fn filter_relevant(
    sentences: &[Sentence],
    classifier: &mut dyn Classifier,
    threshold: f64,
    batch_size: usize,
) -> Result<Vec<(Sentence, f64)>> {
    let batch_size = batch_size.max(1);
    let mut kept = Vec::new();
    for (b, batch) in sentences.chunks(batch_size).enumerate() {
        let items: Vec<TextItem> = batch
            .iter()
            .map(|s| TextItem {
                pair_id: s.sent_id.clone(),
                masked: s.text.clone(),
            })
            .collect();
        let batch_err = |message: String| Error::Classifier {
            model: batch_label(&items, b, batch_size, sentences.len()),
            message,
        };
        let preds = classifier.predict(&items).map_err(|e| batch_err(e.to_string()))?;
        if preds.len() != items.len() || preds.iter().zip(&items).any(|(p, i)| p.pair_id != i.pair_id) {
            return Err(batch_err("predictions do not line up with the batch".into()));
        }
        for (s, p) in batch.iter().zip(preds) {
            if p.score >= threshold {
                kept.push((s.clone(), p.score));
            }
        }
    }
    Ok(kept)
}

fn batch_label(items: &[TextItem], b: usize, size: usize, total: usize) -> String {
    let first = b * size;
    let last = (first + items.len()).min(total);
    format!(
        "relevance batch {b} (sentences {first}..{last}, starting at {})",
        items.first().map(|i| i.pair_id.as_str()).unwrap_or("-")
    )
}

/// One unique training sentence and its derived label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceExample {
    pub text: String,
    pub label: RelevanceLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelevanceTrainingSet {
    /// Unique sentences in first-seen order.
    pub examples: Vec<RelevanceExample>,
    /// Sentences dropped because their annotations map to different labels.
    pub conflicts: Vec<String>,
}

impl RelevanceTrainingSet {
    /// Binary training samples; excluded sentences are left out.
    pub fn samples(&self) -> Vec<TextSample> {
        self.examples
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                let label = match e.label {
                    RelevanceLabel::Relevant => 1,
                    RelevanceLabel::Irrelevant => 0,
                    RelevanceLabel::Excluded => return None,
                };
                Some(TextSample {
                    pair_id: format!("srf#{i}"),
                    masked: e.text.clone(),
                    label,
                })
            })
            .collect()
    }
}

/// Collapse (sentence, knowledge type) annotations into unique sentences.
/// A sentence whose annotations derive more than one label is dropped.
pub fn collapse_annotations(rows: &[(String, KnowledgeType)]) -> RelevanceTrainingSet {
    let mut order: Vec<&str> = Vec::new();
    let mut labels: HashMap<&str, HashSet<RelevanceLabel>> = HashMap::new();
    for (text, kt) in rows {
        let entry = labels.entry(text.as_str()).or_insert_with(|| {
            order.push(text.as_str());
            HashSet::new()
        });
        entry.insert(derive_relevance_label(*kt));
    }
    let mut set = RelevanceTrainingSet::default();
    for text in order {
        let l = &labels[text];
        if l.len() == 1 {
            set.examples.push(RelevanceExample {
                text: text.to_string(),
                label: *l.iter().next().expect("one label"),
            });
        } else {
            set.conflicts.push(text.to_string());
        }
    }
    set
}

/// Read a TSV with columns `sentence_text` and `knowledge_type`.
pub fn load_genia_tsv(path: &Path) -> Result<RelevanceTrainingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .from_path(path)
        .map_err(|e| crate::ner::csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| crate::ner::csv_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, 1, format!("missing column {name}")))
    };
    let (text_col, kt_col) = (col("sentence_text")?, col("knowledge_type")?);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| crate::ner::csv_err(path, e))?;
        let line = i + 2;
        let text = record.get(text_col).unwrap_or("").trim();
        let kt: KnowledgeType = record
            .get(kt_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e: Error| Error::format(path, line, e))?;
        if text.is_empty() {
            return Err(Error::format(path, line, "empty sentence_text"));
        }
        rows.push((text.to_string(), kt));
    }
    Ok(collapse_annotations(&rows))
}

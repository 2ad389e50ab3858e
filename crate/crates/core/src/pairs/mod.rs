//! Candidate food–chemical pairs, masking, and labeled sample files.

mod annotate;
mod samples;

pub use annotate::{annotate, AnnotateSummary};
pub use samples::{export_samples, import_samples, LabeledSample, Provenance, SAMPLE_COLUMNS};

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ner::{EntityClass, EntityMention};
use crate::segment::{read_jsonl, to_jsonl, Boundaries, Sentence};
use crate::text::{fold, fold_chars};

pub const FOOD_MASK: &str = "XXX";
pub const CHEMICAL_MASK: &str = "YYY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub pair_id: String,
    pub sent_id: String,
    pub sentence: String,
    pub food: EntityMention,
    pub chemical: EntityMention,
    pub masked_text: String,
}

impl CandidatePair {
    pub fn make_id(sent_id: &str, food: &EntityMention, chemical: &EntityMention) -> String {
        format!(
            "{sent_id}:{}-{}:{}-{}",
            food.start, food.end, chemical.start, chemical.end
        )
    }
}

/// Masked text plus how many occurrences of each surface were replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masked {
    pub text: String,
    pub food_count: usize,
    pub chemical_count: usize,
}

fn occurrences(chars: &[char], bounds: &Boundaries, surface: &str) -> Vec<(usize, usize)> {
    let pat = fold_chars(surface);
    if pat.is_empty() || pat.len() > chars.len() {
        return Vec::new();
    }
    (0..=chars.len() - pat.len())
        .filter(|&s| bounds.is_start(s) && bounds.is_end(s + pat.len()))
        .filter(|&s| chars[s..s + pat.len()] == pat[..])
        .map(|s| (s, s + pat.len()))
        .collect()
}

/// Replace every token-bounded, case-insensitive occurrence of the food
/// surface with `XXX` and of the chemical surface with `YYY`. The two
/// candidate spans are always replaced; elsewhere longer occurrences win
/// over overlapping shorter ones.
pub fn mask_counted(sentence: &str, food: &EntityMention, chemical: &EntityMention) -> Result<Masked> {
    for m in [food, chemical] {
        m.validate(sentence)
            .map_err(|e| Error::Validation(format!("{} mention: {e}", m.entity_class)))?;
    }
    if food.start < chemical.end && chemical.start < food.end {
        return Err(Error::Validation(format!(
            "food span {}..{} overlaps chemical span {}..{}",
            food.start, food.end, chemical.start, chemical.end
        )));
    }

    let original: Vec<char> = sentence.chars().collect();
    let folded = fold_chars(sentence);
    let bounds = Boundaries::of(sentence);

    let mut candidates: Vec<(usize, usize, bool)> = Vec::new();
    for (s, e) in occurrences(&folded, &bounds, &food.surface) {
        candidates.push((s, e, true));
    }
    for (s, e) in occurrences(&folded, &bounds, &chemical.surface) {
        candidates.push((s, e, false));
    }
    candidates.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)).then(b.2.cmp(&a.2)));

    let mut chosen = vec![(food.start, food.end, true), (chemical.start, chemical.end, false)];
    for c in candidates {
        if chosen.iter().all(|x| c.1 <= x.0 || x.1 <= c.0) {
            chosen.push(c);
        }
    }
    chosen.sort_by_key(|c| std::cmp::Reverse(c.0));

    let mut out = original;
    let (mut food_count, mut chemical_count) = (0, 0);
    for (s, e, is_food) in chosen {
        let mask = if is_food {
            food_count += 1;
            FOOD_MASK
        } else {
            chemical_count += 1;
            CHEMICAL_MASK
        };
        out.splice(s..e, mask.chars());
    }
    Ok(Masked {
        text: out.into_iter().collect(),
        food_count,
        chemical_count,
    })
}

pub fn mask(sentence: &str, food: &EntityMention, chemical: &EntityMention) -> Result<String> {
    mask_counted(sentence, food, chemical).map(|m| m.text)
}

/// All food × chemical pairs in one sentence, ordered by (food start,
/// chemical start), keeping the first pair for each case-insensitive
/// (food surface, chemical surface). Pairs that cannot be masked are
/// skipped and logged.
pub fn extract_pairs(sentence: &Sentence, mentions: &[EntityMention]) -> Vec<CandidatePair> {
    let mut foods: Vec<&EntityMention> = Vec::new();
    let mut chems: Vec<&EntityMention> = Vec::new();
    for m in mentions.iter().filter(|m| m.sent_id == sentence.sent_id) {
        match m.entity_class {
            EntityClass::Food => foods.push(m),
            EntityClass::Chemical => chems.push(m),
        }
    }
    let key = |m: &&EntityMention| (m.start, m.end);
    foods.sort_by_key(key);
    chems.sort_by_key(key);

    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for f in &foods {
        for c in &chems {
            let surfaces = (fold(&f.surface), fold(&c.surface));
            if seen.contains(&surfaces) {
                continue;
            }
            match mask(&sentence.text, f, c) {
                Ok(masked_text) => {
                    seen.insert(surfaces);
                    pairs.push(CandidatePair {
                        pair_id: CandidatePair::make_id(&sentence.sent_id, f, c),
                        sent_id: sentence.sent_id.clone(),
                        sentence: sentence.text.clone(),
                        food: (*f).clone(),
                        chemical: (*c).clone(),
                        masked_text,
                    });
                }
                Err(e) => log::info!("skipping pair {}: {e}", CandidatePair::make_id(&sentence.sent_id, f, c)),
            }
        }
    }
    pairs
}

/// Pairs for every sentence, in sentence order.
pub fn extract_all_pairs(sentences: &[Sentence], mentions: &[EntityMention]) -> Vec<CandidatePair> {
    let mut by_sent: std::collections::HashMap<&str, Vec<EntityMention>> = Default::default();
    for m in mentions {
        by_sent.entry(m.sent_id.as_str()).or_default().push(m.clone());
    }
    sentences
        .iter()
        .flat_map(|s| {
            by_sent
                .get(s.sent_id.as_str())
                .map(|ms| extract_pairs(s, ms))
                .unwrap_or_default()
        })
        .collect()
}

pub fn write_pairs(pairs: &[CandidatePair], path: &Path) -> Result<()> {
    crate::corpus::write_atomic(path, &to_jsonl(pairs))
}

pub fn read_pairs(path: &Path) -> Result<Vec<CandidatePair>> {
    read_jsonl(path)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ner::{Links, MentionSource};
    use crate::text::char_slice;

    pub(crate) fn mention(text: &str, surface: &str, nth: usize, class: EntityClass) -> EntityMention {
        let byte = text.match_indices(surface).nth(nth).expect("surface present").0;
        let start = text[..byte].chars().count();
        EntityMention {
            sent_id: "s".into(),
            start,
            end: start + surface.chars().count(),
            surface: surface.into(),
            entity_class: class,
            source: match class {
                EntityClass::Food => MentionSource::Voted,
                EntityClass::Chemical => MentionSource::Saber,
            },
            links: Links::default(),
            food_group: None,
            food_subgroup: None,
        }
    }

    fn sent(text: &str) -> Sentence {
        Sentence {
            sent_id: "s".into(),
            doc_id: "d".into(),
            text: text.into(),
            start: 0,
            end: text.chars().count(),
        }
    }

    #[test]
    fn masks_simple_pair() {
        let t = "olive oil contains hydroxytyrosol";
        let f = mention(t, "olive oil", 0, EntityClass::Food);
        let c = mention(t, "hydroxytyrosol", 0, EntityClass::Chemical);
        assert_eq!(mask(t, &f, &c).unwrap(), "XXX contains YYY");
    }

    #[test]
    fn masks_every_occurrence() {
        let t = "mango and mango peel share MPG";
        let f = mention(t, "mango", 0, EntityClass::Food);
        let c = mention(t, "MPG", 0, EntityClass::Chemical);
        let m = mask_counted(t, &f, &c).unwrap();
        assert_eq!(m.text, "XXX and XXX peel share YYY");
        assert_eq!((m.food_count, m.chemical_count), (2, 1));
    }

    #[test]
    fn case_insensitive_and_token_bounded() {
        let t = "Tea and tea extracts, unlike steak, contain EGCG; egcg persists.";
        let f = mention(t, "tea", 0, EntityClass::Food);
        let c = mention(t, "EGCG", 0, EntityClass::Chemical);
        assert_eq!(
            mask(t, &f, &c).unwrap(),
            "XXX and XXX extracts, unlike steak, contain YYY; YYY persists."
        );
    }

    #[test]
    fn other_entities_untouched_and_overlap_rejected() {
        let t = "olive oil has oleic acid and hydroxytyrosol";
        let f = mention(t, "olive oil", 0, EntityClass::Food);
        let c = mention(t, "hydroxytyrosol", 0, EntityClass::Chemical);
        assert_eq!(mask(t, &f, &c).unwrap(), "XXX has oleic acid and YYY");
        let bad = mention(t, "oil", 0, EntityClass::Chemical);
        assert!(mask(t, &f, &bad).is_err());
    }

    #[test]
    fn table_sentence_yields_four_pairs() {
        let t = "An unusual fatty acid, cis-9,cis-15-octadecadienoic acid, has been identified \
                 in the pulp lipids of mango (Mangifera indica L.) grown in the Philippines.";
        let mentions = vec![
            mention(t, "mango", 0, EntityClass::Food),
            mention(t, "Mangifera indica", 0, EntityClass::Food),
            mention(t, "cis-9,cis-15-octadecadienoic acid", 0, EntityClass::Chemical),
            mention(t, "fatty acid", 0, EntityClass::Chemical),
        ];
        let pairs = extract_pairs(&sent(t), &mentions);
        let got: Vec<(&str, &str)> = pairs
            .iter()
            .map(|p| (p.food.surface.as_str(), p.chemical.surface.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("mango", "fatty acid"),
                ("mango", "cis-9,cis-15-octadecadienoic acid"),
                ("Mangifera indica", "fatty acid"),
                ("Mangifera indica", "cis-9,cis-15-octadecadienoic acid"),
            ]
        );
        assert_eq!(
            pairs[0].masked_text,
            "An unusual YYY, cis-9,cis-15-octadecadienoic acid, has been identified \
             in the pulp lipids of XXX (Mangifera indica L.) grown in the Philippines."
        );
        for p in &pairs {
            assert_eq!(char_slice(t, p.food.start, p.food.end), Some(p.food.surface.as_str()));
        }
    }

    #[test]
    fn cross_product_edge_cases_and_dedupe() {
        let t = "mango pulp, Mango peel and mango seed contain mangiferin";
        let one_food = vec![
            mention(t, "mango", 0, EntityClass::Food),
            mention(t, "mangiferin", 0, EntityClass::Chemical),
        ];
        assert_eq!(extract_pairs(&sent(t), &one_food).len(), 1);
        let foods_only = vec![
            mention(t, "mango", 0, EntityClass::Food),
            mention(t, "Mango", 0, EntityClass::Food),
            mention(t, "mango", 1, EntityClass::Food),
        ];
        assert!(extract_pairs(&sent(t), &foods_only).is_empty());
        let mut repeated = foods_only.clone();
        repeated.push(mention(t, "mangiferin", 0, EntityClass::Chemical));
        let pairs = extract_pairs(&sent(t), &repeated);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].food.start, 0);
        assert_eq!(pairs[0].masked_text, "XXX pulp, XXX peel and XXX seed contain YYY");
        assert_eq!(extract_pairs(&sent(t), &repeated), pairs);
    }
}

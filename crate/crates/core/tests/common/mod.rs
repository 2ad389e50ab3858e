//! Builders and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use relex::classifier::TextSample;
use relex::ner::{EntityClass, EntityMention, GazetteerEntry, Links, MentionSource};
use relex::pairs::{CandidatePair, LabeledSample, Provenance};
use relex::segment::{token_spans, Sentence};

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn sentence(sent_id: &str, text: &str) -> Sentence {
    Sentence {
        sent_id: sent_id.into(),
        doc_id: sent_id.split('#').next().unwrap_or(sent_id).into(),
        text: text.into(),
        start: 0,
        end: text.chars().count(),
    }
}

/// Mention of the `nth` exact occurrence of `surface` in `text`.
pub fn mention(text: &str, surface: &str, nth: usize, class: EntityClass) -> EntityMention {
    let byte = text
        .match_indices(surface)
        .nth(nth)
        .unwrap_or_else(|| panic!("{surface:?} #{nth} not in {text:?}"))
        .0;
    let start = text[..byte].chars().count();
    EntityMention {
        sent_id: "1#0".into(),
        start,
        end: start + surface.chars().count(),
        surface: surface.into(),
        entity_class: class,
        source: match class {
            EntityClass::Food => MentionSource::Voted,
            EntityClass::Chemical => MentionSource::ChemicalDict,
        },
        links: Links::default(),
        food_group: None,
        food_subgroup: None,
    }
}

/// A labeled sample whose text is irrelevant; only id and label matter.
pub fn sample(id: &str, label: u8, provenance: Provenance) -> LabeledSample {
    let text = "XXX contains YYY";
    let food = mention("olive contains oleate", "olive", 0, EntityClass::Food);
    let chemical = mention("olive contains oleate", "oleate", 0, EntityClass::Chemical);
    LabeledSample {
        pair: CandidatePair {
            pair_id: id.into(),
            sent_id: "1#0".into(),
            sentence: "olive contains oleate".into(),
            food,
            chemical,
            masked_text: text.into(),
        },
        label,
        provenance,
    }
}

pub fn synthetic(prefix: &str, pos: usize, neg: usize, provenance: Provenance) -> Vec<LabeledSample> {
    (0..pos)
        .map(|i| sample(&format!("{prefix}p{i}"), 1, provenance))
        .chain((0..neg).map(|i| sample(&format!("{prefix}n{i}"), 0, provenance)))
        .collect()
}

pub fn entry(surface: &str) -> GazetteerEntry {
    GazetteerEntry::new(surface, format!("ID-{surface}"), relex::ner::NameKind::Common)
}

/// Reference dictionary scan: try every entry at every token start,
/// compare case-insensitively, require a token end, then keep the
/// leftmost-longest non-overlapping candidates.
pub fn naive_spans(entries: &[GazetteerEntry], text: &str) -> Vec<(usize, usize)> {
    let lower: Vec<char> = text.chars().flat_map(|c| c.to_lowercase().next()).collect();
    let tokens = token_spans(text);
    let is_end = |p: usize| tokens.iter().any(|t| t.1 == p);
    let mut candidates = Vec::new();
    for &(s, _) in &tokens {
        for e in entries {
            let pat: Vec<char> = e.surface.chars().flat_map(|c| c.to_lowercase().next()).collect();
            let end = s + pat.len();
            if end <= lower.len() && lower[s..end] == pat[..] && is_end(end) {
                candidates.push((s, end));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    candidates.dedup();
    let mut out = Vec::new();
    let mut cursor = 0;
    for (s, e) in candidates {
        if s >= cursor {
            out.push((s, e));
            cursor = e;
        }
    }
    out
}

const CONTAINS: [&str; 3] = ["contains", "contains high levels of", "naturally contains"];
const OTHER: [&str; 6] = [
    "was compared with",
    "was added to",
    "did not alter",
    "was extracted from",
    "was given with",
    "was measured alongside",
];
const FILLER: [&str; 12] = [
    "in this study",
    "in rats",
    "after cooking",
    "during storage",
    "at harvest",
    "in two cultivars",
    "by HPLC",
    "under heat",
    "in vitro",
    "for six weeks",
    "in older adults",
    "at low pH",
];

/// Masked sentences whose label is exactly whether the word `contains`
/// appears.
pub fn separable_corpus(pos: usize, neg: usize, seed: u64) -> Vec<TextSample> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(pos + neg);
    for i in 0..pos + neg {
        let label = u8::from(i < pos);
        let verb = if label == 1 {
            CONTAINS.choose(&mut rng).unwrap()
        } else {
            OTHER.choose(&mut rng).unwrap()
        };
        let (a, b) = if rng.random_bool(0.5) {
            ("XXX", "YYY")
        } else {
            ("YYY", "XXX")
        };
        let (a, b) = if label == 1 { ("XXX", "YYY") } else { (a, b) };
        let filler = FILLER.choose(&mut rng).unwrap();
        let masked = if rng.random_bool(0.5) {
            format!("{a} {verb} {b} {filler}.")
        } else {
            format!(
                "{} {filler}, {a} {verb} {b}.",
                capitalize(FILLER.choose(&mut rng).unwrap())
            )
        };
        out.push(TextSample {
            pair_id: format!("s{i:04}"),
            masked,
            label,
        });
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

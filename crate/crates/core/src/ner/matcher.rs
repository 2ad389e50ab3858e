use std::collections::HashMap;

use super::automaton::Automaton;
use super::{EntityClass, EntityMention, GazetteerEntry, Links, MentionSource, NameKind};
use crate::error::{Error, Result};
use crate::segment::{Boundaries, Sentence};
use crate::text::{fold_char, fold_chars};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatcherOptions {
    pub entity_class: EntityClass,
    /// Also accept a trailing `s`/`es` after a dictionary surface.
    pub strip_plurals: bool,
}

impl Default for MatcherOptions {
    fn default() -> Self {
        MatcherOptions {
            entity_class: EntityClass::Food,
            strip_plurals: false,
        }
    }
}

/// Case-insensitive dictionary matcher. Matches are leftmost-longest,
/// non-overlapping, and must start and end on token boundaries.
#[derive(Debug, Clone)]
pub struct Matcher {
    automaton: Automaton,
    entries: Vec<GazetteerEntry>,
    options: MatcherOptions,
}

/// Food matcher with default options.
pub fn build_matcher(gazetteer: &[GazetteerEntry]) -> Result<Matcher> {
    Matcher::new(gazetteer, MatcherOptions::default())
}

impl Matcher {
    pub fn new(gazetteer: &[GazetteerEntry], options: MatcherOptions) -> Result<Self> {
        if gazetteer.is_empty() {
            return Err(Error::Gazetteer("empty gazetteer".into()));
        }
        let mut seen: HashMap<(String, NameKind), usize> = HashMap::new();
        let mut duplicates = Vec::new();
        for (idx, entry) in gazetteer.iter().enumerate() {
            if entry.surface.trim().is_empty() {
                return Err(Error::Gazetteer(format!("entry {idx} has an empty surface")));
            }
            let key = (crate::text::fold(&entry.surface), entry.name_kind);
            if seen.insert(key, idx).is_some() {
                duplicates.push(format!("{} ({:?})", entry.surface, entry.name_kind));
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::Gazetteer(format!(
                "duplicate (surface, name_kind): {}",
                duplicates.join(", ")
            )));
        }
        let automaton = Automaton::new(gazetteer.iter().map(|e| fold_chars(&e.surface)));
        Ok(Matcher {
            automaton,
            entries: gazetteer.to_vec(),
            options,
        })
    }

    pub fn options(&self) -> MatcherOptions {
        self.options
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    /// Whether `text` as a whole is a dictionary surface.
    pub fn accepts(&self, text: &str) -> bool {
        let chars = fold_chars(text);
        self.automaton
            .find_overlapping(&chars)
            .iter()
            .any(|h| h.start == 0 && h.end == chars.len())
    }

    /// Selected `(start, end, entry index)` spans in `text`.
    pub fn find_spans(&self, text: &str) -> Vec<(usize, usize, usize)> {
        let chars = fold_chars(text);
        let bounds = Boundaries::of(text);
        let mut candidates: Vec<(usize, usize, usize)> = self
            .automaton
            .find_overlapping(&chars)
            .into_iter()
            .filter(|h| bounds.is_start(h.start))
            .filter_map(|h| {
                let end = self.accept_end(&chars, &bounds, h.end)?;
                Some((h.start, end, h.pattern as usize))
            })
            .collect();
        candidates.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));

        let mut selected = Vec::new();
        let mut cursor = 0;
        for (start, end, entry) in candidates {
            if start >= cursor {
                selected.push((start, end, entry));
                cursor = end;
            }
        }
        selected
    }

    fn accept_end(&self, chars: &[char], bounds: &Boundaries, end: usize) -> Option<usize> {
        if bounds.is_end(end) {
            return Some(end);
        }
        if !self.options.strip_plurals {
            return None;
        }
        let at = |i: usize| chars.get(i).copied().map(fold_char);
        if at(end) == Some('s') && bounds.is_end(end + 1) {
            return Some(end + 1);
        }
        if at(end) == Some('e') && at(end + 1) == Some('s') && bounds.is_end(end + 2) {
            return Some(end + 2);
        }
        None
    }

    pub fn match_sentence(&self, sentence: &Sentence) -> Vec<EntityMention> {
        let chars: Vec<char> = sentence.text.chars().collect();
        self.find_spans(&sentence.text)
            .into_iter()
            .map(|(start, end, idx)| self.mention(sentence, &chars, start, end, idx))
            .collect()
    }

    fn mention(&self, sentence: &Sentence, chars: &[char], start: usize, end: usize, idx: usize) -> EntityMention {
        let entry = &self.entries[idx];
        let surface: String = chars[start..end].iter().collect();
        match self.options.entity_class {
            EntityClass::Food => EntityMention {
                sent_id: sentence.sent_id.clone(),
                start,
                end,
                surface,
                entity_class: EntityClass::Food,
                source: match entry.name_kind {
                    NameKind::Common => MentionSource::FoodbCommon,
                    NameKind::Scientific => MentionSource::FoodbScientific,
                },
                links: Links {
                    pubchem: None,
                    foodb: Some(entry.concept_id.clone()),
                    itis: entry.itis.clone(),
                    wikipedia: entry.wikipedia.clone(),
                    ncbit: entry.ncbit.clone(),
                },
                food_group: entry.food_group.clone(),
                food_subgroup: entry.food_subgroup.clone(),
            },
            EntityClass::Chemical => EntityMention {
                sent_id: sentence.sent_id.clone(),
                start,
                end,
                surface,
                entity_class: EntityClass::Chemical,
                source: MentionSource::ChemicalDict,
                links: Links {
                    pubchem: Some(entry.concept_id.clone()),
                    ..Links::default()
                },
                food_group: None,
                food_subgroup: None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaz(surfaces: &[&str]) -> Vec<GazetteerEntry> {
        surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| GazetteerEntry::new(*s, format!("FOOD{i:05}"), NameKind::Common))
            .collect()
    }

    fn sentence(text: &str) -> Sentence {
        Sentence {
            sent_id: "1#0".into(),
            doc_id: "1".into(),
            text: text.into(),
            start: 0,
            end: text.chars().count(),
        }
    }

    fn spans(m: &Matcher, text: &str) -> Vec<(usize, usize)> {
        m.find_spans(text).into_iter().map(|(s, e, _)| (s, e)).collect()
    }

    #[test]
    fn empty_gazetteer_rejected() {
        assert!(matches!(build_matcher(&[]), Err(Error::Gazetteer(_))));
    }

    #[test]
    fn duplicates_listed() {
        let err = build_matcher(&gaz(&["mango", "Mango", "kiwi"])).unwrap_err();
        assert!(err.to_string().contains("Mango"), "{err}");
        let mut g = gaz(&["mango"]);
        g.push(GazetteerEntry::new("mango", "X", NameKind::Scientific));
        assert!(build_matcher(&g).is_ok());
    }

    #[test]
    fn single_entry_boundaries() {
        let m = build_matcher(&gaz(&["mango"])).unwrap();
        assert!(m.accepts("mango") && m.accepts("Mango"));
        assert!(!m.accepts("mangoes"));
        assert_eq!(spans(&m, "Mango and mango."), [(0, 5), (10, 15)]);
        assert!(spans(&m, "mangoes are sweet").is_empty());
        assert!(spans(&m, "no fruit here").is_empty());
    }

    #[test]
    fn no_match_inside_words() {
        let m = build_matcher(&gaz(&["tea"])).unwrap();
        assert_eq!(spans(&m, "steak with tea"), [(11, 14)]);
    }

    #[test]
    fn longest_match_wins() {
        let m = build_matcher(&gaz(&["olive", "olive oil"])).unwrap();
        let s = sentence(
            "(3,4-Dihydroxyphenyl)ethanol, commonly known as hydroxytyrosol (1), is the major \
             phenolic antioxidant compound in olive oil, and it contributes to the beneficial \
             properties of olive oil.",
        );
        let found = m.match_sentence(&s);
        assert_eq!(found.len(), 2);
        for mention in &found {
            assert_eq!(mention.surface, "olive oil");
            mention.validate(&s.text).unwrap();
        }
    }

    #[test]
    fn plural_flag() {
        let plain = build_matcher(&gaz(&["mango", "tomato"])).unwrap();
        assert!(spans(&plain, "mangos and tomatoes").is_empty());
        let plural = Matcher::new(
            &gaz(&["mango", "tomato"]),
            MatcherOptions {
                strip_plurals: true,
                ..MatcherOptions::default()
            },
        )
        .unwrap();
        assert_eq!(spans(&plural, "mangos and tomatoes"), [(0, 6), (11, 19)]);
    }

    #[test]
    fn mentions_carry_links() {
        let mut g = gaz(&["mango"]);
        g[0].food_group = Some("Fruits".into());
        g[0].itis = Some("28803".into());
        let m = build_matcher(&g).unwrap();
        let found = m.match_sentence(&sentence("Mango pulp"));
        assert_eq!(found[0].surface, "Mango");
        assert_eq!(found[0].links.foodb.as_deref(), Some("FOOD00000"));
        assert_eq!(found[0].links.itis.as_deref(), Some("28803"));
        assert_eq!(found[0].food_group.as_deref(), Some("Fruits"));
        assert_eq!(found[0].source, MentionSource::FoodbCommon);

        let chem = Matcher::new(
            &[GazetteerEntry::new("MPG", "CID123", NameKind::Common)],
            MatcherOptions {
                entity_class: EntityClass::Chemical,
                strip_plurals: false,
            },
        )
        .unwrap();
        let found = chem.match_sentence(&sentence("(MPG) is a glycoside"));
        assert_eq!((found[0].start, found[0].end), (1, 4));
        assert_eq!(found[0].links.pubchem.as_deref(), Some("CID123"));
        assert_eq!(found[0].food_group, None);
    }
}

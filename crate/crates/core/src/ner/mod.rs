//! Food and chemical mention extraction.
//!
//! Dictionary matching runs over gazetteers built from FooDB names;
//! mentions from external taggers arrive as standoff files. Food mentions
//! are then reconciled by [`food_vote`].

mod automaton;
mod gazetteer;
mod matcher;
mod standoff;
mod vote;

pub use automaton::Automaton;
pub(crate) use gazetteer::csv_err;
pub use gazetteer::{load_gazetteer, GazetteerEntry, NameKind};
pub use matcher::{build_matcher, Matcher, MatcherOptions};
pub use standoff::{export_mentions, import_external_annotations, read_mentions, ImportReport, RejectedRow};
pub use vote::food_vote;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityClass {
    Food,
    Chemical,
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityClass::Food => "food",
            EntityClass::Chemical => "chemical",
        })
    }
}

impl FromStr for EntityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "food" => Ok(EntityClass::Food),
            "chemical" => Ok(EntityClass::Chemical),
            other => Err(format!("unknown entity class {other:?}")),
        }
    }
}

/// Which tagger produced a mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionSource {
    Butter,
    FoodbCommon,
    FoodbScientific,
    Saber,
    /// Chemical gazetteer matching, the native stand-in for SABER.
    ChemicalDict,
    Voted,
}

impl MentionSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MentionSource::Butter => "butter",
            MentionSource::FoodbCommon => "foodb_common",
            MentionSource::FoodbScientific => "foodb_scientific",
            MentionSource::Saber => "saber",
            MentionSource::ChemicalDict => "chemical_dict",
            MentionSource::Voted => "voted",
        }
    }
}

impl fmt::Display for MentionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MentionSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "butter" => MentionSource::Butter,
            "foodb_common" => MentionSource::FoodbCommon,
            "foodb_scientific" => MentionSource::FoodbScientific,
            "saber" => MentionSource::Saber,
            "chemical_dict" => MentionSource::ChemicalDict,
            "voted" => MentionSource::Voted,
            other => return Err(format!("unknown mention source {other:?}")),
        })
    }
}

/// Knowledge-base identifiers attached to a mention.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Links {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pubchem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foodb: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub itis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wikipedia: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ncbit: Option<String>,
}

/// A typed span in a sentence. `start`/`end` are char offsets into the
/// sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    pub sent_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity_class: EntityClass,
    pub source: MentionSource,
    #[serde(default)]
    pub links: Links,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub food_group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub food_subgroup: Option<String>,
}

impl EntityMention {
    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.sent_id == other.sent_id && self.start < other.end && other.start < self.end
    }

    /// Checks offsets and surface against the sentence text, plus the rule
    /// that chemicals carry no food group.
    pub fn validate(&self, sentence_text: &str) -> Result<(), String> {
        let len = crate::text::char_len(sentence_text);
        if self.start >= self.end || self.end > len {
            return Err(format!(
                "span {}..{} out of range for sentence of length {len}",
                self.start, self.end
            ));
        }
        let slice = crate::text::char_slice(sentence_text, self.start, self.end).expect("range checked above");
        if !crate::text::eq_folded(slice, &self.surface) {
            return Err(format!(
                "surface {:?} does not match sentence text {slice:?}",
                self.surface
            ));
        }
        if self.entity_class == EntityClass::Chemical && (self.food_group.is_some() || self.food_subgroup.is_some()) {
            return Err("chemical mention carries a food group".into());
        }
        Ok(())
    }
}

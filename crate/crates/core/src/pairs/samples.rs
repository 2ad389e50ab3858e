//! Labeled sample CSV files for golden and silver corpora.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CandidatePair;
use crate::error::{Error, Result};
use crate::ner::{csv_err, EntityClass, EntityMention, Links, MentionSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Golden,
    Silver,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Golden => "golden",
            Provenance::Silver => "silver",
        })
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "golden" => Ok(Provenance::Golden),
            "silver" => Ok(Provenance::Silver),
            other => Err(format!("provenance {other:?} is not golden or silver")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub pair: CandidatePair,
    pub label: u8,
    pub provenance: Provenance,
}

impl LabeledSample {
    pub fn pair_id(&self) -> &str {
        &self.pair.pair_id
    }

    pub fn text_sample(&self) -> crate::classifier::TextSample {
        crate::classifier::TextSample {
            pair_id: self.pair.pair_id.clone(),
            masked: self.pair.masked_text.clone(),
            label: self.label,
        }
    }
}

/// Header of a sample file. The first ten columns are required on import;
/// the rest may be missing or empty.
pub const SAMPLE_COLUMNS: [&str; 21] = [
    "food",
    "chemical",
    "sentence",
    "food_start",
    "food_end",
    "chem_start",
    "chem_end",
    "masked",
    "label",
    "provenance",
    "pubchem_id",
    "food_group",
    "food_subgroup",
    "foodb_id",
    "itis_id",
    "wikipedia_id",
    "ncbit_id",
    "pair_id",
    "sent_id",
    "food_source",
    "chem_source",
];
const REQUIRED: usize = 10;

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

pub fn export_samples(samples: &[LabeledSample], path: &Path) -> Result<()> {
    crate::corpus::write_atomic(path, &samples_to_csv(samples))
}

pub(crate) fn samples_to_csv(samples: &[LabeledSample]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SAMPLE_COLUMNS).expect("in-memory write");
    for s in samples {
        let p = &s.pair;
        let (f, c) = (&p.food, &p.chemical);
        w.write_record([
            f.surface.as_str(),
            c.surface.as_str(),
            p.sentence.as_str(),
            &f.start.to_string(),
            &f.end.to_string(),
            &c.start.to_string(),
            &c.end.to_string(),
            p.masked_text.as_str(),
            &s.label.to_string(),
            &s.provenance.to_string(),
            opt(&c.links.pubchem),
            opt(&f.food_group),
            opt(&f.food_subgroup),
            opt(&f.links.foodb),
            opt(&f.links.itis),
            opt(&f.links.wikipedia),
            opt(&f.links.ncbit),
            p.pair_id.as_str(),
            p.sent_id.as_str(),
            f.source.as_str(),
            c.source.as_str(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn content_sent_id(sentence: &str) -> String {
    let digest = Sha256::digest(sentence.as_bytes());
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("h{hex}#0")
}

pub fn import_samples(path: &Path) -> Result<Vec<LabeledSample>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let index: Vec<Option<usize>> = SAMPLE_COLUMNS
        .iter()
        .map(|name| headers.iter().position(|h| h == *name))
        .collect();
    let missing: Vec<&str> = SAMPLE_COLUMNS[..REQUIRED]
        .iter()
        .zip(&index)
        .filter(|(_, i)| i.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(Error::format(
            path,
            1,
            format!("missing mandatory columns: {}", missing.join(", ")),
        ));
    }

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let bad = |m: String| Error::format(path, row, m);
        let get = |col: usize| index[col].and_then(|i| record.get(i)).unwrap_or("");
        let get_opt = |col: usize| Some(get(col)).filter(|v| !v.is_empty()).map(str::to_string);
        let num = |col: usize| {
            get(col)
                .parse::<usize>()
                .map_err(|_| bad(format!("{} {:?} is not an offset", SAMPLE_COLUMNS[col], get(col))))
        };
        let label = match get(8) {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("label {other:?} is not 0 or 1"))),
        };
        let provenance: Provenance = get(9).parse().map_err(bad)?;
        let source = |col: usize, default: MentionSource| match get(col) {
            "" => Ok(default),
            s => s.parse::<MentionSource>().map_err(bad),
        };
        let sentence = get(2).to_string();
        let sent_id = get_opt(18).unwrap_or_else(|| content_sent_id(&sentence));
        let food = EntityMention {
            sent_id: sent_id.clone(),
            start: num(3)?,
            end: num(4)?,
            surface: get(0).to_string(),
            entity_class: EntityClass::Food,
            source: source(19, MentionSource::Voted)?,
            links: Links {
                pubchem: None,
                foodb: get_opt(13),
                itis: get_opt(14),
                wikipedia: get_opt(15),
                ncbit: get_opt(16),
            },
            food_group: get_opt(11),
            food_subgroup: get_opt(12),
        };
        let chemical = EntityMention {
            sent_id: sent_id.clone(),
            start: num(5)?,
            end: num(6)?,
            surface: get(1).to_string(),
            entity_class: EntityClass::Chemical,
            source: source(20, MentionSource::Saber)?,
            links: Links {
                pubchem: get_opt(10),
                ..Links::default()
            },
            food_group: None,
            food_subgroup: None,
        };
        for m in [&food, &chemical] {
            m.validate(&sentence)
                .map_err(|e| bad(format!("{} mention: {e}", m.entity_class)))?;
        }
        let pair_id = get_opt(17).unwrap_or_else(|| CandidatePair::make_id(&sent_id, &food, &chemical));
        samples.push(LabeledSample {
            pair: CandidatePair {
                pair_id,
                sent_id,
                sentence,
                food,
                chemical,
                masked_text: get(7).to_string(),
            },
            label,
            provenance,
        });
    }
    Ok(samples)
}

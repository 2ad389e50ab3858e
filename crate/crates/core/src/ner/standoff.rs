//! Standoff annotation files: JSON Lines, one mention per line, referencing
//! sentences by `sent_id` and char offsets.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{EntityClass, EntityMention, Links, MentionSource};
use crate::corpus::write_atomic;
use crate::error::{Error, Result};
use crate::segment::{read_jsonl, to_jsonl, Sentence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportReport {
    pub mentions: Vec<EntityMention>,
    pub rejected: Vec<RejectedRow>,
}

#[derive(Deserialize)]
struct StandoffRow {
    sent_id: String,
    start: usize,
    end: usize,
    surface: String,
    entity_class: String,
    #[serde(default)]
    links: Links,
    #[serde(default)]
    food_group: Option<String>,
    #[serde(default)]
    food_subgroup: Option<String>,
}

/// Import mentions produced by an external tagger. Rows that fail
/// validation are reported and skipped; the rest are kept in file order.
pub fn import_external_annotations(
    path: &Path,
    entity_class: EntityClass,
    source: MentionSource,
    sentences: &[Sentence],
) -> Result<ImportReport> {
    let by_id: HashMap<&str, &Sentence> = sentences.iter().map(|s| (s.sent_id.as_str(), s)).collect();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = ImportReport::default();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = idx + 1;
        match parse_row(&line, entity_class, source, &by_id) {
            Ok(m) => report.mentions.push(m),
            Err(reason) => {
                log::warn!("{}:{row}: rejected: {reason}", path.display());
                report.rejected.push(RejectedRow { row, reason });
            }
        }
    }
    Ok(report)
}

fn parse_row(
    line: &str,
    entity_class: EntityClass,
    source: MentionSource,
    sentences: &HashMap<&str, &Sentence>,
) -> std::result::Result<EntityMention, String> {
    let row: StandoffRow = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let class: EntityClass = row.entity_class.parse()?;
    if class != entity_class {
        return Err(format!("class mismatch: expected {entity_class}, found {class}"));
    }
    let sentence = sentences
        .get(row.sent_id.as_str())
        .ok_or_else(|| format!("unknown sent_id {}", row.sent_id))?;
    let mention = EntityMention {
        sent_id: row.sent_id,
        start: row.start,
        end: row.end,
        surface: row.surface,
        entity_class,
        source,
        links: row.links,
        food_group: row.food_group,
        food_subgroup: row.food_subgroup,
    };
    mention.validate(&sentence.text)?;
    Ok(mention)
}

pub fn export_mentions(mentions: &[EntityMention], path: &Path) -> Result<()> {
    write_atomic(path, &to_jsonl(mentions))
}

/// Read a mention file written by [`export_mentions`] without re-validating
/// against sentences.
pub fn read_mentions(path: &Path) -> Result<Vec<EntityMention>> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences() -> Vec<Sentence> {
        vec![Sentence {
            sent_id: "7#0".into(),
            doc_id: "7".into(),
            text: "MPG exists in Moringa oleifera seeds".into(),
            start: 0,
            end: 36,
        }]
    }

    fn write(dir: &Path, rows: &[&str]) -> std::path::PathBuf {
        let path = dir.join("ann.jsonl");
        std::fs::write(&path, rows.join("\n") + "\n").unwrap();
        path
    }

    #[test]
    fn valid_rows_pass_through() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            &[
                r#"{"sent_id":"7#0","start":0,"end":3,"surface":"MPG","entity_class":"chemical","source":"saber","links":{"pubchem":"123"}}"#,
                r#"{"sent_id":"7#0","start":14,"end":21,"surface":"moringa","entity_class":"chemical","source":"saber","links":{}}"#,
                r#"{"sent_id":"7#0","start":31,"end":36,"surface":"seeds","entity_class":"chemical","source":"saber"}"#,
            ],
        );
        let r = import_external_annotations(&path, EntityClass::Chemical, MentionSource::Saber, &sentences()).unwrap();
        assert_eq!(r.mentions.len(), 3);
        assert!(r.rejected.is_empty());
        assert_eq!(r.mentions[0].links.pubchem.as_deref(), Some("123"));
    }

    #[test]
    fn invalid_rows_reported_by_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            &[
                r#"{"sent_id":"7#0","start":0,"end":3,"surface":"MPG","entity_class":"chemical"}"#,
                r#"{"sent_id":"7#0","start":31,"end":40,"surface":"seeds","entity_class":"chemical"}"#,
                r#"{"sent_id":"9#0","start":0,"end":3,"surface":"MPG","entity_class":"chemical"}"#,
                r#"{"sent_id":"7#0","start":0,"end":3,"surface":"MPG","entity_class":"food"}"#,
                r#"{"sent_id":"7#0","start":0,"end":3,"surface":"XYZ","entity_class":"chemical"}"#,
                r#"not json"#,
            ],
        );
        let r = import_external_annotations(&path, EntityClass::Chemical, MentionSource::Saber, &sentences()).unwrap();
        assert_eq!(r.mentions.len(), 1);
        let rows: Vec<_> = r.rejected.iter().map(|x| x.row).collect();
        assert_eq!(rows, [2, 3, 4, 5, 6]);
        assert!(r.rejected[0].reason.contains("out of range"));
        assert!(r.rejected[1].reason.contains("unknown sent_id"));
        assert!(r.rejected[2].reason.contains("class mismatch"));
    }

    #[test]
    fn export_then_import_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let mention = EntityMention {
            sent_id: "7#0".into(),
            start: 14,
            end: 30,
            surface: "Moringa oleifera".into(),
            entity_class: EntityClass::Food,
            source: MentionSource::Butter,
            links: Links {
                foodb: Some("FOOD00601".into()),
                ..Links::default()
            },
            food_group: Some("Vegetables".into()),
            food_subgroup: None,
        };
        let path = dir.path().join("out.jsonl");
        export_mentions(std::slice::from_ref(&mention), &path).unwrap();
        let r = import_external_annotations(&path, EntityClass::Food, MentionSource::Butter, &sentences()).unwrap();
        assert_eq!(r.mentions, vec![mention.clone()]);
        assert_eq!(read_mentions(&path).unwrap(), vec![mention]);
    }
}

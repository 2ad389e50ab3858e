use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameKind {
    Common,
    Scientific,
}

/// One dictionary surface form and the concept it links to. For food
/// gazetteers `concept_id` is a FooDB id; for the chemical gazetteer it is
/// a PubChem id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub surface: String,
    pub concept_id: String,
    pub name_kind: NameKind,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub food_group: Option<String>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub food_subgroup: Option<String>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub itis: Option<String>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub wikipedia: Option<String>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub ncbit: Option<String>,
}

impl GazetteerEntry {
    pub fn new(surface: impl Into<String>, concept_id: impl Into<String>, name_kind: NameKind) -> Self {
        GazetteerEntry {
            surface: surface.into(),
            concept_id: concept_id.into(),
            name_kind,
            food_group: None,
            food_subgroup: None,
            itis: None,
            wikipedia: None,
            ncbit: None,
        }
    }
}

pub(crate) fn empty_as_none<'de, D>(d: D) -> std::result::Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let v: Option<String> = Option::deserialize(d)?;
    Ok(v.filter(|s| !s.trim().is_empty()))
}

/// Reads a gazetteer CSV with header
/// `surface,concept_id,name_kind,food_group,food_subgroup,itis,wikipedia,ncbit`.
pub fn load_gazetteer(path: &Path) -> Result<Vec<GazetteerEntry>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    for required in ["surface", "concept_id", "name_kind"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::format(path, 1, format!("missing column {required}")));
        }
    }
    let mut entries = Vec::new();
    for (idx, row) in reader.deserialize::<GazetteerEntry>().enumerate() {
        let entry = row.map_err(|e| Error::format(path, idx + 2, e))?;
        if entry.surface.trim().is_empty() {
            return Err(Error::format(path, idx + 2, "empty surface"));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, line, format!("{other:?}")),
    }
}

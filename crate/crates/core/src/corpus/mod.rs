//! PubMed abstracts and the on-disk corpus file.
//!
//! A corpus file is JSON Lines: one header object followed by one
//! [`Document`] per line, sorted by document id.

mod fetch;
mod pubmed;

pub use fetch::{
    cache_key, fetch_abstracts, FetchOptions, HttpResponse, RateLimiter, Transport, UreqTransport, API_KEY_ENV,
};
pub use pubmed::parse_pubmed_payload;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CORPUS_FORMAT: &str = "relex-corpus";
pub const CORPUS_VERSION: u32 = 1;

/// One PubMed abstract and its metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: Option<i32>,
    pub journal: Option<String>,
    pub mesh_terms: Vec<String>,
}

impl Document {
    /// Documents without abstract text stay in the corpus for auditing but
    /// are not segmented.
    pub fn is_skippable(&self) -> bool {
        self.abstract_text.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    pub query: String,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusHeader {
    format: String,
    version: u32,
    query: String,
    retrieved_at: DateTime<Utc>,
    documents: usize,
}

/// Numeric ids (PMIDs) sort numerically and precede any non-numeric ids.
fn doc_id_order(a: &str, b: &str) -> Ordering {
    let numeric = |s: &str| !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit());
    match (numeric(a), numeric(b)) {
        (true, true) => {
            let (ta, tb) = (a.trim_start_matches('0'), b.trim_start_matches('0'));
            ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb)).then_with(|| a.cmp(b))
        }
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.cmp(b),
    }
}

impl Corpus {
    /// Builds a corpus, sorting documents by id. Fails on empty or
    /// duplicate ids.
    pub fn new(mut documents: Vec<Document>, query: impl Into<String>, retrieved_at: DateTime<Utc>) -> Result<Self> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if doc.doc_id.is_empty() {
                return Err(Error::Validation("document with empty doc_id".into()));
            }
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::Validation(format!("duplicate doc_id {} in corpus", doc.doc_id)));
            }
        }
        documents.sort_by(|a, b| doc_id_order(&a.doc_id, &b.doc_id));
        Ok(Corpus {
            documents,
            query: query.into(),
            retrieved_at,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn skippable_count(&self) -> usize {
        self.documents.iter().filter(|d| d.is_skippable()).count()
    }
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let header = CorpusHeader {
        format: CORPUS_FORMAT.to_string(),
        version: CORPUS_VERSION,
        query: corpus.query.clone(),
        retrieved_at: corpus.retrieved_at,
        documents: corpus.documents.len(),
    };
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &header).expect("header serializes");
    out.push(b'\n');
    for doc in &corpus.documents {
        serde_json::to_writer(&mut out, doc).expect("document serializes");
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::format(path, 1, "empty corpus file")),
    };
    let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| Error::format(path, 1, e))?;
    if raw.get("format").and_then(|f| f.as_str()) != Some(CORPUS_FORMAT) {
        return Err(Error::Version {
            found: raw.get("format").map(|f| f.to_string()).unwrap_or_default(),
            expected: CORPUS_FORMAT.to_string(),
        });
    }
    match raw.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(CORPUS_VERSION) => {}
        other => {
            return Err(Error::Version {
                found: other.map(|v| v.to_string()).unwrap_or_else(|| "none".into()),
                expected: CORPUS_VERSION.to_string(),
            })
        }
    }
    let header: CorpusHeader = serde_json::from_value(raw).map_err(|e| Error::format(path, 1, e))?;

    let mut documents = Vec::with_capacity(header.documents);
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::format(path, idx + 2, e))?;
        documents.push(doc);
    }
    if documents.len() != header.documents {
        return Err(Error::format(
            path,
            documents.len() + 1,
            format!(
                "truncated corpus: header declares {} documents, found {}",
                header.documents,
                documents.len()
            ),
        ));
    }
    Corpus::new(documents, header.query, header.retrieved_at)
}

/// Write through a temporary file in the same directory and rename over
/// the target.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

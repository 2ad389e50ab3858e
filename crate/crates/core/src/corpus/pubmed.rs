//! Parser for PubMed `efetch` XML (`PubmedArticleSet`).

use roxmltree::{Document as XmlDocument, Node, ParsingOptions};

use super::Document;
use crate::error::{Error, Result};

/// Parse one efetch response into documents, preserving record order.
/// Optional metadata (year, journal) is left absent when the record lacks it.
pub fn parse_pubmed_payload(payload: &[u8]) -> Result<Vec<Document>> {
    let text = std::str::from_utf8(payload).map_err(|e| Error::Payload {
        offset: e.valid_up_to(),
        message: "payload is not valid UTF-8".into(),
    })?;
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let xml = XmlDocument::parse_with_options(text, opts).map_err(|e| {
        let pos = e.pos();
        Error::Payload {
            offset: byte_offset(text, pos.row as usize, pos.col as usize),
            message: e.to_string(),
        }
    })?;

    let root = xml.root_element();
    if root.tag_name().name() != "PubmedArticleSet" {
        return Err(Error::Payload {
            offset: root.range().start,
            message: format!("expected <PubmedArticleSet>, found <{}>", root.tag_name().name()),
        });
    }

    root.children()
        .filter(|n| n.has_tag_name("PubmedArticle"))
        .enumerate()
        .map(|(idx, article)| parse_article(article, idx))
        .collect()
}

fn parse_article(article: Node, idx: usize) -> Result<Document> {
    let citation = child(article, "MedlineCitation").ok_or_else(|| Error::Record {
        doc_id: format!("record #{}", idx + 1),
        message: "missing <MedlineCitation>".into(),
    })?;
    let doc_id = child(citation, "PMID")
        .map(|n| collect_text(n))
        .filter(|id| !id.is_empty())
        .ok_or_else(|| Error::Record {
            doc_id: format!("record #{}", idx + 1),
            message: "missing <PMID>".into(),
        })?;
    let record_err = |message: String| Error::Record {
        doc_id: doc_id.clone(),
        message,
    };

    let art = child(citation, "Article").ok_or_else(|| record_err("missing <Article>".into()))?;
    let title = child(art, "ArticleTitle")
        .map(collect_text)
        .ok_or_else(|| record_err("missing <ArticleTitle>".into()))?;

    let abstract_text = child(art, "Abstract")
        .map(|abs| {
            abs.children()
                .filter(|n| n.has_tag_name("AbstractText"))
                .map(collect_text)
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default();

    let journal_node = child(art, "Journal");
    let journal = journal_node
        .and_then(|j| child(j, "Title"))
        .map(collect_text)
        .filter(|s| !s.is_empty());

    let pub_date = journal_node
        .and_then(|j| child(j, "JournalIssue"))
        .and_then(|ji| child(ji, "PubDate"));
    let year = match pub_date {
        None => None,
        Some(date) => {
            if let Some(y) = child(date, "Year") {
                let raw = collect_text(y);
                Some(
                    raw.parse::<i32>()
                        .map_err(|_| record_err(format!("non-numeric <Year> {raw:?}")))?,
                )
            } else {
                child(date, "MedlineDate").and_then(|m| {
                    let raw = collect_text(m);
                    raw.get(..4).and_then(|y| y.parse::<i32>().ok())
                })
            }
        }
    };

    let mesh_terms = child(citation, "MeshHeadingList")
        .map(|list| {
            list.children()
                .filter(|n| n.has_tag_name("MeshHeading"))
                .filter_map(|h| child(h, "DescriptorName"))
                .map(collect_text)
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default();

    Ok(Document {
        doc_id,
        title,
        abstract_text,
        year,
        journal,
        mesh_terms,
    })
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

/// All descendant text with whitespace runs collapsed; inline markup such as
/// `<i>` or `<sub>` is flattened.
fn collect_text(node: Node) -> String {
    let mut raw = String::new();
    for d in node.descendants().filter(|d| d.is_text()) {
        raw.push_str(d.text().unwrap_or_default());
    }
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// roxmltree reports 1-based (row, col) with col counted in chars.
fn byte_offset(text: &str, row: usize, col: usize) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == row {
            return offset
                + line
                    .char_indices()
                    .nth(col.saturating_sub(1))
                    .map(|(b, _)| b)
                    .unwrap_or(line.len());
        }
        offset += line.len();
    }
    text.len()
}

//! Rule-based sentence splitting and tokenization.
//!
//! Offsets are char offsets: sentence spans index into the abstract, token
//! spans into the sentence.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_atomic, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: String,
    pub doc_id: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Words ending in a period that do not end a sentence. Botanical authority
/// abbreviations show up constantly in food literature.
const ABBREVIATIONS: &[&str] = &[
    "l.", "thunb.", "spp.", "sp.", "subsp.", "var.", "cv.", "al.", "e.g.", "i.e.", "etc.", "vs.", "fig.", "figs.",
    "approx.", "ca.", "no.", "nos.", "dr.", "lam.", "linn.", "mill.", "dc.", "sect.", "ssp.", "f.", "ref.", "refs.",
    "eq.", "resp.",
];

const TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &[')', ']', '}', '"', '\'', '\u{201d}', '\u{2019}'];

fn is_abbreviation(word: &[char]) -> bool {
    let start = word
        .iter()
        .position(|c| !matches!(c, '(' | '[' | '{' | '"' | '\u{201c}'))
        .unwrap_or(word.len());
    let w: String = word[start..].iter().map(|c| crate::text::fold_char(*c)).collect();
    ABBREVIATIONS.contains(&w.as_str())
}

/// Char spans of the sentences in `text`.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut seg_start: Option<usize> = None;
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if seg_start.is_none() && !c.is_whitespace() {
            seg_start = Some(i);
        }
        if TERMINALS.contains(&c) {
            let mut j = i + 1;
            while j < n && CLOSERS.contains(&chars[j]) {
                j += 1;
            }
            if j == n || chars[j].is_whitespace() {
                let word_start = chars[..=i].iter().rposition(|c| c.is_whitespace()).map_or(0, |p| p + 1);
                let abbreviation = c == '.' && is_abbreviation(&chars[word_start..=i]);
                let next = chars[j..].iter().find(|c| !c.is_whitespace());
                let continues = next.is_some_and(|c| c.is_lowercase());
                if !abbreviation && !continues {
                    if let Some(s) = seg_start.take() {
                        spans.push((s, j));
                    }
                    i = j;
                    continue;
                }
            }
        }
        i += 1;
    }
    if let Some(s) = seg_start {
        let end = chars.iter().rposition(|c| !c.is_whitespace()).map_or(n, |p| p + 1);
        spans.push((s, end));
    }
    spans
}

/// Split a document's abstract into sentences with ids `docid#index`.
pub fn split_sentences(doc: &Document) -> Vec<Sentence> {
    let chars: Vec<char> = doc.abstract_text.chars().collect();
    sentence_spans(&doc.abstract_text)
        .into_iter()
        .enumerate()
        .map(|(idx, (start, end))| Sentence {
            sent_id: format!("{}#{}", doc.doc_id, idx),
            doc_id: doc.doc_id.clone(),
            text: chars[start..end].iter().collect(),
            start,
            end,
        })
        .collect()
}

fn is_open(c: char) -> bool {
    matches!(c, '(' | '[' | '{')
}

fn is_close(c: char) -> bool {
    matches!(c, ')' | ']' | '}')
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201c}' | '\u{201d}' | '\u{2018}' | '\u{2019}')
}

fn is_trailing_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?')
}

/// Index of the bracket closing the one at `s`, if it lies before `e`.
fn matching_close(chars: &[char], s: usize, e: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, &c) in chars.iter().enumerate().take(e).skip(s) {
        if is_open(c) {
            depth += 1;
        } else if is_close(c) {
            depth = depth.checked_sub(1)?;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn matching_open(chars: &[char], s: usize, e: usize) -> Option<usize> {
    let mut depth = 0usize;
    for i in (s..e).rev() {
        let c = chars[i];
        if is_close(c) {
            depth += 1;
        } else if is_open(c) {
            depth = depth.checked_sub(1)?;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Peel edge punctuation off a whitespace-delimited chunk. Internal glue
/// (`-`, `,`, balanced brackets) stays, so chemical names such as
/// `(3,4-Dihydroxyphenyl)ethanol` remain one token.
fn split_chunk(chars: &[char], mut s: usize, mut e: usize, out: &mut Vec<(usize, usize)>) {
    let mut lead = Vec::new();
    let mut trail = Vec::new();
    while s < e {
        let (first, last) = (chars[s], chars[e - 1]);
        if e - s >= 2 && is_open(first) && matching_close(chars, s, e) == Some(e - 1) {
            lead.push(s);
            trail.push(e - 1);
            s += 1;
            e -= 1;
        } else if (is_open(first) && matching_close(chars, s, e).is_none()) || is_quote(first) {
            lead.push(s);
            s += 1;
        } else if is_trailing_punct(last) || is_quote(last) || (is_close(last) && matching_open(chars, s, e).is_none())
        {
            trail.push(e - 1);
            e -= 1;
        } else {
            break;
        }
    }
    out.extend(lead.into_iter().map(|p| (p, p + 1)));
    if s < e {
        out.push((s, e));
    }
    out.extend(trail.into_iter().rev().map(|p| (p, p + 1)));
}

/// Char spans of the tokens in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_chunk(&chars, start, i, &mut spans);
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    token_spans(text)
        .into_iter()
        .map(|(start, end)| Token {
            text: chars[start..end].iter().collect(),
            start,
            end,
        })
        .collect()
}

/// Token start and end positions of a text, for boundary checks.
#[derive(Debug, Clone)]
pub struct Boundaries {
    starts: Vec<bool>,
    ends: Vec<bool>,
}

impl Boundaries {
    pub fn of(text: &str) -> Self {
        let n = crate::text::char_len(text);
        let mut starts = vec![false; n + 1];
        let mut ends = vec![false; n + 1];
        for (s, e) in token_spans(text) {
            starts[s] = true;
            ends[e] = true;
        }
        Boundaries { starts, ends }
    }

    pub fn is_start(&self, pos: usize) -> bool {
        self.starts.get(pos).copied().unwrap_or(false)
    }

    pub fn is_end(&self, pos: usize) -> bool {
        self.ends.get(pos).copied().unwrap_or(false)
    }
}

pub fn write_sentences(sentences: &[Sentence], path: &Path) -> Result<()> {
    write_atomic(path, &to_jsonl(sentences))
}

pub fn read_sentences(path: &Path) -> Result<Vec<Sentence>> {
    read_jsonl(path)
}

pub(crate) fn to_jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row).expect("row serializes");
        out.push(b'\n');
    }
    out
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::format(path, idx + 1, e))?);
    }
    Ok(rows)
}

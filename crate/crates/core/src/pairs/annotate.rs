//! Terminal labeler for golden samples.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use super::samples::samples_to_csv;
use super::{import_samples, CandidatePair, LabeledSample, Provenance};
use crate::error::{Error, Result};
use crate::text::char_slice;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnnotateSummary {
    pub positive: usize,
    pub negative: usize,
    pub skipped: usize,
    /// Pairs already present in the golden file.
    pub already_labeled: usize,
    /// Pairs never shown because the session ended.
    pub remaining: usize,
}

fn highlight(p: &CandidatePair) -> String {
    let mut spans = [
        (p.food.start, p.food.end, "[", "]"),
        (p.chemical.start, p.chemical.end, "{", "}"),
    ];
    spans.sort_by_key(|s| s.0);
    let n = p.sentence.chars().count();
    let mut out = String::new();
    let mut at = 0;
    for (s, e, open, close) in spans {
        out.push_str(char_slice(&p.sentence, at, s).unwrap_or(""));
        out.push_str(open);
        out.push_str(char_slice(&p.sentence, s, e).unwrap_or(""));
        out.push_str(close);
        at = e;
    }
    out.push_str(char_slice(&p.sentence, at, n).unwrap_or(""));
    out
}

/// Append one row, replacing the file atomically so an interrupted
/// session never leaves a partial line.
fn append_row(golden: &Path, sample: &LabeledSample) -> Result<()> {
    let fresh = samples_to_csv(std::slice::from_ref(sample));
    let bytes = match std::fs::read(golden) {
        Ok(existing) if !existing.is_empty() => {
            let row_start = fresh.iter().position(|b| *b == b'\n').map_or(0, |i| i + 1);
            let mut b = existing;
            if b.last() != Some(&b'\n') {
                b.push(b'\n');
            }
            b.extend_from_slice(&fresh[row_start..]);
            b
        }
        Ok(_) => fresh,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => fresh,
        Err(e) => return Err(Error::io(golden, e)),
    };
    crate::corpus::write_atomic(golden, &bytes)
}

/// Present each unlabeled pair and read a key per line: `y` (contains),
/// `n` (does not), `s` (skip), `q` (quit). End of input quits.
pub fn annotate(
    pairs: &[CandidatePair],
    golden: &Path,
    mut input: impl BufRead,
    mut output: impl Write,
) -> Result<AnnotateSummary> {
    let io_err = |e: std::io::Error| Error::io("<terminal>", e);
    let done: HashSet<String> = if golden.exists() {
        import_samples(golden)?.into_iter().map(|s| s.pair.pair_id).collect()
    } else {
        HashSet::new()
    };
    let mut summary = AnnotateSummary::default();
    let todo: Vec<&CandidatePair> = pairs
        .iter()
        .filter(|p| {
            let seen = done.contains(&p.pair_id);
            summary.already_labeled += usize::from(seen);
            !seen
        })
        .collect();

    for (i, pair) in todo.iter().enumerate() {
        writeln!(
            output,
            "\n[{}/{}] {}\n  food [{}]  chemical {{{}}}",
            i + 1,
            todo.len(),
            highlight(pair),
            pair.food.surface,
            pair.chemical.surface
        )
        .map_err(io_err)?;
        let label = loop {
            write!(output, "contains? (y/n/s/q): ").map_err(io_err)?;
            output.flush().map_err(io_err)?;
            let mut line = String::new();
            if input.read_line(&mut line).map_err(io_err)? == 0 {
                break None;
            }
            match line.trim().to_lowercase().as_str() {
                "y" => break Some(Some(1)),
                "n" => break Some(Some(0)),
                "s" => break Some(None),
                "q" => break None,
                _ => writeln!(output, "please answer y, n, s or q").map_err(io_err)?,
            }
        };
        match label {
            None => {
                summary.remaining = todo.len() - i;
                break;
            }
            Some(None) => summary.skipped += 1,
            Some(Some(label)) => {
                append_row(
                    golden,
                    &LabeledSample {
                        pair: (*pair).clone(),
                        label,
                        provenance: Provenance::Golden,
                    },
                )?;
                if label == 1 {
                    summary.positive += 1;
                } else {
                    summary.negative += 1;
                }
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ner::EntityClass;
    use crate::pairs::{extract_pairs, tests::mention};
    use crate::segment::Sentence;

    fn pairs() -> Vec<CandidatePair> {
        let t = "Mango and guava contain mangiferin and quercetin";
        let s = Sentence {
            sent_id: "s".into(),
            doc_id: "d".into(),
            text: t.into(),
            start: 0,
            end: t.chars().count(),
        };
        let m = vec![
            mention(t, "Mango", 0, EntityClass::Food),
            mention(t, "guava", 0, EntityClass::Food),
            mention(t, "mangiferin", 0, EntityClass::Chemical),
            mention(t, "quercetin", 0, EntityClass::Chemical),
        ];
        extract_pairs(&s, &m)
    }

    #[test]
    fn keystrokes_map_to_rows() {
        let dir = tempfile::tempdir().unwrap();
        let golden = dir.path().join("golden.csv");
        let ps = pairs();
        let mut out = Vec::new();
        let summary = annotate(&ps, &golden, "y\nwhat\nn\ns\nq\n".as_bytes(), &mut out).unwrap();
        assert_eq!(
            summary,
            AnnotateSummary {
                positive: 1,
                negative: 1,
                skipped: 1,
                already_labeled: 0,
                remaining: 1
            }
        );
        let shown = String::from_utf8(out).unwrap();
        assert!(shown.contains("[Mango] and guava contain {mangiferin} and quercetin"));
        assert!(shown.contains("please answer"));
        let rows = import_samples(&golden).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].label, rows[1].label), (1, 0));
        assert!(rows.iter().all(|r| r.provenance == Provenance::Golden));

        let summary = annotate(&ps, &golden, "y\n".as_bytes(), Vec::new()).unwrap();
        assert_eq!(summary.already_labeled, 2);
        assert_eq!(summary.positive, 1);
        assert_eq!(import_samples(&golden).unwrap().len(), 3);
    }

    #[test]
    fn eof_stops_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let golden = dir.path().join("golden.csv");
        let summary = annotate(&pairs(), &golden, "".as_bytes(), Vec::new()).unwrap();
        assert_eq!(summary.remaining, 4);
        assert!(!golden.exists());
    }
}

//! CoNLL-style column file parsing with optional BIO repair.
//!
//! Sentences are blank-line separated; columns are whitespace
//! separated; the token is column 0 and the tag column is configured.
//! Every data line must carry the same column count (set by the first
//! line), so truncated or shifted rows fail loudly instead of sliding
//! into the wrong column.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

use super::TaggedSequence;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    /// 0-based tag column; the token is always column 0.
    pub tag_column: usize,
    /// Repair BIO violations (I- after O or after a different type
    /// becomes B-) and count them.
    pub bio_repair: bool,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec { tag_column: 1, bio_repair: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub sentences: Vec<TaggedSequence>,
    /// BIO violations rewritten during parsing.
    pub repairs: u64,
}

fn bio_type(tag: &str) -> Option<&str> {
    tag.strip_prefix("B-").or_else(|| tag.strip_prefix("I-"))
}

/// Rewrites invalid `I-` openers in place; returns the repair count.
fn repair_bio(tags: &mut [String]) -> u64 {
    let mut repairs = 0;
    for i in 0..tags.len() {
        let Some(ty) = tags[i].strip_prefix("I-").map(str::to_string) else { continue };
        let continues = i > 0
            && bio_type(&tags[i - 1]).is_some_and(|prev| prev == ty);
        if !continues {
            tags[i] = format!("B-{ty}");
            repairs += 1;
        }
    }
    repairs
}

pub fn parse_conll_reader<R: BufRead>(reader: R, spec: &ColumnSpec) -> Result<ParsedCorpus> {
    let mut sentences = Vec::new();
    let mut repairs = 0;
    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;

    let mut flush = |tokens: &mut Vec<String>, tags: &mut Vec<String>| -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        if spec.bio_repair {
            repairs += repair_bio(tags);
        }
        sentences.push(TaggedSequence::new(std::mem::take(tokens), std::mem::take(tags))?);
        Ok(())
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags)?;
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let expected = *width.get_or_insert(cols.len());
        if cols.len() != expected {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("ragged row: {} columns where {expected} expected", cols.len()),
            });
        }
        if cols.len() <= spec.tag_column {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!(
                    "tag column {} missing in a {}-column row",
                    spec.tag_column,
                    cols.len()
                ),
            });
        }
        tokens.push(cols[0].to_string());
        tags.push(cols[spec.tag_column].to_string());
    }
    flush(&mut tokens, &mut tags)?;
    Ok(ParsedCorpus { sentences, repairs })
}

pub fn parse_conll<P: AsRef<Path>>(path: P, spec: &ColumnSpec) -> Result<ParsedCorpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_conll_reader(std::io::BufReader::new(file), spec).map_err(|e| e.with_path(path))
}

//! BIO span extraction and its inverse rendering.

use super::TaggedSequence;

/// One typed entity mention; `end` is exclusive and `surface` is the
/// token slice joined by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntitySpan {
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
    pub surface: String,
}

/// Maximal B-…I-… runs of one type. Assumes repaired tags: a bare I-
/// here extends nothing and is skipped rather than guessed at.
pub fn extract_spans(seq: &TaggedSequence, sentence_index: usize) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (i, tag) in seq.tags.iter().enumerate() {
        let next: Option<(usize, String)> = if let Some(ty) = tag.strip_prefix("B-") {
            Some((i, ty.to_string()))
        } else if let Some(ty) = tag.strip_prefix("I-") {
            match open {
                Some((start, ref open_ty)) if open_ty == ty => Some((start, ty.to_string())),
                _ => None,
            }
        } else {
            None
        };
        if let Some((start, ref ty)) = open {
            let continues = matches!(next, Some((s, _)) if s == start);
            if !continues {
                spans.push(make_span(seq, sentence_index, start, i, ty));
            }
        }
        open = next;
    }
    if let Some((start, ty)) = open {
        spans.push(make_span(seq, sentence_index, start, seq.tags.len(), &ty));
    }
    spans
}

fn make_span(
    seq: &TaggedSequence,
    sentence_index: usize,
    start: usize,
    end: usize,
    ty: &str,
) -> EntitySpan {
    EntitySpan {
        sentence_index,
        start,
        end,
        entity_type: ty.to_string(),
        surface: seq.tokens[start..end].join(" "),
    }
}

/// Spans for a whole corpus, sentence indices assigned by position.
pub fn extract_spans_corpus(sentences: &[TaggedSequence]) -> Vec<EntitySpan> {
    sentences
        .iter()
        .enumerate()
        .flat_map(|(i, s)| extract_spans(s, i))
        .collect()
}

/// Renders spans back to BIO tags over `len` tokens; the inverse of
/// `extract_spans` on well-formed input.
pub fn render_bio(spans: &[EntitySpan], len: usize) -> Vec<String> {
    let mut tags = vec!["O".to_string(); len];
    for span in spans {
        tags[span.start] = format!("B-{}", span.entity_type);
        for tag in tags.iter_mut().take(span.end).skip(span.start + 1) {
            *tag = format!("I-{}", span.entity_type);
        }
    }
    tags
}

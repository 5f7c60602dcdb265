//! Trivial reference predictors so the harness can be exercised end to
//! end without a neural model: a most-frequent-tag tagger and a
//! majority-class classifier. Ties break to the lexicographically
//! smallest tag or label, keeping every prediction reproducible.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

use super::TaggedSequence;

fn argmax_count(counts: &BTreeMap<String, u64>) -> Option<&str> {
    let mut best: Option<(&str, u64)> = None;
    for (tag, &n) in counts {
        // Strict > keeps the first (smallest) key on ties.
        if best.is_none_or(|(_, bn)| n > bn) {
            best = Some((tag, n));
        }
    }
    best.map(|(t, _)| t)
}

/// Per-token most-frequent-tag model with a global fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MftTagger {
    table: HashMap<String, String>,
    fallback: String,
}

impl MftTagger {
    pub fn train(corpus: &[TaggedSequence]) -> Result<MftTagger> {
        let mut per_token: HashMap<String, BTreeMap<String, u64>> = HashMap::new();
        let mut global: BTreeMap<String, u64> = BTreeMap::new();
        for sent in corpus {
            for (token, tag) in sent.tokens.iter().zip(&sent.tags) {
                *per_token.entry(token.clone()).or_default().entry(tag.clone()).or_insert(0) +=
                    1;
                *global.entry(tag.clone()).or_insert(0) += 1;
            }
        }
        let Some(fallback) = argmax_count(&global).map(str::to_string) else {
            return Err(Error::invalid("cannot train a tagger on an empty corpus"));
        };
        let table = per_token
            .into_iter()
            .map(|(token, counts)| {
                let tag = argmax_count(&counts).expect("non-empty counts").to_string();
                (token, tag)
            })
            .collect();
        Ok(MftTagger { table, fallback })
    }

    pub fn predict(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .map(|t| self.table.get(t).unwrap_or(&self.fallback).clone())
            .collect()
    }

    pub fn predict_corpus(&self, corpus: &[TaggedSequence]) -> Vec<TaggedSequence> {
        corpus
            .iter()
            .map(|s| TaggedSequence {
                tokens: s.tokens.clone(),
                tags: self.predict(&s.tokens),
            })
            .collect()
    }

    pub fn fallback_tag(&self) -> &str {
        &self.fallback
    }
}

/// Predicts the most frequent training label for everything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorityClassifier {
    label: String,
}

impl MajorityClassifier {
    pub fn train(labels: &[String]) -> Result<MajorityClassifier> {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for l in labels {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
        match argmax_count(&counts) {
            Some(label) => Ok(MajorityClassifier { label: label.to_string() }),
            None => Err(Error::invalid("cannot train a classifier on zero labels")),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn predict_n(&self, n: usize) -> Vec<String> {
        vec![self.label.clone(); n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn corpus() -> Vec<TaggedSequence> {
        vec![
            TaggedSequence::new(
                strings(&["the", "cat", "the", "the"]),
                strings(&["DET", "NOUN", "DET", "X"]),
            )
            .unwrap(),
            TaggedSequence::new(strings(&["the", "dog"]), strings(&["DET", "NOUN"])).unwrap(),
        ]
    }

    #[test]
    fn most_frequent_tag_wins() {
        // "the": DET ×3, X ×1.
        let tagger = MftTagger::train(&corpus()).unwrap();
        assert_eq!(tagger.predict(&strings(&["the"])), strings(&["DET"]));
    }

    #[test]
    fn unseen_tokens_get_the_global_favourite() {
        let tagger = MftTagger::train(&corpus()).unwrap();
        // Global counts: DET ×3, NOUN ×2, X ×1.
        assert_eq!(tagger.fallback_tag(), "DET");
        assert_eq!(tagger.predict(&strings(&["zebra"])), strings(&["DET"]));
    }

    #[test]
    fn tag_ties_break_lexicographically() {
        let c = vec![TaggedSequence::new(
            strings(&["run", "run"]),
            strings(&["VERB", "NOUN"]),
        )
        .unwrap()];
        let tagger = MftTagger::train(&c).unwrap();
        assert_eq!(tagger.predict(&strings(&["run"])), strings(&["NOUN"]));
    }

    #[test]
    fn empty_training_is_fatal() {
        assert!(MftTagger::train(&[]).is_err());
        assert!(MajorityClassifier::train(&[]).is_err());
    }

    #[test]
    fn majority_label_and_its_accuracy() {
        let gold = strings(&["A", "A", "B"]);
        let clf = MajorityClassifier::train(&gold).unwrap();
        assert_eq!(clf.label(), "A");
        let pred = clf.predict_n(gold.len());
        let correct = gold.iter().zip(&pred).filter(|(g, p)| g == p).count();
        assert_eq!(correct, 2);
    }

    #[test]
    fn label_ties_break_lexicographically() {
        let clf = MajorityClassifier::train(&strings(&["B", "A"])).unwrap();
        assert_eq!(clf.label(), "A");
    }
}

//! Task metrics: POS accuracy with regex override, entity- and
//! surface-level NER F1, and the two classification schemes.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::tokenize::{TokenClass, TokenSequence};

use super::spans::EntitySpan;
use super::{f1, ratio, MetricReport, TaggedSequence, TaskKind};

/// Token-class → tag assignments applied before scoring, for tag sets
/// where placeholder classes are deterministically taggable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegexTagMap {
    map: HashMap<TokenClass, String>,
}

impl Default for RegexTagMap {
    fn default() -> Self {
        let mut map = HashMap::new();
        map.insert(TokenClass::RtMarker, "RT".to_string());
        map.insert(TokenClass::Mention, "USR".to_string());
        map.insert(TokenClass::Hashtag, "HT".to_string());
        map.insert(TokenClass::Url, "URL".to_string());
        RegexTagMap { map }
    }
}

impl RegexTagMap {
    pub fn new(pairs: impl IntoIterator<Item = (TokenClass, String)>) -> Self {
        RegexTagMap { map: pairs.into_iter().collect() }
    }

    pub fn tag_for(&self, class: TokenClass) -> Option<&str> {
        self.map.get(&class).map(String::as_str)
    }
}

/// Partial tag assignment: `Some` exactly at positions whose token
/// class is mapped. Position 0 gets sequence-start classification, so
/// a leading `RT` is the retweet marker.
pub fn regex_tag(tokens: &[String], map: &RegexTagMap) -> Vec<Option<String>> {
    let words: Vec<&str> = tokens.iter().map(String::as_str).collect();
    let seq = TokenSequence::from_words(&words);
    seq.tokens
        .iter()
        .map(|t| map.tag_for(t.class).map(str::to_string))
        .collect()
}

/// Token-level tagging accuracy. With a regex map, predicted tags at
/// mapped positions are overridden before scoring.
pub fn pos_accuracy(
    gold: &[TaggedSequence],
    pred: &[TaggedSequence],
    regex_override: Option<&RegexTagMap>,
) -> Result<MetricReport> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(format!(
            "gold has {} sentences but predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut total = 0u64;
    let mut correct = 0u64;
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Misaligned { index: i, gold: g.len(), pred: p.len() });
        }
        let overrides = regex_override.map(|m| regex_tag(&g.tokens, m));
        for j in 0..g.len() {
            let predicted = overrides
                .as_ref()
                .and_then(|o| o[j].as_deref())
                .unwrap_or(&p.tags[j]);
            total += 1;
            if predicted == g.tags[j] {
                correct += 1;
            }
        }
    }
    let mut report = MetricReport::new(TaskKind::Pos, total);
    report.set("accuracy", ratio(correct, total));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchLevel {
    /// Exact multiset match on (sentence, start, end, type).
    Entity,
    /// Corpus-global set match on (surface, type).
    Surface,
}

/// Precision/recall/F1 over extracted spans at the chosen level.
pub fn ner_f1(gold: &[EntitySpan], pred: &[EntitySpan], level: MatchLevel) -> MetricReport {
    let (tp, n_pred, n_gold) = match level {
        MatchLevel::Entity => {
            let mut gold_counts: HashMap<(usize, usize, usize, &str), u64> = HashMap::new();
            for s in gold {
                *gold_counts
                    .entry((s.sentence_index, s.start, s.end, s.entity_type.as_str()))
                    .or_insert(0) += 1;
            }
            let mut tp = 0u64;
            for s in pred {
                let key = (s.sentence_index, s.start, s.end, s.entity_type.as_str());
                if let Some(c) = gold_counts.get_mut(&key) {
                    if *c > 0 {
                        *c -= 1;
                        tp += 1;
                    }
                }
            }
            (tp, pred.len() as u64, gold.len() as u64)
        }
        MatchLevel::Surface => {
            let dedup = |spans: &[EntitySpan]| -> HashSet<(String, String)> {
                spans
                    .iter()
                    .map(|s| (s.surface.clone(), s.entity_type.clone()))
                    .collect()
            };
            let gold_set = dedup(gold);
            let pred_set = dedup(pred);
            let tp = gold_set.intersection(&pred_set).count() as u64;
            (tp, pred_set.len() as u64, gold_set.len() as u64)
        }
    };
    let p = ratio(tp, n_pred);
    let r = ratio(tp, n_gold);
    let mut report = MetricReport::new(TaskKind::Ner, n_gold);
    report.set("precision", p);
    report.set("recall", r);
    report.set("f1", f1(p, r));
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassificationScheme {
    /// 3-class sentiment: positive / neutral / negative.
    Semeval17,
    /// 2-class irony: ironic / not-ironic.
    Semeval18,
}

impl ClassificationScheme {
    pub fn name(self) -> &'static str {
        match self {
            ClassificationScheme::Semeval17 => "semeval17",
            ClassificationScheme::Semeval18 => "semeval18",
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            ClassificationScheme::Semeval17 => &["positive", "neutral", "negative"],
            ClassificationScheme::Semeval18 => &["ironic", "not-ironic"],
        }
    }

    pub fn task(self) -> TaskKind {
        match self {
            ClassificationScheme::Semeval17 => TaskKind::Semeval17,
            ClassificationScheme::Semeval18 => TaskKind::Semeval18,
        }
    }
}

struct ClassCounts {
    gold: u64,
    pred: u64,
    tp: u64,
}

fn class_counts(
    gold: &[String],
    pred: &[String],
    scheme: ClassificationScheme,
) -> Result<HashMap<&'static str, ClassCounts>> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut counts: HashMap<&'static str, ClassCounts> = scheme
        .labels()
        .iter()
        .map(|&l| (l, ClassCounts { gold: 0, pred: 0, tp: 0 }))
        .collect();
    let canon = |label: &String| -> Result<&'static str> {
        scheme
            .labels()
            .iter()
            .copied()
            .find(|&l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.clone(),
                scheme: scheme.name().to_string(),
            })
    };
    for (g, p) in gold.iter().zip(pred) {
        let g = canon(g)?;
        let p = canon(p)?;
        counts.get_mut(g).unwrap().gold += 1;
        counts.get_mut(p).unwrap().pred += 1;
        if g == p {
            counts.get_mut(g).unwrap().tp += 1;
        }
    }
    Ok(counts)
}

fn class_recall(counts: &HashMap<&'static str, ClassCounts>, label: &str) -> f64 {
    let c = &counts[label];
    if c.gold == 0 {
        log::warn!("class {label:?} has no gold instances; recall defined as 0");
        return 0.0;
    }
    c.tp as f64 / c.gold as f64
}

fn class_f1(counts: &HashMap<&'static str, ClassCounts>, label: &str) -> f64 {
    let c = &counts[label];
    f1(ratio(c.tp, c.pred), ratio(c.tp, c.gold))
}

/// Scheme-specific classification scores over aligned label lists.
pub fn classification_metrics(
    gold: &[String],
    pred: &[String],
    scheme: ClassificationScheme,
) -> Result<MetricReport> {
    let counts = class_counts(gold, pred, scheme)?;
    let correct: u64 = counts.values().map(|c| c.tp).sum();
    let mut report = MetricReport::new(scheme.task(), gold.len() as u64);
    report.set("accuracy", ratio(correct, gold.len() as u64));
    match scheme {
        ClassificationScheme::Semeval17 => {
            let avg_rec = scheme
                .labels()
                .iter()
                .map(|l| class_recall(&counts, l))
                .sum::<f64>()
                / 3.0;
            report.set("avg_rec", avg_rec);
            let f1_np =
                (class_f1(&counts, "positive") + class_f1(&counts, "negative")) / 2.0;
            report.set("f1_np", f1_np);
        }
        ClassificationScheme::Semeval18 => {
            report.set("f1_pos", class_f1(&counts, "ironic"));
        }
    }
    Ok(report)
}

//! Pluggable language identification.
//!
//! Corpus filtering needs a language gate but must not hard-wire any
//! particular classifier, so the gate is a trait. Two implementations ship
//! with the crate:
//!
//! * [`PassThrough`]: trusts the record's metadata language hint with
//!   confidence 1.0. The right choice when the source already carries
//!   reliable language labels.
//! * [`NgramLangId`]: a multinomial character n-gram scorer (n = 1..=3)
//!   trained from bundled seed corpora for en/es/fr, or from caller text.
//!   Small, deterministic, and good enough to gate obvious non-target
//!   text; swap in something stronger behind the same trait for real
//!   corpus builds.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

/// Identification result. `confidence` is in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LangScore {
    pub lang: String,
    pub confidence: f64,
}

impl LangScore {
    pub fn unknown() -> LangScore {
        LangScore { lang: "und".to_string(), confidence: 0.0 }
    }
}

pub trait LanguageIdentifier: Send + Sync {
    /// Scores `text`, optionally consulting a metadata hint. Empty or
    /// whitespace-only text is always ("und", 0.0).
    fn identify(&self, text: &str, lang_hint: Option<&str>) -> LangScore;
}

/// Metadata pass-through: the hint is the answer.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl LanguageIdentifier for PassThrough {
    fn identify(&self, text: &str, lang_hint: Option<&str>) -> LangScore {
        if text.trim().is_empty() {
            return LangScore::unknown();
        }
        match lang_hint {
            Some(hint) if !hint.is_empty() => {
                LangScore { lang: hint.to_string(), confidence: 1.0 }
            }
            _ => LangScore::unknown(),
        }
    }
}

const SEED_EN: &str = include_str!("../data/langid/en.txt");
const SEED_ES: &str = include_str!("../data/langid/es.txt");
const SEED_FR: &str = include_str!("../data/langid/fr.txt");

const MIN_N: usize = 1;
const MAX_N: usize = 3;

struct LangModel {
    lang: String,
    counts: [HashMap<String, u64>; MAX_N],
    totals: [u64; MAX_N],
}

/// Character n-gram scorer. Scores are mean add-one-smoothed log
/// likelihoods per n-gram; confidence is the posterior of the best
/// language under a uniform prior.
pub struct NgramLangId {
    models: Vec<LangModel>,
    /// Distinct grams per order across all languages (smoothing volume).
    vocab_sizes: [u64; MAX_N],
}

fn grams_of(text: &str, n: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return Vec::new();
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

impl NgramLangId {
    /// Trains one model per (lang, text) pair. Languages are sorted by
    /// code so scoring order never depends on argument order.
    pub fn train(corpora: &[(&str, &str)]) -> NgramLangId {
        let mut pairs: Vec<(&str, &str)> = corpora.to_vec();
        pairs.sort_by_key(|(lang, _)| lang.to_string());

        let mut models = Vec::new();
        let mut vocab: [HashSet<String>; MAX_N] = Default::default();
        for (lang, text) in &pairs {
            let text = text.to_lowercase();
            let mut counts: [HashMap<String, u64>; MAX_N] = Default::default();
            let mut totals = [0u64; MAX_N];
            for n in MIN_N..=MAX_N {
                for g in grams_of(&text, n) {
                    vocab[n - 1].insert(g.clone());
                    *counts[n - 1].entry(g).or_insert(0) += 1;
                    totals[n - 1] += 1;
                }
            }
            models.push(LangModel { lang: lang.to_string(), counts, totals });
        }
        let mut vocab_sizes = [0u64; MAX_N];
        for n in MIN_N..=MAX_N {
            vocab_sizes[n - 1] = vocab[n - 1].len() as u64;
        }
        NgramLangId { models, vocab_sizes }
    }

    /// The model trained on the bundled en/es/fr seed corpora.
    pub fn bundled() -> &'static NgramLangId {
        static MODEL: OnceLock<NgramLangId> = OnceLock::new();
        MODEL.get_or_init(|| {
            NgramLangId::train(&[("en", SEED_EN), ("es", SEED_ES), ("fr", SEED_FR)])
        })
    }

    pub fn languages(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.lang.as_str()).collect()
    }

    fn score(&self, model: &LangModel, text: &str) -> f64 {
        let mut log_sum = 0.0f64;
        let mut n_grams = 0u64;
        for n in MIN_N..=MAX_N {
            let denom = (model.totals[n - 1] + self.vocab_sizes[n - 1] + 1) as f64;
            for g in grams_of(text, n) {
                let c = model.counts[n - 1].get(&g).copied().unwrap_or(0);
                log_sum += (((c + 1) as f64) / denom).ln();
                n_grams += 1;
            }
        }
        if n_grams == 0 {
            f64::NEG_INFINITY
        } else {
            log_sum / n_grams as f64
        }
    }
}

impl LanguageIdentifier for NgramLangId {
    fn identify(&self, text: &str, _lang_hint: Option<&str>) -> LangScore {
        if text.trim().is_empty() || self.models.is_empty() {
            return LangScore::unknown();
        }
        let text = text.to_lowercase();
        let scores: Vec<f64> = self.models.iter().map(|m| self.score(m, &text)).collect();
        let (best_idx, &best) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap();
        if best == f64::NEG_INFINITY {
            return LangScore::unknown();
        }
        // Posterior under a uniform prior. Mean-per-gram scores keep the
        // softmax scale comparable across text lengths.
        let z: f64 = scores.iter().map(|s| (s - best).exp()).sum();
        LangScore {
            lang: self.models[best_idx].lang.clone(),
            confidence: 1.0 / z,
        }
    }
}

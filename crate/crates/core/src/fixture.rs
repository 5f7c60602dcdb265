//! Deterministic synthetic corpus generator for benchmarks and
//! end-to-end tests.
//!
//! The generator controls subword arithmetic exactly. Two disjoint
//! alphabets make segmentation predictable under the bundled learning
//! parameters (`learn_params`):
//!
//! * common words (letters a–m, 200 distinct, each appearing hundreds
//!   of times) always merge down to a single piece: while any common
//!   word is still split, one of its internal pairs carries the word's
//!   full frequency, which sits far above the merge threshold;
//! * rare words (two CJK scalars, every ordered pair emitted at most
//!   once) never merge: each internal pair count stays below the
//!   threshold by construction, so a rare word is always two pieces;
//! * an occasional mention or emoji slot normalizes to one atomic
//!   piece, exactly like a common word.
//!
//! Per-tweet subword counts therefore follow a fixed 33-tweet schedule
//! averaging exactly 25, and the packed block count is a matter of
//! arithmetic rather than luck.

use crate::bpe::LearnParams;
use crate::ingest::{FilterConfig, RawTweet};

/// Learning parameters the fixture corpus is calibrated against.
pub fn learn_params() -> LearnParams {
    LearnParams { target_vocab: 4000, min_pair_freq: 50 }
}

/// Filter settings under which every fixture tweet is kept.
pub fn filter_config() -> FilterConfig {
    FilterConfig::default()
}

const COMMON_ALPHABET: [char; 13] =
    ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm'];
const COMMON_WORDS: usize = 200;
const RARE_SPAN: usize = 2000;
const CJK_BASE: u32 = 0x4E00;

/// Tweets per schedule cycle and the subword total they carry.
pub const CYCLE_TWEETS: usize = 33;
pub const CYCLE_SUBWORDS: usize = 825;

/// Planned subword count for tweet `idx` (cycle position: five packed
/// groups of [25, 25, 25, 25, 17], then eight block-filling 30s).
pub fn subword_target(idx: usize) -> usize {
    let pos = idx % CYCLE_TWEETS;
    if pos < 25 {
        if pos % 5 == 4 {
            17
        } else {
            25
        }
    } else {
        30
    }
}

fn common_word(i: usize) -> String {
    let digits = [i / 169 % 13, i / 13 % 13, i % 13];
    let mut w: String = digits.iter().map(|&d| COMMON_ALPHABET[d]).collect();
    for _ in 0..i % 5 {
        w.push(COMMON_ALPHABET[digits[2]]);
    }
    w
}

/// Stateful generator; cursors make every emitted rare word unique.
#[derive(Default)]
pub struct FixtureBuilder {
    common_cursor: usize,
    rare_cursor: usize,
}

impl FixtureBuilder {
    fn next_common(&mut self) -> String {
        let w = common_word(self.common_cursor % COMMON_WORDS);
        self.common_cursor += 1;
        w
    }

    /// Two CJK scalars addressed by a counter: the ordered char pair of
    /// word k is (k / SPAN, k % SPAN), so no internal pair ever repeats
    /// across the corpus and none can reach the merge threshold.
    fn next_rare(&mut self) -> String {
        let k = self.rare_cursor;
        self.rare_cursor += 1;
        let first = char::from_u32(CJK_BASE + (k / RARE_SPAN) as u32).unwrap();
        let second = char::from_u32(CJK_BASE + (k % RARE_SPAN) as u32).unwrap();
        let mut w = String::new();
        w.push(first);
        w.push(second);
        w
    }

    /// Builds tweet `idx`: subword budget S splits into S/5 rare words
    /// (2 subwords each) and S − 2(S/5) single-piece slots.
    pub fn build(&mut self, idx: usize) -> RawTweet {
        let s = subword_target(idx);
        let rare = s / 5;
        let single = s - 2 * rare;
        let mut tokens: Vec<String> = Vec::with_capacity(single + rare);
        for slot in 0..single {
            if slot == 1 && idx.is_multiple_of(3) {
                tokens.push(format!("@u{}", idx % 97));
            } else if slot == 2 && idx.is_multiple_of(5) {
                tokens.push("😂".to_string());
            } else {
                tokens.push(self.next_common());
            }
        }
        for _ in 0..rare {
            tokens.push(self.next_rare());
        }
        RawTweet {
            id: format!("fx{idx:06}"),
            text: tokens.join(" "),
            lang_hint: Some("en".to_string()),
            is_retweet: false,
        }
    }
}

/// The first `n` tweets of the fixture corpus.
pub fn generate(n: usize) -> Vec<RawTweet> {
    let mut builder = FixtureBuilder::default();
    (0..n).map(|i| builder.build(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::{learn_bpe, Encoder};
    use crate::ingest::{filter_corpus, RawTweet};
    use crate::langid::PassThrough;
    use crate::normalize::{soft_normalize, EmojiTable};
    use crate::tokenize::{tokenize, TokenSequence};

    fn normalized(t: &RawTweet) -> TokenSequence {
        soft_normalize(&tokenize(&t.text), EmojiTable::bundled()).tokens
    }

    #[test]
    fn schedule_averages_exactly_25_per_cycle() {
        let total: usize = (0..CYCLE_TWEETS).map(subword_target).sum();
        assert_eq!(total, CYCLE_SUBWORDS);
        assert_eq!(CYCLE_SUBWORDS, 25 * CYCLE_TWEETS);
    }

    #[test]
    fn common_words_are_distinct() {
        let words: std::collections::HashSet<String> =
            (0..COMMON_WORDS).map(common_word).collect();
        assert_eq!(words.len(), COMMON_WORDS);
    }

    #[test]
    fn every_tweet_passes_the_default_filter() {
        let tweets = generate(200);
        let id = PassThrough;
        let (kept, stats) = filter_corpus(tweets, &filter_config(), Some(&id));
        assert_eq!(kept.len(), 200);
        assert!(stats.drop_reasons.is_empty());
    }

    #[test]
    fn learned_segmentation_hits_the_planned_subword_counts() {
        // A few full cycles are enough to push common pair counts past
        // the merge threshold, mirroring the full corpus.
        let n = CYCLE_TWEETS * 40;
        let tweets = generate(n);
        let seqs: Vec<TokenSequence> = tweets.iter().map(normalized).collect();
        let table = learn_bpe(seqs.iter(), &learn_params()).unwrap();
        let mut enc = Encoder::new(&table);
        let mut total = 0usize;
        for (i, seq) in seqs.iter().enumerate() {
            let sub = enc.encode_sequence(seq);
            assert_eq!(
                sub.ids.len(),
                subword_target(i),
                "tweet {i} ({:?})",
                tweets[i].text
            );
            total += sub.ids.len();
        }
        assert_eq!(total, 25 * n);
    }

    #[test]
    fn rare_words_never_repeat_an_internal_pair() {
        let mut b = FixtureBuilder::default();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..10_000 {
            let w = b.next_rare();
            assert!(seen.insert(w.clone()), "rare word {w} repeated");
        }
    }
}

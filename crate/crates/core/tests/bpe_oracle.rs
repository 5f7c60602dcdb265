//! Cross-checks the incremental merge learner against the
//! recount-from-scratch reference on randomized corpora, merge for
//! merge, and confirms encode/decode is lossless at the string level.

use tweetforge::bpe::{decode_bpe, learn_from_counts, Encoder, LearnParams, WordCounts};
use tweetforge::rng::SplitMix64;
use tweetforge::tokenize::TokenSequence;
use tweetforge_oracles::bpe as oracle;

struct RandomCorpus {
    words: Vec<(String, u64)>,
    distinct_chars: usize,
}

fn random_corpus(rng: &mut SplitMix64) -> RandomCorpus {
    let alphabet = 2 + rng.below(5) as usize;
    let n_words = 1 + rng.below(100) as usize;
    let mut words: Vec<(String, u64)> = Vec::new();
    let mut chars = std::collections::HashSet::new();
    for _ in 0..n_words {
        let len = 1 + rng.below(8) as usize;
        let word: String = (0..len)
            .map(|_| (b'a' + rng.below(alphabet as u64) as u8) as char)
            .collect();
        chars.extend(word.chars());
        let count = 1 + rng.below(20);
        match words.iter_mut().find(|(w, _)| *w == word) {
            Some((_, c)) => *c += count,
            None => words.push((word, count)),
        }
    }
    RandomCorpus { words, distinct_chars: chars.len() }
}

fn rendered_merges(words: &[(String, u64)], params: &LearnParams) -> Vec<String> {
    let mut counts = WordCounts::default();
    for (w, c) in words {
        counts.add_word(w, *c);
    }
    let table = learn_from_counts(&counts, params).unwrap();
    table
        .merges()
        .iter()
        .map(|(l, r)| format!("{} {}", l.render(), r.render()))
        .collect()
}

#[test]
fn matches_naive_reference_on_random_corpora() {
    for case in 0..200u64 {
        let mut rng = SplitMix64::from_parts(&[0xB9E, case]);
        let corpus = random_corpus(&mut rng);
        let min_pair_freq = 1 + rng.below(3);
        let target_vocab = 5 + corpus.distinct_chars + rng.below(40) as usize;

        let fast = rendered_merges(
            &corpus.words,
            &LearnParams { target_vocab, min_pair_freq },
        );
        let slow = oracle::learn(
            &corpus.words,
            &oracle::Params { target_vocab, min_pair_freq },
        );
        assert_eq!(fast, slow, "case {case} diverged");
    }
}

#[test]
fn encode_then_decode_restores_every_word() {
    for case in 0..50u64 {
        let mut rng = SplitMix64::from_parts(&[0xDEC0DE, case]);
        let corpus = random_corpus(&mut rng);
        let params = LearnParams {
            target_vocab: 5 + corpus.distinct_chars + 30,
            min_pair_freq: 1 + rng.below(2),
        };
        let mut counts = WordCounts::default();
        for (w, c) in &corpus.words {
            counts.add_word(w, *c);
        }
        let table = learn_from_counts(&counts, &params).unwrap();
        let mut enc = Encoder::new(&table);

        let words: Vec<&str> = corpus.words.iter().map(|(w, _)| w.as_str()).collect();
        let seq = TokenSequence::from_words(&words);
        let sub = enc.encode_sequence(&seq);
        let back = decode_bpe(&sub);
        let expect: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        assert_eq!(back, expect, "case {case} did not round-trip");
    }
}

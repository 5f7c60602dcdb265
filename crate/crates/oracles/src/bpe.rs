//! Recount-from-scratch byte-pair learner.
//!
//! Every iteration rebuilds the full pair-count table with a `BTreeMap`
//! and scans it linearly for the winner: highest count, ties broken by
//! the smallest pair under (word-final, text) symbol order. Words are
//! split into one symbol per char plus a bare end-of-word sentinel;
//! there is no special handling for atomic tokens, so feed it plain
//! words only.

use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Sym {
    word_final: bool,
    text: String,
}

impl Sym {
    fn sentinel() -> Self {
        Sym { word_final: true, text: String::new() }
    }

    fn is_sentinel(&self) -> bool {
        self.word_final && self.text.is_empty()
    }

    fn render(&self) -> String {
        if self.word_final {
            format!("{}</w>", self.text)
        } else {
            self.text.clone()
        }
    }

    fn piece(&self) -> String {
        if self.word_final {
            self.text.clone()
        } else {
            format!("{}@@", self.text)
        }
    }
}

fn split(word: &str) -> Vec<Sym> {
    let mut syms: Vec<Sym> = word
        .chars()
        .map(|c| Sym { word_final: false, text: c.to_string() })
        .collect();
    syms.push(Sym::sentinel());
    syms
}

fn fuse(left: &Sym, right: &Sym) -> Sym {
    Sym {
        word_final: right.word_final,
        text: format!("{}{}", left.text, right.text),
    }
}

fn sweep(syms: &[Sym], left: &Sym, right: &Sym) -> Vec<Sym> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && &syms[i] == left && &syms[i + 1] == right {
            out.push(fuse(left, right));
            i += 2;
        } else {
            out.push(syms[i].clone());
            i += 1;
        }
    }
    out
}

pub struct Params {
    pub target_vocab: usize,
    pub min_pair_freq: u64,
}

/// Learns merges over `(word, count)` pairs and returns them rendered
/// one per line ("l o", "lo w", "low </w>", ...).
pub fn learn(word_counts: &[(String, u64)], params: &Params) -> Vec<String> {
    let mut words: Vec<(Vec<Sym>, u64)> =
        word_counts.iter().map(|(w, c)| (split(w), *c)).collect();

    let mut vocab: Vec<String> = ["<pad>", "<unk>", "<s>", "</s>", "<mask>"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for (syms, _) in &words {
        for s in syms {
            if s.is_sentinel() {
                continue;
            }
            let p = s.piece();
            if !vocab.contains(&p) {
                vocab.push(p);
            }
        }
    }

    let mut merges = Vec::new();
    while vocab.len() < params.target_vocab {
        let mut counts: BTreeMap<(Sym, Sym), u64> = BTreeMap::new();
        for (syms, c) in &words {
            for w in syms.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += *c;
            }
        }
        // Ascending key order makes "first strict maximum" the
        // smallest pair among the tied best.
        let mut best: Option<(&(Sym, Sym), u64)> = None;
        for (pair, &count) in &counts {
            if count < params.min_pair_freq {
                continue;
            }
            if best.is_none_or(|(_, bc)| count > bc) {
                best = Some((pair, count));
            }
        }
        let Some((pair, _)) = best else { break };
        let (left, right) = pair.clone();

        merges.push(format!("{} {}", left.render(), right.render()));
        for (syms, _) in &mut words {
            *syms = sweep(syms, &left, &right);
        }
        let piece = fuse(&left, &right).piece();
        if !vocab.contains(&piece) {
            vocab.push(piece);
        }
    }
    merges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counted(words: &[(&str, u64)]) -> Vec<(String, u64)> {
        words.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    #[test]
    fn low_lowest_merge_order() {
        let words = counted(&[("low", 5), ("lowest", 2)]);
        let merges =
            learn(&words, &Params { target_vocab: 1000, min_pair_freq: 1 });
        assert_eq!(
            merges,
            ["l o", "lo w", "low </w>", "e s", "es t", "est </w>", "low est</w>"]
        );
    }

    #[test]
    fn threshold_two_stops_after_shared_prefix() {
        let words = counted(&[("low", 5), ("lowest", 2)]);
        let merges =
            learn(&words, &Params { target_vocab: 1000, min_pair_freq: 2 });
        assert_eq!(merges.len(), 3 + 4);
        // "low </w>" only reaches 5 on the standalone word; the shared
        // "low" prefix pairs reach 7.
        assert_eq!(&merges[..3], ["l o", "lo w", "low </w>"]);
    }

    #[test]
    fn repeated_char_prefers_plain_pair() {
        let words = counted(&[("aa", 5)]);
        let merges =
            learn(&words, &Params { target_vocab: 1000, min_pair_freq: 1 });
        assert_eq!(merges, ["a a", "aa </w>"]);
    }

    #[test]
    fn vocab_cap_limits_merges() {
        let words = counted(&[("low", 5), ("lowest", 2)]);
        // 5 specials + 6 base chars (l, o, w, e, s, t) = 11.
        let merges =
            learn(&words, &Params { target_vocab: 13, min_pair_freq: 1 });
        assert_eq!(merges.len(), 2);
    }
}

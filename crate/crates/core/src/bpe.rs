//! Byte-pair-encoding subword segmentation: merge-table learning,
//! encoding, decoding, and table serialization.
//!
//! Words are split into Unicode scalar symbols plus an end-of-word
//! sentinel, and the learner greedily fuses the most frequent adjacent
//! pair until the vocabulary target is reached. Placeholder tokens
//! (`@USER`, `HTTPURL`) and emoji aliases enter as atomic symbols so
//! they never split.
//!
//! The learner counts pairs incrementally (only words containing the
//! fused pair are recounted) but is merge-for-merge identical to a
//! from-scratch recount: ties on frequency go to the lexicographically
//! smallest symbol pair, where a word-final symbol sorts after every
//! non-final one.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::normalize::{is_alias_shaped, URL_TOKEN, USER_TOKEN};
use crate::tokenize::TokenSequence;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;
pub const MASK_ID: u32 = 4;
pub const NUM_SPECIALS: u32 = 5;
pub const SPECIAL_PIECES: [&str; 5] = ["<pad>", "<unk>", "<s>", "</s>", "<mask>"];

/// Continuation suffix carried by every piece of a word except the last.
pub const CONTINUATION_MARKER: &str = "@@";

/// Rendering of the end-of-word flag in the merges file.
const SENTINEL_SUFFIX: &str = "</w>";

const MERGES_HEADER: &str = "#tweetforge-bpe v1";

/// One learning symbol: a span of word text, plus whether it absorbs
/// the end of its word. The bare sentinel is `{text: "", word_final}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub text: String,
    pub word_final: bool,
}

impl Symbol {
    pub fn plain(text: impl Into<String>) -> Self {
        Symbol { text: text.into(), word_final: false }
    }

    pub fn word_final(text: impl Into<String>) -> Self {
        Symbol { text: text.into(), word_final: true }
    }

    pub fn sentinel() -> Self {
        Symbol { text: String::new(), word_final: true }
    }

    pub fn is_sentinel(&self) -> bool {
        self.word_final && self.text.is_empty()
    }

    /// Merges-file rendering; the bare sentinel is exactly `</w>`.
    pub fn render(&self) -> String {
        if self.word_final {
            format!("{}{SENTINEL_SUFFIX}", self.text)
        } else {
            self.text.clone()
        }
    }

    fn parse(s: &str) -> Symbol {
        match s.strip_suffix(SENTINEL_SUFFIX) {
            Some(text) => Symbol::word_final(text),
            None => Symbol::plain(s),
        }
    }

    /// Vocabulary surface: word-final symbols appear bare, others carry
    /// the continuation marker.
    fn piece(&self) -> String {
        if self.word_final {
            self.text.clone()
        } else {
            format!("{}{CONTINUATION_MARKER}", self.text)
        }
    }
}

/// Non-final sorts before final, then by text. This places `(a, a)`
/// ahead of `(a, sentinel)` in frequency ties.
impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.word_final, &self.text).cmp(&(other.word_final, &other.text))
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn merge_symbols(left: &Symbol, right: &Symbol) -> Symbol {
    debug_assert!(!left.word_final, "nothing follows a word-final symbol");
    Symbol {
        text: format!("{}{}", left.text, right.text),
        word_final: right.word_final,
    }
}

/// Tokens that enter the alphabet whole: placeholder tokens and emoji
/// aliases.
pub fn is_atomic_token(text: &str) -> bool {
    text == USER_TOKEN || text == URL_TOKEN || is_alias_shaped(text)
}

/// Word → learning symbols: scalars plus the sentinel, or one atomic
/// word-final symbol.
pub fn split_word(word: &str) -> Vec<Symbol> {
    if is_atomic_token(word) {
        return vec![Symbol::word_final(word)];
    }
    let mut syms: Vec<Symbol> =
        word.chars().map(|c| Symbol::plain(c.to_string())).collect();
    syms.push(Symbol::sentinel());
    syms
}

/// Piece → id table. Ids are dense and 0-based: specials first, then
/// base symbols in first-occurrence order, then merge outputs in learn
/// order. A surface already present keeps its first id.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    pieces: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn with_specials() -> Vocab {
        let mut v = Vocab { pieces: Vec::new(), ids: HashMap::new() };
        for p in SPECIAL_PIECES {
            v.push(p.to_string());
        }
        v
    }

    fn push(&mut self, piece: String) {
        if !self.ids.contains_key(&piece) {
            self.ids.insert(piece.clone(), self.pieces.len() as u32);
            self.pieces.push(piece);
        }
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.ids.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn is_special(id: u32) -> bool {
        id < NUM_SPECIALS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnParams {
    /// Vocabulary budget, specials included.
    pub target_vocab: usize,
    /// Pairs rarer than this never merge.
    pub min_pair_freq: u64,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams { target_vocab: 64000, min_pair_freq: 2 }
    }
}

/// Ordered merge list plus the vocabulary it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTable {
    merges: Vec<(Symbol, Symbol)>,
    vocab: Vocab,
}

impl MergeTable {
    /// Builds a table from explicit parts; base symbol order fixes the
    /// vocabulary layout.
    pub fn from_parts(base: Vec<Symbol>, merges: Vec<(Symbol, Symbol)>) -> MergeTable {
        let mut vocab = Vocab::with_specials();
        for sym in &base {
            debug_assert!(!sym.is_sentinel());
            vocab.push(sym.piece());
        }
        for (l, r) in &merges {
            vocab.push(merge_symbols(l, r).piece());
        }
        MergeTable { merges, vocab }
    }

    pub fn merges(&self) -> &[(Symbol, Symbol)] {
        &self.merges
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn marker(&self) -> &'static str {
        CONTINUATION_MARKER
    }

    pub fn save_merges<P: AsRef<Path>>(&self, merges_path: P, vocab_path: P) -> Result<()> {
        let mp = merges_path.as_ref();
        let mut mf = std::fs::File::create(mp).map_err(|e| Error::io(mp, e))?;
        self.write_merges(&mut mf).map_err(|e| e.with_path(mp))?;
        let vp = vocab_path.as_ref();
        let mut vf = std::fs::File::create(vp).map_err(|e| Error::io(vp, e))?;
        self.write_vocab(&mut vf).map_err(|e| e.with_path(vp))?;
        Ok(())
    }

    pub fn load_merges<P: AsRef<Path>>(merges_path: P, vocab_path: P) -> Result<MergeTable> {
        let mp = merges_path.as_ref();
        let mf = std::fs::File::open(mp).map_err(|e| Error::io(mp, e))?;
        let merges = Self::read_merges(BufReader::new(mf)).map_err(|e| e.with_path(mp))?;
        let vp = vocab_path.as_ref();
        let vf = std::fs::File::open(vp).map_err(|e| Error::io(vp, e))?;
        let vocab = Self::read_vocab(BufReader::new(vf)).map_err(|e| e.with_path(vp))?;
        Ok(MergeTable { merges, vocab })
    }

    pub fn write_merges<W: Write>(&self, w: &mut W) -> Result<()> {
        let io_err = |e| Error::io("<stream>", e);
        writeln!(w, "{MERGES_HEADER}").map_err(io_err)?;
        for (l, r) in &self.merges {
            // Tokenizer output cannot produce a plain symbol whose text
            // ends with the sentinel rendering, so this stays parseable.
            debug_assert!(l.word_final || !l.text.ends_with(SENTINEL_SUFFIX));
            debug_assert!(r.word_final || !r.text.ends_with(SENTINEL_SUFFIX));
            writeln!(w, "{} {}", l.render(), r.render()).map_err(io_err)?;
        }
        Ok(())
    }

    pub fn write_vocab<W: Write>(&self, w: &mut W) -> Result<()> {
        for (id, piece) in self.vocab.pieces.iter().enumerate() {
            writeln!(w, "{piece} {id}").map_err(|e| Error::io("<stream>", e))?;
        }
        Ok(())
    }

    pub fn read_merges<R: BufRead>(r: R) -> Result<Vec<(Symbol, Symbol)>> {
        let mut lines = r.lines().enumerate();
        match lines.next() {
            Some((_, Ok(header))) if header == MERGES_HEADER => {}
            Some((_, Ok(header))) => {
                return Err(Error::Version {
                    found: header,
                    expected: MERGES_HEADER.to_string(),
                })
            }
            Some((_, Err(e))) => return Err(Error::io("<stream>", e)),
            None => {
                return Err(Error::Version {
                    found: "<empty file>".to_string(),
                    expected: MERGES_HEADER.to_string(),
                })
            }
        }
        let mut merges = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<stream>", e))?;
            let (l, r) = line.split_once(' ').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `left right`, got {line:?}"),
            })?;
            merges.push((Symbol::parse(l), Symbol::parse(r)));
        }
        Ok(merges)
    }

    pub fn read_vocab<R: BufRead>(r: R) -> Result<Vocab> {
        let mut vocab = Vocab { pieces: Vec::new(), ids: HashMap::new() };
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<stream>", e))?;
            let (piece, id) = line.rsplit_once(' ').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `piece id`, got {line:?}"),
            })?;
            let id: u32 = id.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad id {id:?}"),
            })?;
            if id as usize != i {
                return Err(Error::invalid(format!(
                    "vocab ids must be dense and 0-based; line {} has id {id}",
                    i + 1
                )));
            }
            vocab.ids.insert(piece.to_string(), id);
            vocab.pieces.push(piece.to_string());
        }
        for (i, expected) in SPECIAL_PIECES.iter().enumerate() {
            if vocab.pieces.get(i).map(String::as_str) != Some(*expected) {
                return Err(Error::invalid(format!(
                    "vocab must open with the special pieces, missing {expected:?} at id {i}"
                )));
            }
        }
        Ok(vocab)
    }
}

/// Word frequencies with first-occurrence order preserved, so that the
/// vocabulary layout is reproducible. Merging appends novel words in
/// the other table's order; chunked counting then merging in chunk
/// order is identical to a sequential count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordCounts {
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
}

impl WordCounts {
    pub fn add_word(&mut self, word: &str, n: u64) {
        if word.is_empty() {
            return;
        }
        match self.index.get(word) {
            Some(&i) => self.entries[i].1 += n,
            None => {
                self.index.insert(word.to_string(), self.entries.len());
                self.entries.push((word.to_string(), n));
            }
        }
    }

    pub fn add_sequence(&mut self, seq: &TokenSequence) {
        for tok in &seq.tokens {
            self.add_word(&tok.text, 1);
        }
    }

    pub fn from_sequences<'a, I>(seqs: I) -> WordCounts
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut counts = WordCounts::default();
        for s in seqs {
            counts.add_sequence(s);
        }
        counts
    }

    pub fn merge(&mut self, other: &WordCounts) {
        for (w, n) in &other.entries {
            self.add_word(w, *n);
        }
    }

    /// Counts tokenized texts across the current rayon pool; chunk
    /// results merge in input order, so worker count never changes the
    /// outcome.
    pub fn par_from_texts(texts: &[String]) -> WordCounts {
        use rayon::prelude::*;
        let chunk = usize::max(64, texts.len() / (rayon::current_num_threads() * 4).max(1));
        let partials: Vec<WordCounts> = texts
            .par_chunks(chunk)
            .map(|ts| {
                let mut c = WordCounts::default();
                for t in ts {
                    c.add_sequence(&crate::tokenize::tokenize(t));
                }
                c
            })
            .collect();
        let mut counts = WordCounts::default();
        for p in &partials {
            counts.merge(p);
        }
        counts
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, n)| (w.as_str(), *n))
    }
}

type SymId = u32;
type Pair = (SymId, SymId);

#[derive(Default)]
struct Interner {
    syms: Vec<Symbol>,
    ids: HashMap<Symbol, SymId>,
}

impl Interner {
    fn intern(&mut self, sym: Symbol) -> (SymId, bool) {
        match self.ids.get(&sym) {
            Some(&id) => (id, false),
            None => {
                let id = self.syms.len() as SymId;
                self.ids.insert(sym.clone(), id);
                self.syms.push(sym);
                (id, true)
            }
        }
    }

    fn get(&self, id: SymId) -> &Symbol {
        &self.syms[id as usize]
    }
}

/// Max-heap key: highest count first, ties to the lexicographically
/// smallest symbol pair. Entries go stale when counts move; the pop
/// loop revalidates against the live count.
struct HeapEntry {
    count: u64,
    pair: Pair,
    left: Symbol,
    right: Symbol,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.count == other.count && self.left == other.left && self.right == other.right
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Learner {
    interner: Interner,
    words: Vec<(Vec<SymId>, u64)>,
    pair_counts: HashMap<Pair, u64>,
    pair_words: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<HeapEntry>,
    min_pair_freq: u64,
}

impl Learner {
    fn new(counts: &WordCounts, min_pair_freq: u64, vocab: &mut Vocab) -> Learner {
        let mut interner = Interner::default();
        let mut words = Vec::with_capacity(counts.len());
        for (word, n) in counts.iter() {
            let syms: Vec<SymId> = split_word(word)
                .into_iter()
                .map(|s| {
                    let fresh = !interner.ids.contains_key(&s);
                    let bare = s.is_sentinel();
                    let (id, _) = interner.intern(s);
                    if fresh && !bare {
                        vocab.push(interner.get(id).piece());
                    }
                    id
                })
                .collect();
            words.push((syms, n));
        }
        let mut learner = Learner {
            interner,
            words,
            pair_counts: HashMap::new(),
            pair_words: HashMap::new(),
            heap: BinaryHeap::new(),
            min_pair_freq,
        };
        for idx in 0..learner.words.len() {
            let (syms, n) = learner.words[idx].clone();
            for w in syms.windows(2) {
                let p = (w[0], w[1]);
                *learner.pair_counts.entry(p).or_insert(0) += n;
                learner.pair_words.entry(p).or_default().insert(idx);
            }
        }
        let seeds: Vec<(Pair, u64)> = learner
            .pair_counts
            .iter()
            .filter(|(_, &c)| c >= min_pair_freq)
            .map(|(&p, &c)| (p, c))
            .collect();
        for (p, c) in seeds {
            learner.push_entry(p, c);
        }
        learner
    }

    fn push_entry(&mut self, pair: Pair, count: u64) {
        self.heap.push(HeapEntry {
            count,
            pair,
            left: self.interner.get(pair.0).clone(),
            right: self.interner.get(pair.1).clone(),
        });
    }

    /// Pops the live most-frequent pair, discarding stale entries.
    fn pop_best(&mut self) -> Option<(Pair, u64)> {
        while let Some(entry) = self.heap.pop() {
            let live = self.pair_counts.get(&entry.pair).copied().unwrap_or(0);
            if live != entry.count {
                if live >= self.min_pair_freq {
                    self.push_entry(entry.pair, live);
                }
                continue;
            }
            if live < self.min_pair_freq {
                continue;
            }
            return Some((entry.pair, live));
        }
        None
    }

    /// Fuses `pair` everywhere and recounts only the affected words.
    fn apply_merge(&mut self, pair: Pair, merged: SymId) {
        let mut affected: Vec<usize> = self
            .pair_words
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        for idx in affected {
            let (old_syms, n) = self.words[idx].clone();
            for w in old_syms.windows(2) {
                let p = (w[0], w[1]);
                let c = self.pair_counts.get_mut(&p).expect("counted pair");
                *c -= n;
                if let Some(set) = self.pair_words.get_mut(&p) {
                    set.remove(&idx);
                }
            }
            let new_syms = sweep(&old_syms, pair, merged);
            let mut touched: Vec<Pair> = Vec::with_capacity(new_syms.len());
            for w in new_syms.windows(2) {
                let p = (w[0], w[1]);
                *self.pair_counts.entry(p).or_insert(0) += n;
                self.pair_words.entry(p).or_default().insert(idx);
                touched.push(p);
            }
            touched.sort_unstable();
            touched.dedup();
            for p in touched {
                let c = self.pair_counts[&p];
                if c >= self.min_pair_freq {
                    self.push_entry(p, c);
                }
            }
            self.words[idx] = (new_syms, n);
        }
        debug_assert_eq!(self.pair_counts.get(&pair).copied().unwrap_or(0), 0);
    }
}

/// One left-to-right pass fusing every non-overlapping occurrence.
fn sweep(syms: &[SymId], pair: Pair, merged: SymId) -> Vec<SymId> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(syms[i]);
            i += 1;
        }
    }
    out
}

pub fn learn_from_counts(counts: &WordCounts, params: &LearnParams) -> Result<MergeTable> {
    if counts.is_empty() {
        return Err(Error::invalid("cannot learn from an empty corpus"));
    }
    let mut vocab = Vocab::with_specials();
    let mut learner = Learner::new(counts, params.min_pair_freq, &mut vocab);
    if params.target_vocab < vocab.len() {
        return Err(Error::Config(format!(
            "target_vocab {} is below the floor of {} (specials + base symbols)",
            params.target_vocab,
            vocab.len()
        )));
    }
    let mut merges = Vec::new();
    while vocab.len() < params.target_vocab {
        let Some((pair, _)) = learner.pop_best() else { break };
        let left = learner.interner.get(pair.0).clone();
        let right = learner.interner.get(pair.1).clone();
        let merged_sym = merge_symbols(&left, &right);
        let (merged, _) = learner.interner.intern(merged_sym.clone());
        learner.apply_merge(pair, merged);
        vocab.push(merged_sym.piece());
        merges.push((left, right));
    }
    Ok(MergeTable { merges, vocab })
}

pub fn learn_bpe<'a, I>(sequences: I, params: &LearnParams) -> Result<MergeTable>
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    learn_from_counts(&WordCounts::from_sequences(sequences), params)
}

/// Subword encoding of a token sequence. `word_boundaries[k]` is the
/// piece index where source word k starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordSequence {
    pub ids: Vec<u32>,
    pub pieces: Vec<String>,
    pub word_boundaries: Vec<usize>,
}

#[derive(Clone)]
struct CachedWord {
    pieces: Vec<String>,
    ids: Vec<u32>,
}

/// Reusable encoder over one table. Caches per-word segmentations, so
/// keep one per thread for throughput; the table itself is shared and
/// immutable.
pub struct Encoder<'a> {
    table: &'a MergeTable,
    ranks: HashMap<(Symbol, Symbol), usize>,
    cache: HashMap<String, CachedWord>,
}

impl<'a> Encoder<'a> {
    pub fn new(table: &'a MergeTable) -> Encoder<'a> {
        let ranks = table
            .merges
            .iter()
            .enumerate()
            .map(|(i, (l, r))| ((l.clone(), r.clone()), i))
            .collect();
        Encoder { table, ranks, cache: HashMap::new() }
    }

    pub fn table(&self) -> &MergeTable {
        self.table
    }

    fn rank(&self, l: &Symbol, r: &Symbol) -> Option<usize> {
        // Key by reference via a temporary pair clone; Symbol is small.
        self.ranks.get(&(l.clone(), r.clone())).copied()
    }

    /// Applies merges in table order: lowest applicable rank first, one
    /// left-to-right pass per rank. A fusion only ever creates pairs of
    /// later rank, so each rank is visited at most once.
    fn segment(&self, word: &str) -> Vec<Symbol> {
        let mut syms = split_word(word);
        let mut pending: BinaryHeap<std::cmp::Reverse<usize>> = BinaryHeap::new();
        for w in syms.windows(2) {
            if let Some(r) = self.rank(&w[0], &w[1]) {
                pending.push(std::cmp::Reverse(r));
            }
        }
        let mut last_rank = usize::MAX;
        while let Some(std::cmp::Reverse(rank)) = pending.pop() {
            if rank == last_rank {
                continue;
            }
            last_rank = rank;
            let (ref l, ref r) = self.table.merges[rank];
            let merged = merge_symbols(l, r);
            let mut out: Vec<Symbol> = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == *l && syms[i + 1] == *r {
                    if let Some(prev) = out.last() {
                        if let Some(nr) = self.rank(prev, &merged) {
                            if nr > rank {
                                pending.push(std::cmp::Reverse(nr));
                            }
                        }
                    }
                    if i + 2 < syms.len() {
                        if let Some(nr) = self.rank(&merged, &syms[i + 2]) {
                            if nr > rank {
                                pending.push(std::cmp::Reverse(nr));
                            }
                        }
                    }
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(syms[i].clone());
                    i += 1;
                }
            }
            syms = out;
        }
        syms
    }

    /// Encodes one word. Pieces other than the last carry the marker;
    /// a piece missing from the vocabulary maps to the unk id with its
    /// text intact.
    pub fn encode_word(&mut self, word: &str) -> (Vec<String>, Vec<u32>) {
        debug_assert!(!word.is_empty());
        if let Some(hit) = self.cache.get(word) {
            return (hit.pieces.clone(), hit.ids.clone());
        }
        let mut syms = self.segment(word);
        if syms.last().is_some_and(Symbol::is_sentinel) {
            syms.pop();
        }
        let last = syms.len().saturating_sub(1);
        let pieces: Vec<String> = syms
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if i < last {
                    format!("{}{CONTINUATION_MARKER}", s.text)
                } else {
                    s.text.clone()
                }
            })
            .collect();
        let ids: Vec<u32> = pieces
            .iter()
            .map(|p| self.table.vocab.id(p).unwrap_or(UNK_ID))
            .collect();
        self.cache.insert(
            word.to_string(),
            CachedWord { pieces: pieces.clone(), ids: ids.clone() },
        );
        (pieces, ids)
    }

    pub fn encode_sequence(&mut self, seq: &TokenSequence) -> SubwordSequence {
        let mut out = SubwordSequence {
            ids: Vec::new(),
            pieces: Vec::new(),
            word_boundaries: Vec::with_capacity(seq.tokens.len()),
        };
        for tok in &seq.tokens {
            let (pieces, ids) = self.encode_word(&tok.text);
            out.word_boundaries.push(out.pieces.len());
            out.pieces.extend(pieces);
            out.ids.extend(ids);
        }
        out
    }
}

pub fn apply_bpe(tokens: &TokenSequence, table: &MergeTable) -> SubwordSequence {
    Encoder::new(table).encode_sequence(tokens)
}

/// Rebuilds source words: within each word, the marker is stripped from
/// every piece but the last. Boundary-less sequences fall back to
/// marker-driven grouping.
pub fn decode_bpe(seq: &SubwordSequence) -> Vec<String> {
    if seq.pieces.is_empty() {
        return Vec::new();
    }
    let mut words = Vec::new();
    if seq.word_boundaries.is_empty() {
        let mut current = String::new();
        for piece in &seq.pieces {
            match piece.strip_suffix(CONTINUATION_MARKER) {
                Some(stem) => current.push_str(stem),
                None => {
                    current.push_str(piece);
                    words.push(std::mem::take(&mut current));
                }
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
        return words;
    }
    for (k, &start) in seq.word_boundaries.iter().enumerate() {
        let end = seq
            .word_boundaries
            .get(k + 1)
            .copied()
            .unwrap_or(seq.pieces.len());
        let mut word = String::new();
        for (i, piece) in seq.pieces[start..end].iter().enumerate() {
            if i + 1 < end - start {
                word.push_str(piece.strip_suffix(CONTINUATION_MARKER).unwrap_or(piece));
            } else {
                word.push_str(piece);
            }
        }
        words.push(word);
    }
    words
}

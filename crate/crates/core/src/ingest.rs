//! Corpus ingestion: streaming readers, the tweet filter, and corpus
//! statistics.
//!
//! A corpus build is a multi-hour streaming job, so nothing here buffers
//! the whole input: readers yield one tweet at a time, the filter decides
//! tweet by tweet, and stats merge associatively so shards can be counted
//! in parallel and combined.
//!
//! Filter checks run in a fixed order and each dropped tweet is charged to
//! exactly one reason: retweet, then token-count bounds, then language,
//! then keywords. Token bounds are measured on the raw tokenized text,
//! before any normalization.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::langid::LanguageIdentifier;
use crate::tokenize::{tokenize, TokenClass, TokenSequence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    pub lang_hint: Option<String>,
    pub is_retweet: bool,
}

/// On-disk record shape for line-delimited input and output.
#[derive(Debug, Serialize, Deserialize)]
struct TweetRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    retweeted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    /// One JSON object per line with at least `id` and `text`, optional
    /// `lang` and `retweeted`.
    JsonLines,
    /// One tweet text per line; the 1-based line number becomes the id.
    PlainText,
}

impl std::str::FromStr for IngestFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(IngestFormat::JsonLines),
            "text" => Ok(IngestFormat::PlainText),
            other => Err(format!("unknown ingest format {other:?} (jsonl|text)")),
        }
    }
}

/// Streaming tweet reader. Malformed records are skipped and counted;
/// only I/O failures surface as errors.
pub struct TweetReader<R: BufRead> {
    inner: R,
    format: IngestFormat,
    line_no: u64,
    skipped: u64,
}

impl<R: BufRead> TweetReader<R> {
    pub fn new(inner: R, format: IngestFormat) -> Self {
        TweetReader { inner, format, line_no: 0, skipped: 0 }
    }

    /// Malformed records seen so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    fn parse_line(&mut self, line: &str) -> Option<RawTweet> {
        match self.format {
            IngestFormat::PlainText => Some(RawTweet {
                id: self.line_no.to_string(),
                text: line.to_string(),
                lang_hint: None,
                is_retweet: false,
            }),
            IngestFormat::JsonLines => {
                if line.trim().is_empty() {
                    return None; // blank filler lines are not records
                }
                match serde_json::from_str::<TweetRecord>(line) {
                    Ok(rec) if !rec.id.is_empty() => Some(RawTweet {
                        id: rec.id,
                        text: rec.text,
                        lang_hint: rec.lang,
                        is_retweet: rec.retweeted,
                    }),
                    _ => {
                        self.skipped += 1;
                        None
                    }
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for TweetReader<R> {
    type Item = Result<RawTweet>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let mut buf = Vec::new();
            match self.inner.read_until(b'\n', &mut buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io("<stream>", e))),
            }
            self.line_no += 1;
            if buf.last() == Some(&b'\n') {
                buf.pop();
                if buf.last() == Some(&b'\r') {
                    buf.pop();
                }
            }
            let line = match String::from_utf8(buf) {
                Ok(s) => s,
                Err(_) => {
                    self.skipped += 1;
                    continue;
                }
            };
            match self.parse_line(&line) {
                Some(t) => return Some(Ok(t)),
                None => continue,
            }
        }
    }
}

/// Writes one tweet in the given record format.
pub fn write_tweet<W: Write>(w: &mut W, tweet: &RawTweet, format: IngestFormat) -> Result<()> {
    let io_err = |e| Error::io("<stream>", e);
    match format {
        IngestFormat::PlainText => writeln!(w, "{}", tweet.text).map_err(io_err),
        IngestFormat::JsonLines => {
            let rec = TweetRecord {
                id: tweet.id.clone(),
                text: tweet.text.clone(),
                lang: tweet.lang_hint.clone(),
                retweeted: tweet.is_retweet,
            };
            let line = serde_json::to_string(&rec)
                .map_err(|e| Error::invalid(format!("serialize record: {e}")))?;
            writeln!(w, "{line}").map_err(io_err)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Inclusive token-count bounds, measured on raw tokenized text.
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Language the corpus targets; checked only when an identifier is
    /// supplied to the filter.
    pub target_lang: String,
    /// Minimum language confidence; 0.0 disables the confidence gate.
    pub lang_min_confidence: f64,
    pub drop_retweets: bool,
    /// Lowercase substrings; a tweet must contain at least one (matched
    /// against the lowercased text). Empty = no keyword gate.
    pub keywords: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 10,
            max_tokens: 64,
            target_lang: "en".to_string(),
            lang_min_confidence: 0.0,
            drop_retweets: true,
            keywords: Vec::new(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(Error::Config(format!(
                "token bounds must satisfy 1 <= min <= max, got {}..{}",
                self.min_tokens, self.max_tokens
            )));
        }
        if !(0.0..=1.0).contains(&self.lang_min_confidence) {
            return Err(Error::Config(format!(
                "lang_min_confidence must be in [0, 1], got {}",
                self.lang_min_confidence
            )));
        }
        if self.keywords.iter().any(|k| k.is_empty()) {
            return Err(Error::Config("empty keyword".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Retweet,
    TooShort,
    TooLong,
    WrongLang,
    NoKeyword,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Retweet => "retweet",
            DropReason::TooShort => "too_short",
            DropReason::TooLong => "too_long",
            DropReason::WrongLang => "wrong_lang",
            DropReason::NoKeyword => "no_keyword",
        }
    }
}

/// Streaming corpus counters. `merge` is associative and commutative, so
/// per-shard stats combine into the same totals in any order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub tweets_in: u64,
    pub tweets_kept: u64,
    /// Token total over kept tweets.
    pub tokens_total: u64,
    /// Subword total over kept tweets, when a merge table was supplied.
    pub subwords_total: Option<u64>,
    pub drop_reasons: BTreeMap<String, u64>,
}

impl CorpusStats {
    pub fn record_drop(&mut self, reason: DropReason) {
        *self.drop_reasons.entry(reason.as_str().to_string()).or_insert(0) += 1;
    }

    /// Charges a drop under a caller-defined label (e.g. "malformed" for
    /// records that never parsed into tweets).
    pub fn record_drop_label(&mut self, label: &str, n: u64) {
        if n > 0 {
            *self.drop_reasons.entry(label.to_string()).or_insert(0) += n;
            self.tweets_in += n;
        }
    }

    pub fn merge(&mut self, other: &CorpusStats) {
        self.tweets_in += other.tweets_in;
        self.tweets_kept += other.tweets_kept;
        self.tokens_total += other.tokens_total;
        self.subwords_total = match (self.subwords_total, other.subwords_total) {
            (Some(a), Some(b)) => Some(a + b),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        for (k, v) in &other.drop_reasons {
            *self.drop_reasons.entry(k.clone()).or_insert(0) += v;
        }
    }

    /// Every input tweet is accounted exactly once.
    pub fn is_conserved(&self) -> bool {
        let dropped: u64 = self.drop_reasons.values().sum();
        self.tweets_in == self.tweets_kept + dropped
    }

    /// Flat `key value` report, sorted keys, one per line.
    pub fn write_report<W: Write>(&self, w: &mut W) -> Result<()> {
        let io_err = |e| Error::io("<stream>", e);
        writeln!(w, "tweets_in {}", self.tweets_in).map_err(io_err)?;
        writeln!(w, "tweets_kept {}", self.tweets_kept).map_err(io_err)?;
        writeln!(w, "tokens_total {}", self.tokens_total).map_err(io_err)?;
        if let Some(s) = self.subwords_total {
            writeln!(w, "subwords_total {s}").map_err(io_err)?;
        }
        for (k, v) in &self.drop_reasons {
            writeln!(w, "dropped_{k} {v}").map_err(io_err)?;
        }
        Ok(())
    }
}

/// True if the token sequence opens with the retweet pattern: a literal
/// `RT` (case-sensitive) followed by a mention.
pub fn is_retweet_text(seq: &TokenSequence) -> bool {
    match (seq.tokens.first(), seq.tokens.get(1)) {
        (Some(first), Some(second)) => {
            first.text == "RT" && second.class == TokenClass::Mention
        }
        _ => false,
    }
}

/// Per-tweet filter. Holds no mutable state, so one instance can serve
/// any number of worker threads.
pub struct TweetFilter<'a> {
    cfg: &'a FilterConfig,
    lang_id: Option<&'a dyn LanguageIdentifier>,
}

impl<'a> TweetFilter<'a> {
    pub fn new(cfg: &'a FilterConfig, lang_id: Option<&'a dyn LanguageIdentifier>) -> Self {
        TweetFilter { cfg, lang_id }
    }

    /// Tokenizes and decides. Returns the token sequence on keep so the
    /// caller never tokenizes twice.
    pub fn evaluate(&self, tweet: &RawTweet) -> std::result::Result<TokenSequence, DropReason> {
        let seq = tokenize(&tweet.text);
        if self.cfg.drop_retweets && (tweet.is_retweet || is_retweet_text(&seq)) {
            return Err(DropReason::Retweet);
        }
        let n = seq.len();
        if n < self.cfg.min_tokens {
            return Err(DropReason::TooShort);
        }
        if n > self.cfg.max_tokens {
            return Err(DropReason::TooLong);
        }
        if let Some(id) = self.lang_id {
            let score = id.identify(&tweet.text, tweet.lang_hint.as_deref());
            if score.lang != self.cfg.target_lang
                || score.confidence < self.cfg.lang_min_confidence
            {
                return Err(DropReason::WrongLang);
            }
        }
        if !self.cfg.keywords.is_empty() {
            let folded = tweet.text.to_lowercase();
            if !self.cfg.keywords.iter().any(|k| folded.contains(k.as_str())) {
                return Err(DropReason::NoKeyword);
            }
        }
        Ok(seq)
    }
}

/// Filters a stream, preserving order. Returns kept tweets and stats.
pub fn filter_corpus<I>(
    stream: I,
    cfg: &FilterConfig,
    lang_id: Option<&dyn LanguageIdentifier>,
) -> (Vec<RawTweet>, CorpusStats)
where
    I: IntoIterator<Item = RawTweet>,
{
    let filter = TweetFilter::new(cfg, lang_id);
    let mut kept = Vec::new();
    let mut stats = CorpusStats::default();
    for tweet in stream {
        stats.tweets_in += 1;
        match filter.evaluate(&tweet) {
            Ok(seq) => {
                stats.tweets_kept += 1;
                stats.tokens_total += seq.len() as u64;
                kept.push(tweet);
            }
            Err(reason) => stats.record_drop(reason),
        }
    }
    debug_assert!(stats.is_conserved());
    (kept, stats)
}

/// Counts tokens (and subwords, when a merge table is given) over a
/// stream without filtering anything.
pub fn corpus_stats<I>(stream: I, bpe: Option<&crate::bpe::MergeTable>) -> CorpusStats
where
    I: IntoIterator<Item = RawTweet>,
{
    let mut stats = CorpusStats::default();
    let mut encoder = bpe.map(crate::bpe::Encoder::new);
    if bpe.is_some() {
        stats.subwords_total = Some(0);
    }
    for tweet in stream {
        stats.tweets_in += 1;
        stats.tweets_kept += 1;
        let seq = tokenize(&tweet.text);
        stats.tokens_total += seq.len() as u64;
        if let Some(ref mut enc) = encoder {
            let sub = enc.encode_sequence(&seq);
            *stats.subwords_total.as_mut().unwrap() += sub.ids.len() as u64;
        }
    }
    stats
}

//! Token-level tweet normalization.
//!
//! Two strategies, both token-count preserving:
//!
//! * soft: mentions become `@USER`, URLs become `HTTPURL`, emoji become
//!   their `:snake_case:` alias from the emoji table. Everything else is
//!   untouched. Applying soft twice equals applying it once.
//! * hard: soft plus dictionary rewriting of word tokens through an
//!   ordered chain of lexical-normalization dictionaries (case-folded
//!   exact match, first dictionary wins). `@USER`, `HTTPURL`, and emoji
//!   aliases are never rewritten.
//!
//! Rewriting never merges or splits tokens, so downstream alignment with
//! span-level annotations survives normalization.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{TokenClass, TokenSequence};

const BUNDLED_EMOJI_TSV: &str = include_str!("../data/emoji.tsv");

/// Placeholder for mention tokens under soft normalization.
pub const USER_TOKEN: &str = "@USER";
/// Placeholder for url tokens under soft normalization.
pub const URL_TOKEN: &str = "HTTPURL";

/// Maps emoji codepoint sequences to `:snake_case:` aliases.
///
/// The bundled snapshot ships with the crate so corpus builds do not
/// depend on whatever emoji data happens to be installed on the host.
pub struct EmojiTable {
    entries: Vec<(Vec<char>, String)>,
    exact: HashMap<Vec<char>, usize>,
    by_first: HashMap<char, Vec<usize>>,
    aliases: HashSet<String>,
    /// Malformed lines ignored while loading.
    pub skipped_lines: u64,
}

impl EmojiTable {
    /// The table compiled into the crate. Tokenization always uses this
    /// one; normalization may use any loaded table.
    pub fn bundled() -> &'static EmojiTable {
        static TABLE: OnceLock<EmojiTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            EmojiTable::parse(BUNDLED_EMOJI_TSV).expect("bundled emoji table must parse")
        })
    }

    pub fn from_path(path: &Path) -> Result<EmojiTable> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EmojiTable::parse(&src)
    }

    /// Parses `HEX HEX..<TAB>:alias:` lines. `#` starts a comment.
    /// Malformed lines are skipped and counted, never fatal.
    pub fn parse(src: &str) -> Result<EmojiTable> {
        let mut entries: Vec<(Vec<char>, String)> = Vec::new();
        let mut skipped = 0u64;
        for line in src.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((codes, alias)) = line.split_once('\t') else {
                skipped += 1;
                continue;
            };
            let alias = alias.trim();
            if alias.is_empty() || alias.chars().any(char::is_whitespace) {
                skipped += 1;
                continue;
            }
            let mut chars = Vec::new();
            let mut ok = true;
            for code in codes.split_whitespace() {
                match u32::from_str_radix(code, 16).ok().and_then(char::from_u32) {
                    Some(c) => chars.push(c),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || chars.is_empty() {
                skipped += 1;
                continue;
            }
            entries.push((chars, alias.to_string()));
        }
        if skipped > 0 {
            log::warn!("emoji table: skipped {skipped} malformed lines");
        }

        let mut exact = HashMap::new();
        let mut by_first: HashMap<char, Vec<usize>> = HashMap::new();
        let mut aliases = HashSet::new();
        for (i, (chars, alias)) in entries.iter().enumerate() {
            // First entry wins on duplicate sequences.
            exact.entry(chars.clone()).or_insert(i);
            by_first.entry(chars[0]).or_default().push(i);
            aliases.insert(alias.clone());
        }
        // Longest-sequence-first per leading char; ties resolve by load
        // order so lookup stays deterministic.
        for idxs in by_first.values_mut() {
            idxs.sort_by(|&a, &b| {
                entries[b].0.len().cmp(&entries[a].0.len()).then(a.cmp(&b))
            });
        }
        Ok(EmojiTable { entries, exact, by_first, aliases, skipped_lines: skipped })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[char], &str)> {
        self.entries.iter().map(|(c, a)| (c.as_slice(), a.as_str()))
    }

    /// Alias for a whole token, if its exact codepoint sequence is listed.
    pub fn alias_for(&self, token_text: &str) -> Option<&str> {
        let chars: Vec<char> = token_text.chars().collect();
        self.exact.get(&chars).map(|&i| self.entries[i].1.as_str())
    }

    /// Longest table sequence at the start of `rest`.
    /// Returns (byte length, alias).
    pub fn longest_match(&self, rest: &str) -> Option<(usize, &str)> {
        let first = rest.chars().next()?;
        let candidates = self.by_first.get(&first)?;
        for &i in candidates {
            let (chars, alias) = &self.entries[i];
            let mut len = 0usize;
            let mut it = rest.chars();
            let mut matched = true;
            for &want in chars {
                match it.next() {
                    Some(c) if c == want => len += c.len_utf8(),
                    _ => {
                        matched = false;
                        break;
                    }
                }
            }
            if matched {
                return Some((len, alias));
            }
        }
        None
    }

    /// True if `s` is one of this table's alias strings.
    pub fn is_alias(&self, s: &str) -> bool {
        self.aliases.contains(s)
    }
}

/// True for strings shaped like an emoji alias (`:fire:`). Used to protect
/// already-normalized tokens regardless of which table produced them.
pub fn is_alias_shaped(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() < 3 || b[0] != b':' || b[b.len() - 1] != b':' {
        return false;
    }
    let inner = &s[1..s.len() - 1];
    let mut chars = inner.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '_' | '+' | '-'))
}

/// One lexical-normalization dictionary: variant -> canonical, keys
/// case-folded. Loaded from TSV (`variant<TAB>canonical`, `#` comments).
#[derive(Debug, Clone)]
pub struct LexNormDict {
    /// Provenance label, normally the source file name.
    pub source: String,
    entries: HashMap<String, String>,
    /// Duplicate keys seen while loading (last occurrence wins).
    pub duplicate_keys: u64,
    /// Malformed lines ignored while loading.
    pub skipped_lines: u64,
}

impl LexNormDict {
    pub fn from_path(path: &Path) -> Result<LexNormDict> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(LexNormDict::parse(&src, &path.display().to_string()))
    }

    pub fn parse(src: &str, source: &str) -> LexNormDict {
        let mut entries = HashMap::new();
        let mut duplicates = 0u64;
        let mut skipped = 0u64;
        for line in src.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((variant, canonical)) = line.split_once('\t') else {
                skipped += 1;
                continue;
            };
            let key = variant.trim().to_lowercase();
            let value = canonical.trim().to_string();
            if key.is_empty() || value.is_empty() || value.chars().any(char::is_whitespace) {
                skipped += 1;
                continue;
            }
            if entries.insert(key, value).is_some() {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            log::warn!("lexnorm dict {source}: {duplicates} duplicate keys (last wins)");
        }
        if skipped > 0 {
            log::warn!("lexnorm dict {source}: skipped {skipped} malformed lines");
        }
        LexNormDict {
            source: source.to_string(),
            entries,
            duplicate_keys: duplicates,
            skipped_lines: skipped,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Case-folded exact whole-token lookup.
    pub fn lookup(&self, token_text: &str) -> Option<&str> {
        self.entries.get(&token_text.to_lowercase()).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Soft,
    Hard,
}

/// One token rewrite: `tokens[index]` went from `before` to `after`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub index: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTweet {
    pub tokens: TokenSequence,
    pub applied_mode: NormMode,
    /// Every changed index appears exactly once; replaying the log on the
    /// input token texts reproduces the output.
    pub change_log: Vec<Change>,
}

/// Soft normalization: `@USER` / `HTTPURL` / emoji aliases. Token count,
/// order, classes, and spans are preserved.
pub fn soft_normalize(seq: &TokenSequence, emoji: &EmojiTable) -> NormalizedTweet {
    let mut tokens = seq.tokens.clone();
    let mut change_log = Vec::new();
    let mut unknown_emoji = 0u64;
    for (index, tok) in tokens.iter_mut().enumerate() {
        let after: Option<String> = match tok.class {
            TokenClass::Mention if tok.text != USER_TOKEN => Some(USER_TOKEN.to_string()),
            TokenClass::Url if tok.text != URL_TOKEN => Some(URL_TOKEN.to_string()),
            TokenClass::Emoji => {
                if is_alias_shaped(&tok.text) {
                    None
                } else if let Some(alias) = emoji.alias_for(&tok.text) {
                    Some(alias.to_string())
                } else {
                    unknown_emoji += 1;
                    None
                }
            }
            _ => None,
        };
        if let Some(after) = after {
            change_log.push(Change { index, before: tok.text.clone(), after: after.clone() });
            tok.text = after;
        }
    }
    if unknown_emoji > 0 {
        log::debug!("soft_normalize: {unknown_emoji} emoji not in table, left verbatim");
    }
    NormalizedTweet {
        tokens: TokenSequence { tokens, source: seq.source.clone() },
        applied_mode: NormMode::Soft,
        change_log,
    }
}

/// Hard normalization: dictionary pass over word tokens. Expects soft
/// normalization to have run already; placeholders and alias-shaped tokens
/// are protected even if they arrive word-classed.
pub fn hard_normalize(seq: &TokenSequence, dict_chain: &[LexNormDict]) -> NormalizedTweet {
    let mut tokens = seq.tokens.clone();
    let mut change_log = Vec::new();
    for (index, tok) in tokens.iter_mut().enumerate() {
        if tok.class != TokenClass::Word {
            continue;
        }
        if tok.text == USER_TOKEN || tok.text == URL_TOKEN || is_alias_shaped(&tok.text) {
            continue;
        }
        let hit = dict_chain.iter().find_map(|d| d.lookup(&tok.text));
        if let Some(canonical) = hit {
            if canonical != tok.text {
                change_log.push(Change {
                    index,
                    before: tok.text.clone(),
                    after: canonical.to_string(),
                });
                tok.text = canonical.to_string();
            }
        }
    }
    NormalizedTweet {
        tokens: TokenSequence { tokens, source: seq.source.clone() },
        applied_mode: NormMode::Hard,
        change_log,
    }
}

/// Counts rewrites per kind, for stats sidecars.
pub fn change_summary(log: &[Change]) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for c in log {
        let kind = if c.after == USER_TOKEN {
            "mention"
        } else if c.after == URL_TOKEN {
            "url"
        } else if is_alias_shaped(&c.after) {
            "emoji"
        } else {
            "word"
        };
        *out.entry(kind.to_string()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::tokenize;
    use proptest::prelude::*;

    #[test]
    fn bundled_table_loads_and_has_the_basics() {
        let t = EmojiTable::bundled();
        assert!(t.len() > 100);
        assert_eq!(t.skipped_lines, 0);
        assert_eq!(t.alias_for("\u{1F602}"), Some(":face_with_tears_of_joy:"));
    }

    #[test]
    fn longest_sequence_wins() {
        let t = EmojiTable::parse("2764\t:red_heart:\n2764 FE0F\t:red_heart:\n").unwrap();
        let (len, alias) = t.longest_match("\u{2764}\u{FE0F}x").unwrap();
        assert_eq!(len, '\u{2764}'.len_utf8() + '\u{FE0F}'.len_utf8());
        assert_eq!(alias, ":red_heart:");
        let (len, _) = t.longest_match("\u{2764}x").unwrap();
        assert_eq!(len, '\u{2764}'.len_utf8());
    }

    #[test]
    fn malformed_table_lines_skip_and_count() {
        let t = EmojiTable::parse("1F602\t:joy:\nnot-hex\t:x:\n1F525 :fire:\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.skipped_lines, 2);
    }

    #[test]
    fn soft_rewrites_mention_url_emoji_only() {
        let seq = tokenize("RT @john: #fun https://t.co/x \u{1F602}!!");
        let out = soft_normalize(&seq, EmojiTable::bundled());
        assert_eq!(
            out.tokens.texts(),
            vec!["RT", "@USER", ":", "#fun", "HTTPURL", ":face_with_tears_of_joy:", "!!"]
        );
        assert_eq!(out.change_log.len(), 3);
        assert_eq!(out.applied_mode, NormMode::Soft);
    }

    #[test]
    fn soft_preserves_token_count_and_spans() {
        let seq = tokenize("@a www.b.c \u{1F525} ok");
        let out = soft_normalize(&seq, EmojiTable::bundled());
        assert_eq!(out.tokens.len(), seq.len());
        for (a, b) in seq.tokens.iter().zip(out.tokens.tokens.iter()) {
            assert_eq!(a.span, b.span);
            assert_eq!(a.class, b.class);
        }
    }

    #[test]
    fn soft_is_idempotent() {
        let seq = tokenize("@a http://x \u{1F602} plain");
        let once = soft_normalize(&seq, EmojiTable::bundled());
        let twice = soft_normalize(&once.tokens, EmojiTable::bundled());
        assert_eq!(once.tokens, twice.tokens);
        assert!(twice.change_log.is_empty());
    }

    #[test]
    fn unknown_emoji_left_verbatim() {
        let t = EmojiTable::parse("1F602\t:joy:\n").unwrap();
        let seq = tokenize("\u{1F525}");
        let out = soft_normalize(&seq, &t);
        assert_eq!(out.tokens.texts(), vec!["\u{1F525}"]);
        assert!(out.change_log.is_empty());
    }

    #[test]
    fn replaying_change_log_reproduces_output() {
        let seq = tokenize("RT @a check https://x.y \u{1F602} loool");
        let out = soft_normalize(&seq, EmojiTable::bundled());
        let mut replay: Vec<String> =
            seq.tokens.iter().map(|t| t.text.clone()).collect();
        for c in &out.change_log {
            assert_eq!(replay[c.index], c.before);
            replay[c.index] = c.after.clone();
        }
        let texts: Vec<String> =
            out.tokens.tokens.iter().map(|t| t.text.clone()).collect();
        assert_eq!(replay, texts);
    }

    #[test]
    fn hard_applies_first_dict_hit_case_folded() {
        let d1 = LexNormDict::parse("2moro\ttomorrow\nGR8\tgreat\n", "d1");
        let d2 = LexNormDict::parse("2moro\tTOMORROW2\nluv\tlove\n", "d2");
        let seq = tokenize("2MORO gr8 luv it");
        let out = hard_normalize(&seq, &[d1, d2]);
        assert_eq!(out.tokens.texts(), vec!["tomorrow", "great", "love", "it"]);
        assert_eq!(out.applied_mode, NormMode::Hard);
    }

    #[test]
    fn hard_never_touches_placeholders_or_aliases() {
        let dict = LexNormDict::parse(
            "@user\tat-user\nhttpurl\tweb\n:fire:\tflame\nrt\tretweet\n",
            "d",
        );
        let seq = tokenize("RT @a http://x \u{1F525}");
        let soft = soft_normalize(&seq, EmojiTable::bundled());
        let out = hard_normalize(&soft.tokens, &[dict]);
        assert_eq!(out.tokens.texts(), vec!["RT", "@USER", "HTTPURL", ":fire:"]);
        assert!(out.change_log.is_empty());
    }

    #[test]
    fn dict_duplicate_keys_last_wins_and_counted() {
        let d = LexNormDict::parse("u\tyou\nu\tyour\n", "d");
        assert_eq!(d.duplicate_keys, 1);
        assert_eq!(d.lookup("U"), Some("your"));
    }

    #[test]
    fn dict_malformed_lines_counted() {
        let d = LexNormDict::parse("ok\tfine\nbroken-line\n# comment\n", "d");
        assert_eq!(d.skipped_lines, 1);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn alias_shape_checks() {
        assert!(is_alias_shaped(":fire:"));
        assert!(is_alias_shaped(":keycap_1:"));
        assert!(!is_alias_shaped("::"));
        assert!(!is_alias_shaped(":30:"));
        assert!(!is_alias_shaped(":Fire:"));
        assert!(!is_alias_shaped("fire"));
    }

    fn tweet_text() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[a-z]{1,8}",
            "@[A-Za-z0-9_]{1,15}",
            "#[a-z][a-z0-9]{0,6}",
            Just("https://t.co/q".to_string()),
            Just("\u{1F602}".to_string()),
            Just("\u{2764}\u{FE0F}".to_string()),
            Just(":)".to_string()),
            "[0-9]{1,3}",
            "[!?]{1,3}",
            Just("RT".to_string()),
        ];
        proptest::collection::vec(piece, 0..10).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn soft_idempotent_and_count_preserving(text in tweet_text()) {
            let table = EmojiTable::bundled();
            let seq = tokenize(&text);
            let once = soft_normalize(&seq, table);
            prop_assert_eq!(once.tokens.len(), seq.len());
            let twice = soft_normalize(&once.tokens, table);
            prop_assert!(twice.change_log.is_empty());
            prop_assert_eq!(&once.tokens, &twice.tokens);
        }

        #[test]
        fn changed_indices_unique_and_replayable(text in tweet_text()) {
            let seq = tokenize(&text);
            let out = soft_normalize(&seq, EmojiTable::bundled());
            let mut seen = std::collections::HashSet::new();
            for c in &out.change_log {
                prop_assert!(seen.insert(c.index));
                prop_assert_eq!(&seq.tokens[c.index].text, &c.before);
                prop_assert_eq!(&out.tokens.tokens[c.index].text, &c.after);
            }
        }
    }
}

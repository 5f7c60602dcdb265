//! Tweet-aware word tokenizer producing class-labeled tokens.
//!
//! The grammar is deliberately frozen so segmentation never drifts between
//! corpus builds: token boundaries are a stability contract, not a tuning
//! surface. Rules, in match precedence order at each scan position:
//!
//! * special-token aliases: `@USER`, `HTTPURL`, and `:snake_case:` emoji
//!   aliases classify as mention / url / emoji even though they are not
//!   "real" mentions, URLs, or emoji codepoints
//! * url: `http://`, `https://`, or `www.` prefix, then everything up to
//!   the next whitespace
//! * mention: `@` followed by 1..=15 of `[A-Za-z0-9_]`
//! * hashtag: `#` followed by a letter, then letters/digits/underscores
//! * emoji: longest codepoint sequence present in the bundled emoji table,
//!   else any single scalar from the common emoji blocks
//! * emoticon: longest match from a fixed ASCII-art list (`:)`, `:-(`, ...)
//! * number: digits with optional `.`/`,` groups, not glued to a letter
//! * word: letters/digits/underscore start, continuing through
//!   apostrophes and hyphens
//! * punct: a maximal run of one repeated character (`!!`, `???`)
//!
//! `RT` is a retweet marker only as the first token of a sequence;
//! elsewhere it is an ordinary word. No character squeezing, no case
//! folding: the token text is always a verbatim slice of the source.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::normalize::EmojiTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Word,
    Mention,
    Url,
    Hashtag,
    Emoji,
    RtMarker,
    Punct,
    Emoticon,
    Number,
}

impl TokenClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Word => "word",
            TokenClass::Mention => "mention",
            TokenClass::Url => "url",
            TokenClass::Hashtag => "hashtag",
            TokenClass::Emoji => "emoji",
            TokenClass::RtMarker => "rt_marker",
            TokenClass::Punct => "punct",
            TokenClass::Emoticon => "emoticon",
            TokenClass::Number => "number",
        }
    }
}

impl std::str::FromStr for TokenClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "word" => TokenClass::Word,
            "mention" => TokenClass::Mention,
            "url" => TokenClass::Url,
            "hashtag" => TokenClass::Hashtag,
            "emoji" => TokenClass::Emoji,
            "rt_marker" => TokenClass::RtMarker,
            "punct" => TokenClass::Punct,
            "emoticon" => TokenClass::Emoticon,
            "number" => TokenClass::Number,
            other => return Err(format!("unknown token class {other:?}")),
        })
    }
}

impl std::fmt::Display for TokenClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub class: TokenClass,
    /// Byte offsets into the source string. Holds for tokenizer output;
    /// normalization rewrites `text` but keeps the original span.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
    pub source: String,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Builds a sequence from pre-split words (task datasets arrive already
    /// tokenized). Classes are assigned with the same rules `tokenize` uses,
    /// including the sequence-initial `RT` rule.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> TokenSequence {
        let source = words
            .iter()
            .map(|w| w.as_ref())
            .collect::<Vec<_>>()
            .join(" ");
        let mut tokens = Vec::with_capacity(words.len());
        let mut offset = 0;
        for (i, w) in words.iter().enumerate() {
            let w = w.as_ref();
            let class = classify_at(w, i == 0);
            tokens.push(Token {
                text: w.to_string(),
                class,
                span: (offset, offset + w.len()),
            });
            offset += w.len() + 1;
        }
        TokenSequence { tokens, source }
    }
}

/// Emoticons matched longest-first. Entries ending in a word character
/// additionally require a non-word follower so `xD` never eats into
/// `xDream`.
const EMOTICONS: &[&str] = &[
    ":-)", ":)", ":-(", ":(", ";-)", ";)", ":-D", ":D", ";D", ":-P", ":P", ":-p", ":p", ":-/",
    ":/", ":-\\", ":\\", ":-|", ":|", ":'(", ":')", ":'-(", ":-o", ":-O", ":o", ":O", "<3", "</3",
    "=)", "=(", "=D", "=P", "^_^", "^-^", "-_-", "o_O", "O_o", "xD", "XD", ":3", ">:(", ">:)",
    "D:", ":*", ":-*",
];

fn emoticons_longest_first() -> &'static Vec<&'static str> {
    static SORTED: OnceLock<Vec<&'static str>> = OnceLock::new();
    SORTED.get_or_init(|| {
        let mut v = EMOTICONS.to_vec();
        v.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        v
    })
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?i:https?://|www\.)\S+").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^@[A-Za-z0-9_]{1,15}").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^#\p{L}[\p{L}\p{N}_]*").unwrap())
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^-?\p{N}+(?:[.,]\p{N}+)*").unwrap())
}

fn alias_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^:[a-z][a-z0-9_+\-]*:").unwrap())
}

/// Scalar ranges treated as emoji when a sequence is not in the table.
/// Joiners and variation selectors stay in-class so table misses degrade
/// into per-scalar emoji tokens instead of stray punctuation.
fn is_emoji_scalar(c: char) -> bool {
    matches!(u32::from(c),
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2B00..=0x2BFF
        | 0xFE0F
        | 0x200D
        | 0x20E3)
}

fn is_word_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_word_continue(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '\'' | '\u{2019}' | '-')
}

/// Matches one token at the start of `rest`. Returns (byte length, class).
/// `rest` must begin with a non-whitespace character.
fn match_at(rest: &str) -> (usize, TokenClass) {
    let first = rest.chars().next().expect("match_at on empty input");

    // Special-token alias rule: normalized placeholders keep their class
    // when text is re-examined. `@USER` also matches the mention regex;
    // `HTTPURL` and `:alias:` forms would not survive their own rules.
    if first == ':' {
        if let Some(m) = alias_re().find(rest) {
            return (m.end(), TokenClass::Emoji);
        }
    }

    if matches!(first, 'h' | 'H' | 'w' | 'W') {
        if rest.starts_with("HTTPURL") {
            return ("HTTPURL".len(), TokenClass::Url);
        }
        if let Some(m) = url_re().find(rest) {
            return (m.end(), TokenClass::Url);
        }
    }

    if first == '@' {
        if let Some(m) = mention_re().find(rest) {
            return (m.end(), TokenClass::Mention);
        }
    }

    if first == '#' {
        if let Some(m) = hashtag_re().find(rest) {
            return (m.end(), TokenClass::Hashtag);
        }
    }

    // Emoji before number and punct: keycap sequences start with a digit
    // or '#' and must win over those rules.
    if let Some((len, _alias)) = EmojiTable::bundled().longest_match(rest) {
        return (len, TokenClass::Emoji);
    }
    if is_emoji_scalar(first) {
        return (first.len_utf8(), TokenClass::Emoji);
    }

    for pat in emoticons_longest_first() {
        if let Some(after) = rest.strip_prefix(pat) {
            let last = pat.chars().last().unwrap();
            let next = after.chars().next();
            let glued = is_word_continue(last)
                && next.map(|c| c.is_alphanumeric()).unwrap_or(false);
            if !glued {
                return (pat.len(), TokenClass::Emoticon);
            }
        }
    }

    if first.is_numeric() || first == '-' {
        if let Some(m) = number_re().find(rest) {
            let next = rest[m.end()..].chars().next();
            let glued = next.map(|c| c.is_alphanumeric() || c == '_').unwrap_or(false);
            if !glued && m.end() > usize::from(first == '-') {
                return (m.end(), TokenClass::Number);
            }
        }
    }

    if is_word_start(first) {
        let mut end = first.len_utf8();
        for c in rest[end..].chars() {
            if is_word_continue(c) && !is_emoji_scalar(c) {
                end += c.len_utf8();
            } else {
                break;
            }
        }
        let text = &rest[..end];
        if text == "HTTPURL" {
            return (end, TokenClass::Url);
        }
        return (end, TokenClass::Word);
    }

    // Fallback: a run of the repeated leading character. "!!" and "???"
    // group; "!?" splits at the character change.
    let mut end = first.len_utf8();
    for c in rest[end..].chars() {
        if c == first {
            end += c.len_utf8();
        } else {
            break;
        }
    }
    (end, TokenClass::Punct)
}

fn classify_at(text: &str, sequence_start: bool) -> TokenClass {
    if text.is_empty() {
        return TokenClass::Word;
    }
    if sequence_start && text == "RT" {
        return TokenClass::RtMarker;
    }
    let (len, class) = match_at(text);
    // A single token that matched a word run in full classifies by that
    // run; partial matches still report the leading rule's class.
    let _ = len;
    class
}

/// Classifies one standalone token. A lone token counts as sequence start,
/// so `classify_token("RT")` is `rt_marker`; inside `tokenize` a non-initial
/// `RT` is demoted to `word`.
pub fn classify_token(text: &str) -> TokenClass {
    classify_at(text, true)
}

/// Splits `text` into class-labeled tokens. Whitespace separates tokens and
/// is never emitted; every non-whitespace byte lands in exactly one token.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut i = 0;
    let bytes_len = text.len();
    while i < bytes_len {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let (len, mut class) = match_at(rest);
        debug_assert!(len > 0);
        let tok_text = &rest[..len];
        if class == TokenClass::Word && tok_text == "RT" && tokens.is_empty() {
            class = TokenClass::RtMarker;
        }
        tokens.push(Token {
            text: tok_text.to_string(),
            class,
            span: (i, i + len),
        });
        i += len;
    }
    TokenSequence { tokens, source: text.to_string() }
}

//! Tokenization, stopword filtering, sentence segmentation and set similarity.
//!
//! Every other stage (indexing, reranking, judgment transfer) consumes the
//! output of [`tokenize`], so the rules here define what a "word" means for
//! the whole system. Tokens are whitespace-delimited, stripped of leading and
//! trailing punctuation, and lowercased. There is no stemming.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bumped whenever tokenization output could change for some input.
pub const TOKENIZER_VERSION: &str = "ws-strip-lower/1";

/// Bumped whenever the bundled stopword list changes.
pub const STOPWORDS_VERSION: &str = "en-441/1";

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Abbreviations whose trailing period never ends a sentence (lowercase, no period).
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "gen", "gov", "sen", "rep",
    "col", "capt", "lt", "sgt", "rev", "hon", "pres", "supt", "inc", "co", "corp", "ltd", "bros",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "vs",
    "etc", "no", "vol", "fig", "approx", "dept", "est", "u.s", "u.k", "u.n", "e.g", "i.e", "a.m",
    "p.m",
];

/// A sentence as a normalized token sequence plus its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub raw: String,
    pub doc_id: Option<String>,
    pub position: usize,
}

impl TokenizedSentence {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize_tokens(&raw);
        Self {
            tokens,
            raw,
            doc_id: None,
            position: 0,
        }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let raw = tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        Self::new(raw)
    }

    pub fn with_source(mut self, doc_id: impl Into<String>, position: usize) -> Self {
        self.doc_id = Some(doc_id.into());
        self.position = position;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Distinct tokens, sorted.
    pub fn token_set(&self) -> Vec<&str> {
        token_set(&self.tokens)
    }
}

/// Tokenize `text` into a [`TokenizedSentence`] with no source attribution.
pub fn tokenize(text: &str) -> TokenizedSentence {
    TokenizedSentence::new(text)
}

/// The bare token list for `text`.
pub fn tokenize_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|piece| {
            // Lowercase before trimming: some capitals lowercase to a letter
            // followed by a combining mark, which must not survive at an edge.
            let lower = piece.to_lowercase();
            let core = lower.trim_matches(|c: char| !c.is_alphanumeric());
            if core.is_empty() {
                None
            } else {
                Some(core.to_string())
            }
        })
        .collect()
}

/// Sorted, deduplicated view of a token slice.
pub fn token_set<S: AsRef<str>>(tokens: &[S]) -> Vec<&str> {
    let mut set: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    set.sort_unstable();
    set.dedup();
    set
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self {
            words: HashSet::new(),
        }
    }

    /// The English list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .flat_map(|w| tokenize_tokens(w.as_ref()))
                .collect(),
        }
    }

    /// Parse the one-token-per-line format; `#` starts a comment.
    pub fn parse(content: &str) -> Self {
        Self::from_words(content.lines().map(|line| match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&content))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Order-preserving filter that keeps duplicates of non-stopwords.
pub fn remove_stopwords<'a>(sentence: &'a TokenizedSentence, sw: &StopwordList) -> Vec<&'a str> {
    sentence
        .tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !sw.contains(t))
        .collect()
}

/// |a ∩ b| / |a ∪ b| over distinct tokens; 1.0 when both are empty.
pub fn jaccard<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    let a = token_set(a);
    let b = token_set(b);
    jaccard_sorted(&a, &b)
}

/// Jaccard over two already sorted and deduplicated sets.
pub fn jaccard_sorted(a: &[&str], b: &[&str]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = sorted_intersection_len(a, b);
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

pub(crate) fn sorted_intersection_len(a: &[&str], b: &[&str]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Split a document into sentences on terminal `.`, `?` or `!` (optionally
/// followed by closing quotes or brackets) that precede whitespace or the end
/// of text. A period after a known abbreviation or a single-letter initial
/// does not split. Blank lines always split.
///
/// Sentences that contain no tokens are dropped, so positions are dense.
pub fn segment_sentences(document_text: &str) -> Vec<TokenizedSentence> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let bytes = document_text.as_bytes();
    let mut iter = document_text.char_indices().peekable();

    while let Some((i, c)) = iter.next() {
        let is_blank_line = c == '\n' && {
            let rest = &document_text[i + 1..];
            let line_end = rest.find('\n');
            matches!(line_end, Some(e) if rest[..e].trim().is_empty())
        };
        if is_blank_line {
            spans.push((start, i));
            start = i + 1;
            continue;
        }
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        // Absorb runs of terminators and closing quotes/brackets.
        let mut end = i + c.len_utf8();
        while let Some(&(j, next)) = iter.peek() {
            if matches!(next, '.' | '?' | '!' | '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
                end = j + next.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        let at_boundary = end >= bytes.len()
            || document_text[end..]
                .chars()
                .next()
                .is_some_and(char::is_whitespace);
        if !at_boundary {
            continue;
        }
        if c == '.' && is_abbreviation(&document_text[start..i]) {
            continue;
        }
        spans.push((start, end));
        start = end;
    }
    if start < document_text.len() {
        spans.push((start, document_text.len()));
    }

    spans
        .into_iter()
        .map(|(s, e)| document_text[s..e].trim())
        .filter(|raw| !raw.is_empty())
        .map(TokenizedSentence::new)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(pos, mut s)| {
            s.position = pos;
            s
        })
        .collect()
}

/// Whether the word ending right before a period is an abbreviation or initial.
fn is_abbreviation(before_period: &str) -> bool {
    let word = before_period
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if word.is_empty() {
        return false;
    }
    let mut chars = word.chars();
    if let (Some(first), None) = (chars.next(), chars.next()) {
        // Single capital letter: an initial such as "J. Smith".
        return first.is_uppercase();
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

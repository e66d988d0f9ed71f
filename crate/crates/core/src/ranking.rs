//! Scored candidate lists and the global ordering rule: score descending,
//! then key ascending.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::TokenizedSentence;

/// Which scorer produced a candidate's current score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Bm25,
    Overlap,
    Idf,
    Cnn,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Bm25 => "bm25",
            Stage::Overlap => "overlap",
            Stage::Idf => "idf",
            Stage::Cnn => "cnn",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A sentence awaiting scoring, identified by a join key such as `docid#3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub key: String,
    pub sentence: TokenizedSentence,
}

impl Candidate {
    pub fn new(key: impl Into<String>, sentence: TokenizedSentence) -> Self {
        Self {
            key: key.into(),
            sentence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub question_id: String,
    pub key: String,
    pub sentence: TokenizedSentence,
    pub score: f64,
    pub rank: usize,
    pub stage: Stage,
}

impl ScoredCandidate {
    pub fn doc_id(&self) -> Option<&str> {
        self.sentence.doc_id.as_deref()
    }
}

/// Score descending, then key ascending. NaN sorts last.
pub fn by_score_then_key(a_score: f64, a_key: &str, b_score: f64, b_key: &str) -> Ordering {
    match (a_score.is_nan(), b_score.is_nan()) {
        (true, false) => return Ordering::Greater,
        (false, true) => return Ordering::Less,
        _ => {}
    }
    b_score
        .total_cmp(&a_score)
        .then_with(|| a_key.cmp(b_key))
}

/// Sort by the global rule, truncate to `k`, and assign ranks 1..=k.
pub fn rank_and_truncate(
    question_id: &str,
    scored: Vec<(Candidate, f64)>,
    k: usize,
    stage: Stage,
) -> Vec<ScoredCandidate> {
    let mut scored = scored;
    scored.sort_by(|(a, sa), (b, sb)| by_score_then_key(*sa, &a.key, *sb, &b.key));
    scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (c, score))| ScoredCandidate {
            question_id: question_id.to_string(),
            key: c.key,
            sentence: c.sentence,
            score,
            rank: i + 1,
            stage,
        })
        .collect()
}

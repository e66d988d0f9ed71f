//! Word-overlap answer selection baselines and the four overlap features fed
//! to the neural reranker's join layer.
//!
//! All measures use distinct-word (set) semantics. The baselines are raw
//! counts / idf sums; the features are normalized to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::index::IdfSource;
use crate::ranking::{rank_and_truncate, Candidate, ScoredCandidate, Stage};
use crate::text::{remove_stopwords, sorted_intersection_len, StopwordList, TokenizedSentence};

/// The four overlap features, in join-layer order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OverlapFeatures {
    pub overlap_all: f64,
    pub idf_overlap_all: f64,
    pub overlap_content: f64,
    pub idf_overlap_content: f64,
}

impl OverlapFeatures {
    pub const LEN: usize = 4;

    pub fn to_array(&self) -> [f64; 4] {
        [
            self.overlap_all,
            self.idf_overlap_all,
            self.overlap_content,
            self.idf_overlap_content,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// Count of shared non-stopwords.
    Count,
    /// Shared non-stopwords weighted by idf.
    Idf,
}

impl OverlapMode {
    pub fn stage(self) -> Stage {
        match self {
            OverlapMode::Count => Stage::Overlap,
            OverlapMode::Idf => Stage::Idf,
        }
    }
}

fn content_set<'a>(s: &'a TokenizedSentence, sw: &StopwordList) -> Vec<&'a str> {
    let mut set = remove_stopwords(s, sw);
    set.sort_unstable();
    set.dedup();
    set
}

fn shared<'a>(q: &[&'a str], c: &[&str]) -> Vec<&'a str> {
    q.iter().copied().filter(|t| c.binary_search(t).is_ok()).collect()
}

/// Number of distinct non-stopwords of the question that occur in the candidate.
pub fn word_overlap(question: &TokenizedSentence, candidate: &TokenizedSentence, sw: &StopwordList) -> usize {
    sorted_intersection_len(&content_set(question, sw), &content_set(candidate, sw))
}

/// Sum of question-word idf over the distinct shared non-stopwords.
pub fn idf_word_overlap(
    question: &TokenizedSentence,
    candidate: &TokenizedSentence,
    sw: &StopwordList,
    idf: &impl IdfSource,
) -> f64 {
    let q = content_set(question, sw);
    let c = content_set(candidate, sw);
    shared(&q, &c).into_iter().map(|t| idf.idf(t)).sum()
}

fn normalized(q: &[&str], c: &[&str], idf: &impl IdfSource) -> (f64, f64) {
    if q.is_empty() {
        return (0.0, 0.0);
    }
    let inter = sorted_intersection_len(q, c);
    let union = q.len() + c.len() - inter;
    let q_mass: f64 = q.iter().map(|t| idf.idf(t)).sum();
    let shared_mass: f64 = shared(q, c).into_iter().map(|t| idf.idf(t)).sum();
    let idf_frac = if q_mass > 0.0 { shared_mass / q_mass } else { 0.0 };
    (inter as f64 / union as f64, idf_frac)
}

/// Overlap features over all words and over non-stopwords.
///
/// Count slots are `|Q ∩ C| / |Q ∪ C|`; idf slots are the idf mass of the
/// shared words over the idf mass of the question's words. A question with
/// no (content) words yields zeros in the corresponding slots.
pub fn extract_features(
    question: &TokenizedSentence,
    candidate: &TokenizedSentence,
    sw: &StopwordList,
    idf: &impl IdfSource,
) -> OverlapFeatures {
    let (overlap_all, idf_overlap_all) = normalized(&question.token_set(), &candidate.token_set(), idf);
    let (overlap_content, idf_overlap_content) =
        normalized(&content_set(question, sw), &content_set(candidate, sw), idf);
    OverlapFeatures { overlap_all, idf_overlap_all, overlap_content, idf_overlap_content }
}

/// Score every candidate by word overlap and keep the top `k`.
pub fn rerank_overlap(
    question_id: &str,
    question: &TokenizedSentence,
    candidates: Vec<Candidate>,
    mode: OverlapMode,
    k: usize,
    sw: &StopwordList,
    idf: &impl IdfSource,
) -> Vec<ScoredCandidate> {
    let q = content_set(question, sw);
    let scored = candidates
        .into_iter()
        .map(|c| {
            let cs = content_set(&c.sentence, sw);
            let score = match mode {
                OverlapMode::Count => sorted_intersection_len(&q, &cs) as f64,
                OverlapMode::Idf => shared(&q, &cs).into_iter().map(|t| idf.idf(t)).sum(),
            };
            (c, score)
        })
        .collect();
    rank_and_truncate(question_id, scored, k, mode.stage())
}

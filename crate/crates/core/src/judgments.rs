//! Sparse relevance judgments and their transfer from annotated dataset
//! sentences onto sentences retrieved from a collection.
//!
//! Retrieved text rarely matches the dataset verbatim (tokenization and
//! surrounding context differ), so a retrieved sentence inherits the label of
//! its most similar annotated sentence for the same question, provided the
//! token-set Jaccard similarity is strictly above a threshold.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data_io::DatasetSplit;
use crate::text::{jaccard_sorted, token_set, TokenizedSentence};

pub const DEFAULT_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Relevant,
    Nonrelevant,
}

/// Tri-state lookup result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Judgment {
    Relevant,
    Nonrelevant,
    Unjudged,
}

impl From<Option<Relevance>> for Judgment {
    fn from(r: Option<Relevance>) -> Self {
        match r {
            Some(Relevance::Relevant) => Judgment::Relevant,
            Some(Relevance::Nonrelevant) => Judgment::Nonrelevant,
            None => Judgment::Unjudged,
        }
    }
}

/// Labels keyed by (question id, sentence key). Absent keys are unjudged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentStore {
    labels: BTreeMap<String, BTreeMap<String, Relevance>>,
}

impl JudgmentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or overwrite; returns the previous label.
    pub fn insert(&mut self, qid: &str, key: &str, rel: Relevance) -> Option<Relevance> {
        self.labels
            .entry(qid.to_string())
            .or_default()
            .insert(key.to_string(), rel)
    }

    pub fn get(&self, qid: &str, key: &str) -> Judgment {
        self.labels
            .get(qid)
            .and_then(|m| m.get(key))
            .copied()
            .into()
    }

    pub fn question(&self, qid: &str) -> Option<&BTreeMap<String, Relevance>> {
        self.labels.get(qid)
    }

    pub fn num_relevant(&self, qid: &str) -> usize {
        self.count(qid, Relevance::Relevant)
    }

    pub fn num_nonrelevant(&self, qid: &str) -> usize {
        self.count(qid, Relevance::Nonrelevant)
    }

    fn count(&self, qid: &str, rel: Relevance) -> usize {
        self.labels
            .get(qid)
            .map_or(0, |m| m.values().filter(|r| **r == rel).count())
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All (qid, key, label) triples in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Relevance)> {
        self.labels.iter().flat_map(|(q, m)| {
            m.iter().map(move |(k, r)| (q.as_str(), k.as_str(), *r))
        })
    }
}

/// A sentence pulled from the collection for a question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievedSentence {
    pub question_id: String,
    pub key: String,
    pub sentence: TokenizedSentence,
}

/// Which label wins when several annotated sentences tie on the best Jaccard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePreference {
    #[default]
    Relevant,
    Nonrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    /// A match requires Jaccard strictly greater than this.
    pub threshold: f64,
    pub tie_preference: TiePreference,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            tie_preference: TiePreference::Relevant,
        }
    }
}

/// Audit record for one transferred label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub question_id: String,
    pub sentence_key: String,
    /// `<qid>/<index>` of the annotated sentence within its question group.
    pub matched_dataset_sentence_id: String,
    pub jaccard: f64,
    pub transferred_label: Relevance,
}

#[derive(Debug, Clone, Default)]
pub struct TransferOutput {
    pub store: JudgmentStore,
    pub records: Vec<MatchRecord>,
}

impl TransferOutput {
    pub fn audit_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("MatchRecord serializes"));
            out.push('\n');
        }
        out
    }
}

struct Annotated<'a> {
    index: usize,
    set: Vec<&'a str>,
    relevance: Relevance,
}

fn annotated_by_question(dataset: &DatasetSplit) -> HashMap<&str, Vec<Annotated<'_>>> {
    dataset
        .groups
        .iter()
        .map(|g| {
            let list = g
                .candidates
                .iter()
                .enumerate()
                .map(|(index, c)| Annotated {
                    index,
                    set: token_set(&c.sentence.tokens),
                    relevance: if c.is_relevant() {
                        Relevance::Relevant
                    } else {
                        Relevance::Nonrelevant
                    },
                })
                .collect();
            (g.question_id.as_str(), list)
        })
        .collect()
}

/// Best annotated match for one retrieved sentence: highest Jaccard, then the
/// preferred label, then lowest index.
fn best_match<'a>(
    retrieved: &[&str],
    annotated: &'a [Annotated<'a>],
    prefer: TiePreference,
) -> Option<(&'a Annotated<'a>, f64)> {
    let preferred = match prefer {
        TiePreference::Relevant => Relevance::Relevant,
        TiePreference::Nonrelevant => Relevance::Nonrelevant,
    };
    let mut best: Option<(&Annotated, f64)> = None;
    for a in annotated {
        let j = jaccard_sorted(retrieved, &a.set);
        let better = match best {
            None => true,
            Some((b, bj)) => {
                j > bj || (j == bj && a.relevance == preferred && b.relevance != preferred)
            }
        };
        if better {
            best = Some((a, j));
        }
    }
    best
}

/// Transfer labels from `dataset` onto `retrieved`, matching only within the
/// same question id.
pub fn transfer(
    retrieved: &[RetrievedSentence],
    dataset: &DatasetSplit,
    config: TransferConfig,
) -> TransferOutput {
    let annotated = annotated_by_question(dataset);
    let mut out = TransferOutput::default();
    for r in retrieved {
        let Some(list) = annotated.get(r.question_id.as_str()) else {
            continue;
        };
        let set = token_set(&r.sentence.tokens);
        if set.is_empty() {
            continue;
        }
        if let Some((a, j)) = best_match(&set, list, config.tie_preference) {
            if j > config.threshold {
                out.store.insert(&r.question_id, &r.key, a.relevance);
                out.records.push(MatchRecord {
                    question_id: r.question_id.clone(),
                    sentence_key: r.key.clone(),
                    matched_dataset_sentence_id: format!("{}/{}", r.question_id, a.index),
                    jaccard: j,
                    transferred_label: a.relevance,
                });
            }
        }
    }
    out.records
        .sort_by(|a, b| (&a.question_id, &a.sentence_key).cmp(&(&b.question_id, &b.sentence_key)));
    out.records
        .dedup_by(|a, b| a.question_id == b.question_id && a.sentence_key == b.sentence_key);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{QAPair, SplitName};

    fn dataset(rows: &[(&str, &str, u8)]) -> DatasetSplit {
        DatasetSplit::from_pairs(
            SplitName::Test,
            rows.iter().map(|(q, c, l)| QAPair {
                qid: q.to_string(),
                question: "question".into(),
                candidate: c.to_string(),
                label: *l,
            }),
        )
    }

    fn retrieved(q: &str, key: &str, text: &str) -> RetrievedSentence {
        RetrievedSentence {
            question_id: q.into(),
            key: key.into(),
            sentence: TokenizedSentence::new(text),
        }
    }

    #[test]
    fn store_tri_state() {
        let mut s = JudgmentStore::new();
        assert_eq!(s.get("q", "k"), Judgment::Unjudged);
        s.insert("q", "k", Relevance::Relevant);
        assert_eq!(s.insert("q", "k", Relevance::Nonrelevant), Some(Relevance::Relevant));
        assert_eq!(s.get("q", "k"), Judgment::Nonrelevant);
        assert_eq!((s.num_relevant("q"), s.num_nonrelevant("q")), (0, 1));
    }

    #[test]
    fn identical_and_disjoint() {
        let ds = dataset(&[("q1", "the cat sat", 1), ("q1", "a dog ran", 0)]);
        let out = transfer(
            &[retrieved("q1", "d#0", "The cat sat."), retrieved("q1", "d#1", "zebras fly")],
            &ds,
            TransferConfig::default(),
        );
        assert_eq!(out.store.get("q1", "d#0"), Judgment::Relevant);
        assert_eq!(out.store.get("q1", "d#1"), Judgment::Unjudged);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].jaccard, 1.0);
        assert_eq!(out.records[0].matched_dataset_sentence_id, "q1/0");
    }

    #[test]
    fn strict_threshold_boundary() {
        // 7 shared of 10 total distinct tokens: exactly 0.7, so unjudged.
        let ds = dataset(&[("q", "a b c d e f g h", 1)]);
        let exact = retrieved("q", "k", "a b c d e f g i j");
        assert_eq!(jaccard_sorted(&exact.sentence.token_set(), &token_set(&["a", "b", "c", "d", "e", "f", "g", "h"])), 0.7);
        let out = transfer(&[exact], &ds, TransferConfig::default());
        assert!(out.store.is_empty());
    }

    #[test]
    fn ties_prefer_relevant_then_lowest_index_and_stay_within_question() {
        let ds = dataset(&[
            ("q", "a b c x", 0),
            ("q", "a b c y", 1),
            ("q", "a b c z", 1),
            ("other", "a b c", 1),
        ]);
        let r = retrieved("q", "k", "a b c");
        let out = transfer(std::slice::from_ref(&r), &ds, TransferConfig::default());
        assert_eq!(out.records[0].matched_dataset_sentence_id, "q/1");
        assert_eq!(out.store.get("q", "k"), Judgment::Relevant);

        let cfg = TransferConfig { tie_preference: TiePreference::Nonrelevant, ..Default::default() };
        let out = transfer(std::slice::from_ref(&r), &ds, cfg);
        assert_eq!(out.records[0].matched_dataset_sentence_id, "q/0");
        assert_eq!(out.store.get("other", "k"), Judgment::Unjudged);
    }

    #[test]
    fn nightingale_pair_transfers() {
        let ds = dataset(&[(
            "q",
            "In 1820 , the founder of modern nursing , Florence Nightingale , was born in Florence , Italy .",
            1,
        )]);
        let r = retrieved(
            "q",
            "APW19990512.0001#3",
            "On this date: In 1820, the founder of modern nursing, Florence Nightingale, was born in Florence, Italy.",
        );
        let out = transfer(&[r], &ds, TransferConfig::default());
        assert_eq!(out.records.len(), 1);
        assert!((out.records[0].jaccard - 0.8).abs() < 1e-15);
        assert_eq!(out.store.get("q", "APW19990512.0001#3"), Judgment::Relevant);
    }
}

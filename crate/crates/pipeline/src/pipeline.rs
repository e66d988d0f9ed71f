//! Per-question orchestration and batch runs.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use qa_cnn::rerank::CnnScorer;
use qa_core::data_io::{RunEntry, RunFile};
use qa_core::index::{InvertedIndex, ScoredDocument};
use qa_core::judgments::RetrievedSentence;
use qa_core::overlap::{rerank_overlap, OverlapMode};
use qa_core::ranking::{Candidate, ScoredCandidate};
use qa_core::text::{remove_stopwords, segment_sentences, StopwordList, TokenizedSentence};

use crate::error::{Error, Result};

pub const DEFAULT_HITS: usize = 200;
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Condition {
    #[default]
    Idf,
    IdfCnn,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Idf => "idf",
            Condition::IdfCnn => "idf+cnn",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idf" => Ok(Condition::Idf),
            "idf+cnn" => Ok(Condition::IdfCnn),
            other => Err(Error::Config(format!("unknown condition {other:?} (expected idf or idf+cnn)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Documents retrieved per question.
    pub h: usize,
    /// Sentences kept after the idf rerank.
    pub k: usize,
    pub condition: Condition,
    pub model_path: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    /// Recorded for provenance; no pipeline stage draws random numbers.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            h: DEFAULT_HITS,
            k: DEFAULT_K,
            condition: Condition::Idf,
            model_path: None,
            index_path: None,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    /// Depth checks only; see [`PipelineConfig::validate`] for path checks.
    pub fn validate_depths(&self) -> Result<()> {
        if self.h == 0 || self.k == 0 {
            return Err(Error::Config(format!("h and k must be at least 1 (h={}, k={})", self.h, self.k)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_depths()?;
        if self.condition == Condition::IdfCnn && self.model_path.is_none() {
            return Err(Error::Config("condition idf+cnn requires a model path".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub text: String,
}

/// One returned sentence with its rank at every stage it passed through.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerEntry {
    pub candidate: ScoredCandidate,
    pub doc_id: String,
    pub position: usize,
    pub bm25_rank: usize,
    pub idf_rank: usize,
    pub cnn_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnswerList {
    pub question_id: String,
    pub entries: Vec<AnswerEntry>,
    pub retrieved_documents: usize,
    pub pooled_sentences: usize,
}

impl AnswerList {
    pub fn keys(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.candidate.key.as_str()).collect()
    }

    pub fn to_run(&self, tag: &str) -> RunFile {
        RunFile {
            entries: self
                .entries
                .iter()
                .map(|e| RunEntry {
                    qid: self.question_id.clone(),
                    key: e.candidate.key.clone(),
                    rank: e.candidate.rank,
                    score: e.candidate.score,
                    tag: tag.to_string(),
                })
                .collect(),
        }
    }
}

pub fn sentence_key(doc_id: &str, position: usize) -> String {
    format!("{doc_id}#{position}")
}

/// Sentences of the retrieved documents, in retrieval order.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub documents: Vec<ScoredDocument>,
    pub candidates: Vec<Candidate>,
    /// BM25 rank of each candidate's source document, parallel to `candidates`.
    pub bm25_ranks: Vec<usize>,
}

pub struct Pipeline<'a> {
    pub index: &'a InvertedIndex,
    pub stopwords: &'a StopwordList,
    pub config: PipelineConfig,
    pub cnn: Option<CnnScorer<'a, &'a InvertedIndex>>,
}

/// Everything a batch produced.
#[derive(Debug, Default)]
pub struct BatchOutput {
    pub run: RunFile,
    pub answers: Vec<AnswerList>,
    /// Sentence key to raw text for every returned sentence.
    pub sidecar: BTreeMap<String, String>,
    /// Questions that retrieved no documents.
    pub empty: Vec<String>,
    /// (question id, error message) for questions that failed.
    pub failures: Vec<(String, String)>,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        index: &'a InvertedIndex,
        stopwords: &'a StopwordList,
        config: PipelineConfig,
        cnn: Option<CnnScorer<'a, &'a InvertedIndex>>,
    ) -> Result<Self> {
        config.validate_depths()?;
        match (config.condition, cnn.is_some()) {
            (Condition::IdfCnn, false) => {
                return Err(Error::Config("condition idf+cnn requires a model".into()));
            }
            (Condition::Idf, true) => {
                return Err(Error::Config("condition idf takes no model".into()));
            }
            _ => {}
        }
        Ok(Self { index, stopwords, config, cnn })
    }

    /// The stopword-filtered bag-of-words query for a question.
    pub fn query<'q>(&self, question: &'q TokenizedSentence) -> Vec<&'q str> {
        remove_stopwords(question, self.stopwords)
    }

    /// Retrieve the top `h` documents and segment them into keyed sentences.
    pub fn candidate_pool(&self, question: &TokenizedSentence, h: usize) -> Result<CandidatePool> {
        let documents = self.index.retrieve_bm25(&self.query(question), h);
        let mut candidates = Vec::new();
        let mut bm25_ranks = Vec::new();
        for d in &documents {
            let text = self.index.document_text(&d.doc_id)?;
            for s in segment_sentences(&text) {
                let pos = s.position;
                candidates.push(Candidate::new(sentence_key(&d.doc_id, pos), s.with_source(d.doc_id.clone(), pos)));
                bm25_ranks.push(d.rank);
            }
        }
        Ok(CandidatePool { documents, candidates, bm25_ranks })
    }

    /// Pooled sentences at depth `h` in the form judgment transfer consumes.
    pub fn pooled_sentences(&self, question: &Question, h: usize) -> Result<Vec<RetrievedSentence>> {
        let q = TokenizedSentence::new(question.text.as_str());
        Ok(self
            .candidate_pool(&q, h)?
            .candidates
            .into_iter()
            .map(|c| RetrievedSentence { question_id: question.id.clone(), key: c.key, sentence: c.sentence })
            .collect())
    }

    pub fn run_question(&self, question: &Question) -> Result<AnswerList> {
        let q = TokenizedSentence::new(question.text.as_str());
        let pool = self.candidate_pool(&q, self.config.h)?;
        let bm25_of: BTreeMap<String, usize> =
            pool.candidates.iter().zip(&pool.bm25_ranks).map(|(c, r)| (c.key.clone(), *r)).collect();
        let pooled_sentences = pool.candidates.len();

        let idf_top = rerank_overlap(
            &question.id,
            &q,
            pool.candidates,
            OverlapMode::Idf,
            self.config.k,
            self.stopwords,
            self.index,
        );
        let idf_rank: BTreeMap<String, usize> = idf_top.iter().map(|c| (c.key.clone(), c.rank)).collect();

        let final_list = match (&self.cnn, self.config.condition) {
            (Some(cnn), Condition::IdfCnn) => {
                let cands = idf_top.into_iter().map(|c| Candidate::new(c.key, c.sentence)).collect();
                cnn.rerank(&question.id, &q, cands, self.config.k)
            }
            _ => idf_top,
        };

        let with_cnn = self.config.condition == Condition::IdfCnn;
        let entries = final_list
            .into_iter()
            .map(|c| AnswerEntry {
                doc_id: c.sentence.doc_id.clone().unwrap_or_default(),
                position: c.sentence.position,
                bm25_rank: bm25_of[&c.key],
                idf_rank: idf_rank[&c.key],
                cnn_rank: with_cnn.then_some(c.rank),
                candidate: c,
            })
            .collect();
        Ok(AnswerList {
            question_id: question.id.clone(),
            entries,
            retrieved_documents: pool.documents.len(),
            pooled_sentences,
        })
    }

    /// Run every question, fanning out across threads. Output order follows
    /// input order; failures are collected rather than aborting the batch.
    pub fn run_batch(&self, questions: &[Question]) -> BatchOutput {
        let results: Vec<Result<AnswerList>> = questions.par_iter().map(|q| self.run_question(q)).collect();
        let tag = self.config.condition.as_str();
        let mut out = BatchOutput::default();
        for (q, r) in questions.iter().zip(results) {
            match r {
                Ok(list) => {
                    if list.retrieved_documents == 0 {
                        out.empty.push(q.id.clone());
                    }
                    out.run.extend(list.to_run(tag));
                    for e in &list.entries {
                        out.sidecar.insert(e.candidate.key.clone(), e.candidate.sentence.raw.clone());
                    }
                    out.answers.push(list);
                }
                Err(e) => out.failures.push((q.id.clone(), e.to_string())),
            }
        }
        out
    }
}

/// Parse a `<qid>\t<question text>` file. Blank lines are skipped.
pub fn parse_questions(content: &str, path: &Path) -> Result<Vec<Question>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected <qid>\\t<question>"))?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::parse(path, i + 1, "empty question id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(path, i + 1, format!("duplicate question id {id:?}")));
        }
        out.push(Question { id: id.to_string(), text: text.trim().to_string() });
    }
    Ok(out)
}

pub fn read_questions(path: &Path) -> Result<Vec<Question>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_questions(&content, path)
}

pub fn format_questions(questions: &[Question]) -> String {
    questions.iter().map(|q| format!("{}\t{}\n", q.id, q.text)).collect()
}

fn one_line(s: &str) -> String {
    s.chars().map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c }).collect()
}

/// Sidecar lines: `<sentence key>\t<sentence text>`, sorted by key.
pub fn format_sidecar(sidecar: &BTreeMap<String, String>) -> String {
    sidecar.iter().map(|(k, v)| format!("{k}\t{}\n", one_line(v))).collect()
}

pub fn write_sidecar(sidecar: &BTreeMap<String, String>, path: &Path) -> Result<()> {
    std::fs::write(path, format_sidecar(sidecar)).map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<BTreeMap<String, String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('\t').ok_or_else(|| Error::parse(path, i + 1, "expected <key>\\t<text>"))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_round_trip() {
        for c in [Condition::Idf, Condition::IdfCnn] {
            assert_eq!(c.as_str().parse::<Condition>().unwrap(), c);
        }
        assert!("cnn".parse::<Condition>().is_err());
    }

    #[test]
    fn config_checks() {
        assert!(PipelineConfig::default().validate().is_ok());
        assert!(PipelineConfig { k: 0, ..Default::default() }.validate().is_err());
        assert!(PipelineConfig { condition: Condition::IdfCnn, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn question_file_parsing() {
        let p = Path::new("q.tsv");
        let qs = parse_questions("1\tWho is it?\n\n2\tWhere?\n", p).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1], Question { id: "2".into(), text: "Where?".into() });
        assert!(parse_questions("1 no tab\n", p).is_err());
        assert!(parse_questions("1\ta\n1\tb\n", p).is_err());
        assert!(parse_questions("", p).unwrap().is_empty());
    }
}

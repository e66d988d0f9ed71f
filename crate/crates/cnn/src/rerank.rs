use rayon::prelude::*;

use qa_core::data_io::EmbeddingTable;
use qa_core::index::IdfSource;
use qa_core::overlap::extract_features;
use qa_core::ranking::{rank_and_truncate, Candidate, ScoredCandidate, Stage};
use qa_core::text::{StopwordList, TokenizedSentence};

use crate::error::{Error, Result};
use crate::kernel::Real;
use crate::model::{Embeddings, Model, PairInput};

/// Encode a (question, candidate) pair against `vocab`, adding missing tokens
/// with the model's embedding for them.
#[allow(clippy::too_many_arguments)]
pub fn encode_pair<F: Real>(
    model: &Model<F>,
    table: &EmbeddingTable,
    vocab: &mut Embeddings<F>,
    question: &TokenizedSentence,
    candidate: &TokenizedSentence,
    label: u8,
    stopwords: &StopwordList,
    idf: &impl IdfSource,
) -> PairInput {
    let mut ids = |s: &TokenizedSentence| -> Vec<u32> {
        s.tokens.iter().map(|t| vocab.insert_with(t, || model.token_vector(table, t))).collect()
    };
    let q = ids(question);
    let a = ids(candidate);
    PairInput {
        question: q,
        answer: a,
        features: extract_features(question, candidate, stopwords, idf).to_array(),
        label,
    }
}

/// Scores candidates with a trained model.
pub struct CnnScorer<'a, I> {
    pub model: &'a Model<f32>,
    pub table: &'a EmbeddingTable,
    pub stopwords: &'a StopwordList,
    pub idf: I,
}

impl<'a, I: IdfSource + Sync> CnnScorer<'a, I> {
    pub fn new(model: &'a Model<f32>, table: &'a EmbeddingTable, stopwords: &'a StopwordList, idf: I) -> Self {
        Self { model, table, stopwords, idf }
    }

    /// P(relevant) for one pair.
    pub fn score(&self, question: &TokenizedSentence, candidate: &TokenizedSentence) -> Result<f64> {
        if question.is_empty() {
            return Err(Error::InvalidArgument("empty question".into()));
        }
        if candidate.is_empty() {
            return Err(Error::InvalidArgument("empty candidate".into()));
        }
        let mut vocab = Embeddings::new(self.model.config.dim);
        let input = encode_pair(self.model, self.table, &mut vocab, question, candidate, 0, self.stopwords, &self.idf);
        Ok(self.model.forward(&vocab, &input).probs[1])
    }

    /// Rescore `candidates` and keep the top `k`. Empty candidates score 0.
    pub fn rerank(
        &self,
        question_id: &str,
        question: &TokenizedSentence,
        candidates: Vec<Candidate>,
        k: usize,
    ) -> Vec<ScoredCandidate> {
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|c| self.score(question, &c.sentence).unwrap_or(0.0))
            .collect();
        rank_and_truncate(question_id, candidates.into_iter().zip(scores).collect(), k, Stage::Cnn)
    }
}

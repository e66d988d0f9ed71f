//! Question answering over a document collection: BM25 retrieval of the top
//! `h` documents, sentence segmentation, idf-weighted overlap reranking to the
//! top `k`, and an optional CNN rerank of those `k` sentences.

pub mod documents;
pub mod error;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
pub use pipeline::{AnswerEntry, AnswerList, BatchOutput, Condition, Pipeline, PipelineConfig, Question};

//! Core building blocks for an end-to-end factoid question answering system:
//! tokenization, dataset and TREC-format IO, a BM25 inverted index, word
//! overlap scoring, judgment transfer, and evaluation under sparse judgments.

pub mod data_io;
pub mod error;
pub mod index;
pub mod judgments;
pub mod metrics;
pub mod overlap;
pub mod ranking;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
pub use text::{StopwordList, TokenizedSentence};

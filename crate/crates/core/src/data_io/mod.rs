//! Readers and writers for the on-disk formats: the TrecQA dataset (JSONL and
//! the four-parallel-file layout), TREC run and qrels files, and text word
//! embeddings.

mod dataset;
mod embeddings;
mod qrels;
mod run;

pub use dataset::{
    convert_parallel_files, load_parallel_split, load_trecqa, parse_trecqa, write_trecqa,
    DatasetSplit, LabeledCandidate, QAPair, QuestionGroup, SplitName, SplitStats,
};
pub use embeddings::{load_embeddings, EmbeddingTable, OOV_RANGE};
pub use qrels::{format_qrels, parse_qrels, read_qrels, write_qrels};
pub use run::{read_run, write_run, RunEntry, RunFile};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(content).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

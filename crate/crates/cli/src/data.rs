//! File helpers shared by the subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;

use qa_core::data_io::{load_embeddings, load_parallel_split, load_trecqa, DatasetSplit, EmbeddingTable, SplitName};
use qa_core::index::{parse_manifest, CorpusIdf};
use qa_core::judgments::{JudgmentStore, Relevance};
use qa_pipeline::pipeline::{read_sidecar, Question};

/// A JSONL split file or a directory in the parallel-file layout.
pub fn load_split(path: &Path, name: SplitName) -> anyhow::Result<DatasetSplit> {
    let split = if path.is_dir() { load_parallel_split(path, name)? } else { load_trecqa(path, name)? };
    Ok(split)
}

/// Dataset keys are `qid/index`, the index counting candidates within the
/// question in file order.
pub fn dataset_key(qid: &str, index: usize) -> String {
    format!("{qid}/{index}")
}

/// Judgments taken straight from dataset labels.
pub fn dataset_qrels(split: &DatasetSplit) -> JudgmentStore {
    let mut store = JudgmentStore::new();
    for g in &split.groups {
        for (i, c) in g.candidates.iter().enumerate() {
            let rel = if c.is_relevant() { Relevance::Relevant } else { Relevance::Nonrelevant };
            store.insert(&g.question_id, &dataset_key(&g.question_id, i), rel);
        }
    }
    store
}

/// idf over candidate sentences, each counted as one document.
pub fn candidate_idf<'a>(splits: impl IntoIterator<Item = &'a DatasetSplit>) -> CorpusIdf {
    CorpusIdf::from_documents(
        splits
            .into_iter()
            .flat_map(|s| s.groups.iter().flat_map(|g| g.candidates.iter().map(|c| c.sentence.tokens.as_slice()))),
    )
}

pub fn load_extra_splits(paths: &[PathBuf]) -> anyhow::Result<Vec<DatasetSplit>> {
    paths.iter().map(|p| load_split(p, SplitName::Train)).collect()
}

/// The embedding table a model was saved with: its word vectors, if any,
/// plus out-of-vocabulary vectors seeded by the model's training seed.
pub fn model_table(model_dir: &Path, embeddings: Option<&Path>) -> anyhow::Result<EmbeddingTable> {
    let mpath = model_dir.join("manifest.txt");
    let manifest = parse_manifest(
        &std::fs::read_to_string(&mpath).with_context(|| format!("reading {}", mpath.display()))?,
    );
    let field = |k: &str| -> anyhow::Result<u64> {
        manifest
            .get(k)
            .and_then(|v| v.parse().ok())
            .with_context(|| format!("{}: missing or bad {k}", mpath.display()))
    };
    let seed = field("seed")?;
    Ok(match embeddings {
        Some(p) => load_embeddings(p, seed)?,
        None => EmbeddingTable::new(field("dim")? as usize, seed)?,
    })
}

pub fn read_questions(path: &Path) -> anyhow::Result<Vec<Question>> {
    Ok(qa_pipeline::pipeline::read_questions(path)?)
}

pub fn read_sidecars(paths: &[PathBuf]) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for p in paths {
        out.extend(read_sidecar(p)?);
    }
    Ok(out)
}

pub fn write(path: &Path, content: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// One JSON summary object per command on stdout.
pub fn report(value: serde_json::Value) {
    println!("{value}");
}

//! `index`, `retrieve`, `rerank` and `recall-curve`.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use clap::ValueEnum;
use rayon::prelude::*;
use serde_json::json;

use qa_cnn::persist::load_model;
use qa_cnn::rerank::CnnScorer;
use qa_core::data_io::{write_run, RunEntry, RunFile, SplitName};
use qa_core::index::{Bm25Params, CorpusIdf, IdfSource, IndexBuilder, InvertedIndex};
use qa_core::metrics::recall_curve as curve;
use qa_core::overlap::{rerank_overlap, OverlapMode};
use qa_core::ranking::{Candidate, ScoredCandidate};
use qa_core::text::TokenizedSentence;
use qa_core::StopwordList;
use qa_pipeline::documents::DocumentStream;
use qa_pipeline::pipeline::{format_sidecar, Pipeline, PipelineConfig, DEFAULT_K};

use crate::args::{IndexArgs, RecallArgs, RerankArgs, RerankMode, RetrieveArgs};
use crate::data::{self, candidate_idf, dataset_key, load_extra_splits, load_split, model_table, report};

pub fn index(a: IndexArgs) -> anyhow::Result<()> {
    let mut builder = IndexBuilder::new();
    for doc in DocumentStream::open(&a.docs)? {
        let doc = doc?;
        builder.add(&doc.id, &doc.text)?;
    }
    let index = builder.finish(Bm25Params { k1: a.k1, b: a.b })?;
    index.save(&a.out)?;
    report(json!({ "documents": index.num_docs(), "terms": index.num_terms(), "out": a.out }));
    Ok(())
}

fn depth_pipeline<'a>(index: &'a InvertedIndex, sw: &'a StopwordList, h: usize) -> anyhow::Result<Pipeline<'a>> {
    let config = PipelineConfig { h, ..Default::default() };
    Ok(Pipeline::new(index, sw, config, None)?)
}

pub fn retrieve(a: RetrieveArgs) -> anyhow::Result<()> {
    let index = InvertedIndex::load(&a.index)?;
    let sw = StopwordList::bundled();
    let pipeline = depth_pipeline(&index, &sw, a.hits)?;
    let questions = data::read_questions(&a.questions)?;
    let pools = questions
        .par_iter()
        .map(|q| pipeline.candidate_pool(&TokenizedSentence::new(q.text.as_str()), a.hits))
        .collect::<Result<Vec<_>, _>>()?;

    let mut run = RunFile::default();
    let mut sidecar = BTreeMap::new();
    for (q, pool) in questions.iter().zip(pools) {
        let entry = |key: &str, rank: usize, score: f64| RunEntry {
            qid: q.id.clone(),
            key: key.to_string(),
            rank,
            score,
            tag: "bm25".into(),
        };
        if a.segment {
            for (i, (c, doc_rank)) in pool.candidates.iter().zip(&pool.bm25_ranks).enumerate() {
                run.entries.push(entry(&c.key, i + 1, pool.documents[doc_rank - 1].score));
                sidecar.insert(c.key.clone(), c.sentence.raw.clone());
            }
        } else {
            for d in &pool.documents {
                run.entries.push(entry(&d.doc_id, d.rank, d.score));
            }
        }
    }
    write_run(&run, &a.out)?;
    if let Some(path) = &a.sidecar {
        data::write(path, &format_sidecar(&sidecar))?;
    }
    report(json!({ "questions": questions.len(), "entries": run.entries.len(), "out": a.out }));
    Ok(())
}

/// One question's candidates awaiting a rerank.
struct Work {
    qid: String,
    question: TokenizedSentence,
    candidates: Vec<Candidate>,
}

fn rerank_all(
    work: Vec<Work>,
    mode: RerankMode,
    k: usize,
    sw: &StopwordList,
    idf: &(dyn IdfSource + Sync),
    cnn: Option<&CnnScorer<'_, &(dyn IdfSource + Sync)>>,
) -> Vec<Vec<ScoredCandidate>> {
    work.into_par_iter()
        .map(|w| match (mode, cnn) {
            (RerankMode::Cnn, Some(s)) => s.rerank(&w.qid, &w.question, w.candidates, k),
            (RerankMode::Overlap, _) => rerank_overlap(&w.qid, &w.question, w.candidates, OverlapMode::Count, k, sw, &idf),
            _ => rerank_overlap(&w.qid, &w.question, w.candidates, OverlapMode::Idf, k, sw, &idf),
        })
        .collect()
}

pub fn rerank(a: RerankArgs) -> anyhow::Result<()> {
    let sw = StopwordList::bundled();
    let extras = load_extra_splits(&a.idf_dataset)?;
    let (work, corpus_idf, k) = if let Some(path) = &a.dataset {
        let split = load_split(path, SplitName::Test)?;
        let idf = candidate_idf(std::iter::once(&split).chain(&extras));
        let work = split
            .groups
            .iter()
            .map(|g| Work {
                qid: g.question_id.clone(),
                question: g.question.clone(),
                candidates: g
                    .candidates
                    .iter()
                    .enumerate()
                    .map(|(i, c)| Candidate::new(dataset_key(&g.question_id, i), c.sentence.clone()))
                    .collect(),
            })
            .collect();
        (work, idf, a.k.unwrap_or(usize::MAX))
    } else {
        let (Some(run), Some(sidecar), Some(qpath)) = (&a.run, &a.sidecar, &a.questions) else {
            bail!("--run needs --sidecar and --questions");
        };
        let run = qa_core::data_io::read_run(run)?;
        let texts = data::read_sidecars(std::slice::from_ref(sidecar))?;
        let by_q: BTreeMap<&str, Vec<&RunEntry>> = run.by_question().into_iter().collect();
        let mut work = Vec::new();
        for q in data::read_questions(qpath)? {
            let candidates = by_q
                .get(q.id.as_str())
                .map(|es| {
                    es.iter()
                        .map(|e| {
                            let text = texts.get(&e.key).with_context(|| format!("no sentence text for key {}", e.key))?;
                            Ok(Candidate::new(e.key.clone(), TokenizedSentence::new(text.as_str())))
                        })
                        .collect::<anyhow::Result<Vec<_>>>()
                })
                .transpose()?
                .unwrap_or_default();
            work.push(Work { qid: q.id.clone(), question: TokenizedSentence::new(q.text.as_str()), candidates });
        }
        let sentences: Vec<TokenizedSentence> = texts.values().map(|t| TokenizedSentence::new(t.as_str())).collect();
        let mut idf_docs: Vec<&[String]> = sentences.iter().map(|s| s.tokens.as_slice()).collect();
        for s in &extras {
            idf_docs.extend(s.groups.iter().flat_map(|g| g.candidates.iter().map(|c| c.sentence.tokens.as_slice())));
        }
        (work, CorpusIdf::from_documents(idf_docs), a.k.unwrap_or(DEFAULT_K))
    };
    if k == 0 {
        bail!("--k must be at least 1");
    }

    let index = a.index.as_deref().map(InvertedIndex::load).transpose()?;
    let idf: &(dyn IdfSource + Sync) = match &index {
        Some(i) => i,
        None => &corpus_idf,
    };
    let loaded = match (&a.mode, &a.model) {
        (RerankMode::Cnn, Some(dir)) => {
            let table = model_table(dir, a.embeddings.as_deref())?;
            let model = load_model(dir, &table)?;
            Some((model, table))
        }
        (RerankMode::Cnn, None) => bail!("--mode cnn needs --model"),
        _ => None,
    };
    let scorer = loaded.as_ref().map(|(m, t)| CnnScorer::new(m, t, &sw, idf));
    let questions = work.len();
    let mut run = RunFile::default();
    let tag = a.mode.to_possible_value().expect("value enum").get_name().to_string();
    for list in rerank_all(work, a.mode, k, &sw, idf, scorer.as_ref()) {
        run.extend(RunFile::from_ranked(&list, &tag));
    }
    write_run(&run, &a.out)?;
    report(json!({ "questions": questions, "entries": run.entries.len(), "mode": tag, "out": a.out }));
    Ok(())
}

pub fn recall_curve(a: RecallArgs) -> anyhow::Result<()> {
    let index = InvertedIndex::load(&a.index)?;
    let sw = StopwordList::bundled();
    let questions = data::read_questions(&a.questions)?;
    let dataset = load_split(&a.dataset, SplitName::Test)?;
    let mut pools = Vec::new();
    for &h in &a.hits {
        let pipeline = depth_pipeline(&index, &sw, h)?;
        let pooled = questions
            .par_iter()
            .map(|q| pipeline.pooled_sentences(q, h))
            .collect::<Result<Vec<_>, _>>()?;
        pools.push((h, pooled.into_iter().flatten().collect()));
    }
    let mut out = String::from("hits\trecalled\ttotal_relevant\trecall\n");
    for p in curve(&pools, &dataset, a.threshold) {
        out.push_str(&format!("{}\t{}\t{}\t{:.4}\n", p.hits, p.recalled, p.total_relevant, p.recall));
    }
    print!("{out}");
    Ok(())
}

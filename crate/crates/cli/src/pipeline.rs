//! `pipeline run` and `pipeline synthetic`.

use std::path::PathBuf;

use anyhow::bail;
use serde_json::json;

use qa_cnn::persist::load_model;
use qa_cnn::rerank::CnnScorer;
use qa_core::data_io::write_run;
use qa_core::index::InvertedIndex;
use qa_core::StopwordList;
use qa_pipeline::pipeline::{format_sidecar, Condition, Pipeline, PipelineConfig};
use qa_pipeline::synthetic::{generate, SyntheticConfig};

use crate::args::{Global, PipelineCommand, PipelineRunArgs, SyntheticArgs};
use crate::data::{self, model_table, report};

pub fn run(cmd: PipelineCommand, g: &Global) -> anyhow::Result<()> {
    match cmd {
        PipelineCommand::Run(a) => run_questions(a, g),
        PipelineCommand::Synthetic(a) => synthetic(a, g),
    }
}

fn sidecar_path(a: &PipelineRunArgs) -> PathBuf {
    a.sidecar.clone().unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".sentences.tsv");
        s.into()
    })
}

fn run_questions(a: PipelineRunArgs, g: &Global) -> anyhow::Result<()> {
    let condition: Condition = a.condition.parse()?;
    let config = PipelineConfig {
        h: a.h,
        k: a.k,
        condition,
        model_path: a.model.clone(),
        index_path: Some(a.index.clone()),
        seed: g.seed,
    };
    config.validate()?;
    if condition == Condition::Idf && a.model.is_some() {
        bail!("--model is only used with --condition idf+cnn");
    }
    let index = InvertedIndex::load(&a.index)?;
    let sw = StopwordList::bundled();
    let loaded = match &a.model {
        Some(dir) => {
            let table = model_table(dir, a.embeddings.as_deref())?;
            let model = load_model(dir, &table)?;
            Some((model, table))
        }
        None => None,
    };
    let scorer = loaded.as_ref().map(|(m, t)| CnnScorer::new(m, t, &sw, &index));
    let pipeline = Pipeline::new(&index, &sw, config, scorer)?;
    let questions = data::read_questions(&a.questions)?;
    let out = pipeline.run_batch(&questions);
    write_run(&out.run, &a.out)?;
    let sidecar = sidecar_path(&a);
    data::write(&sidecar, &format_sidecar(&out.sidecar))?;
    report(json!({
        "questions": questions.len(),
        "entries": out.run.entries.len(),
        "empty": out.empty,
        "failures": out.failures.len(),
        "out": a.out,
        "sidecar": sidecar,
    }));
    if !out.failures.is_empty() {
        let list: Vec<String> = out.failures.iter().map(|(q, m)| format!("{q}: {m}")).collect();
        bail!("{} question(s) failed: {}", list.len(), list.join("; "));
    }
    Ok(())
}

fn synthetic(a: SyntheticArgs, g: &Global) -> anyhow::Result<()> {
    let config = SyntheticConfig {
        documents: a.documents,
        test_questions: a.test_questions,
        train_questions: a.train_questions,
        dev_questions: a.dev_questions,
        seed: g.seed,
    };
    let corpus = generate(&config);
    corpus.write(&a.out)?;
    report(json!({
        "out": a.out,
        "documents": corpus.documents.len(),
        "questions": corpus.questions.len(),
    }));
    Ok(())
}

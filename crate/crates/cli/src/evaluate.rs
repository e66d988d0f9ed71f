//! `transfer-judgments`, `eval` and `stats`.

use anyhow::{bail, Context};
use serde_json::json;

use qa_assess::results::{judge_result_sided, Counts};
use qa_assess::AssessService;
use qa_core::data_io::{read_qrels, read_run, write_qrels, SplitName};
use qa_core::judgments::{transfer as transfer_labels, RetrievedSentence, TiePreference, TransferConfig};
use qa_core::metrics::{evaluate, MetricSelection};
use qa_core::stats::Sidedness;
use qa_core::text::TokenizedSentence;

use crate::args::{EvalArgs, Sided, StatsArgs, TiePrefer, TransferArgs};
use crate::data::{self, dataset_qrels, load_split, report};

pub fn transfer(a: TransferArgs) -> anyhow::Result<()> {
    let run = read_run(&a.run)?;
    let texts = data::read_sidecars(std::slice::from_ref(&a.sidecar))?;
    let dataset = load_split(&a.dataset, SplitName::Test)?;
    let retrieved = run
        .entries
        .iter()
        .map(|e| {
            let text = texts.get(&e.key).with_context(|| format!("no sentence text for key {}", e.key))?;
            Ok(RetrievedSentence {
                question_id: e.qid.clone(),
                key: e.key.clone(),
                sentence: TokenizedSentence::new(text.as_str()),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let config = TransferConfig {
        threshold: a.threshold,
        tie_preference: match a.tie_prefer {
            TiePrefer::Relevant => TiePreference::Relevant,
            TiePrefer::Nonrelevant => TiePreference::Nonrelevant,
        },
    };
    let out = transfer_labels(&retrieved, &dataset, config);
    write_qrels(&out.store, &a.out)?;
    if let Some(path) = &a.audit {
        data::write(path, &out.audit_jsonl())?;
    }
    let relevant = out.store.iter().filter(|(_, _, r)| *r == qa_core::judgments::Relevance::Relevant).count();
    report(json!({
        "sentences": retrieved.len(),
        "judged": out.store.len(),
        "relevant": relevant,
        "out": a.out,
    }));
    Ok(())
}

pub fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let run = read_run(&a.run)?;
    let store = match (&a.qrels, &a.dataset) {
        (Some(q), _) => read_qrels(q)?,
        (None, Some(d)) => dataset_qrels(&load_split(d, SplitName::Test)?),
        (None, None) => bail!("eval needs --qrels or --dataset"),
    };
    let mut sel: MetricSelection = a.metrics.parse()?;
    sel.rbp_depth = a.rbp_depth;
    let tsv = evaluate(&run, &store, &sel)?.to_tsv(a.per_query);
    match &a.out {
        Some(p) => data::write(p, &tsv)?,
        None => print!("{tsv}"),
    }
    Ok(())
}

fn sidedness(s: Sided) -> Sidedness {
    match s {
        Sided::TwoSided => Sidedness::TwoSided,
        Sided::Greater => Sidedness::Greater,
        Sided::Less => Sidedness::Less,
    }
}

/// `[judge=]A,B,BOTH,NEITHER`.
pub fn parse_counts(s: &str, default_label: &str) -> anyhow::Result<(String, Counts)> {
    let (label, nums) = s.split_once('=').map_or((default_label, s), |(l, n)| (l.trim(), n));
    let n: Vec<u64> = nums
        .split(',')
        .map(|x| x.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad counts {s:?}"))?;
    let [prefer_a, prefer_b, both, neither] = n[..] else {
        bail!("counts {s:?} must be four numbers: A,B,BOTH,NEITHER");
    };
    Ok((label.to_string(), Counts { prefer_a, prefer_b, both, neither }))
}

pub fn stats(a: StatsArgs) -> anyhow::Result<()> {
    let sided = sidedness(a.sided);
    let (judges, agreement) = match (&a.journal, &a.session) {
        (Some(journal), Some(session)) => {
            let report = AssessService::open(journal)?.results(session)?;
            let judges = report.judges.iter().map(|j| judge_result_sided(&j.judge_id, j.counts, sided)).collect();
            (judges, serde_json::to_value(&report.agreement)?)
        }
        _ => {
            let judges = a
                .counts
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let (label, counts) = parse_counts(c, &format!("judge{}", i + 1))?;
                    Ok(judge_result_sided(&label, counts, sided))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            (judges, json!([]))
        }
    };
    println!("{}", serde_json::to_string_pretty(&json!({ "sided": sided, "judges": judges, "agreement": agreement }))?);
    Ok(())
}

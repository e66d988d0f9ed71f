//! `assess serve`, `assess create` and `assess results`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::Context;
use serde_json::json;

use qa_assess::{AssessService, NewSession};
use qa_core::data_io::read_run;

use crate::args::{AssessCommand, CreateArgs, Global, ResultsArgs, ServeArgs};
use crate::data::{self, report};

pub fn run(cmd: AssessCommand, g: &Global) -> anyhow::Result<()> {
    match cmd {
        AssessCommand::Serve(a) => serve(a),
        AssessCommand::Create(a) => create(a, g),
        AssessCommand::Results(a) => results(a),
    }
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("bad --host/--port")?;
    let service = Arc::new(AssessService::open(&a.journal)?);
    eprintln!("{}", json!({ "listening": addr.to_string(), "journal": a.journal }));
    tokio::runtime::Runtime::new()?.block_on(qa_assess::http::serve(addr, service))?;
    Ok(())
}

fn create(a: CreateArgs, g: &Global) -> anyhow::Result<()> {
    let service = AssessService::open(&a.journal)?;
    let questions: BTreeMap<String, String> =
        data::read_questions(&a.questions)?.into_iter().map(|q| (q.id, q.text)).collect();
    let session = service.create_session(NewSession {
        run_a: read_run(&a.run_a)?,
        run_b: read_run(&a.run_b)?,
        sentences: data::read_sidecars(&a.sidecar)?,
        questions,
        k: a.k,
        seed: g.seed,
        shuffle: !a.no_shuffle,
    })?;
    report(json!({ "session_id": session.id, "questions": session.questions.len() }));
    Ok(())
}

fn results(a: ResultsArgs) -> anyhow::Result<()> {
    let report = AssessService::open(&a.journal)?.results(&a.session)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

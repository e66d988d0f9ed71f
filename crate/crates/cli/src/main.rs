//! `qa`: retrieval, reranking, training, evaluation and assessment.
//!
//! Exit codes: 0 success, 1 runtime failure (a JSON `{"error": ..}` object
//! on stderr), 2 usage error.

mod args;
mod assess;
mod config;
mod data;
mod evaluate;
mod model;
mod pipeline;
mod retrieval;

use std::process::ExitCode;

use clap::FromArgMatches;

use args::{Cli, Command};

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Index(a) => retrieval::index(a),
        Command::Retrieve(a) => retrieval::retrieve(a),
        Command::Rerank(a) => retrieval::rerank(a),
        Command::RecallCurve(a) => retrieval::recall_curve(a),
        Command::Train(a) => model::train(a, g),
        Command::GradCheck(a) => model::grad_check(a, g),
        Command::Pipeline(a) => pipeline::run(a, g),
        Command::TransferJudgments(a) => evaluate::transfer(a),
        Command::Eval(a) => evaluate::eval(a),
        Command::Stats(a) => evaluate::stats(a),
        Command::Assess(a) => assess::run(a, g),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::apply(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            return ExitCode::from(2);
        }
    };
    let matches = match args::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from the same definition");
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::from(1)
        }
    }
}

#![allow(dead_code)]

use std::collections::BTreeMap;

use qa_assess::types::{Outcome, Side, Verdict};
use qa_assess::NewSession;
use qa_core::data_io::{RunEntry, RunFile};

pub const TAG_A: &str = "idf";
pub const TAG_B: &str = "idf+cnn";

fn run(n: usize, per: usize, tag: &str, offset: usize) -> RunFile {
    let mut entries = Vec::new();
    for q in 0..n {
        for r in 0..per {
            entries.push(RunEntry {
                qid: format!("q{q:03}"),
                key: format!("doc{}#{}", q, (r + offset) % (per + 2)),
                rank: r + 1,
                score: (per - r) as f64,
                tag: tag.to_string(),
            });
        }
    }
    RunFile::new(entries).unwrap()
}

/// Two runs over `n` questions whose top lists overlap partially.
pub fn new_session(n: usize, seed: u64, shuffle: bool) -> NewSession {
    let per = 6;
    let run_a = run(n, per, TAG_A, 0);
    let run_b = run(n, per, TAG_B, 1);
    let mut sentences = BTreeMap::new();
    for e in run_a.entries.iter().chain(&run_b.entries) {
        sentences.insert(e.key.clone(), format!("Sentence {} of the collection.", e.key.replace('#', " number ")));
    }
    let questions = (0..n).map(|q| (format!("q{q:03}"), format!("What is fact {q}?"))).collect();
    NewSession { run_a, run_b, sentences, questions, k: 5, seed, shuffle }
}

/// The verdict a judge must give for `want` when condition A sits on `side`.
pub fn verdict_for(want: Outcome, side: Side) -> Verdict {
    match (want, side) {
        (Outcome::PreferA, Side::ALeft) | (Outcome::PreferB, Side::ARight) => Verdict::Left,
        (Outcome::PreferA, Side::ARight) | (Outcome::PreferB, Side::ALeft) => Verdict::Right,
        (Outcome::Both, _) => Verdict::Both,
        (Outcome::Neither, _) => Verdict::Neither,
    }
}

/// `a` prefer-A, `b` prefer-B, `both`, `neither` outcomes in that order.
pub fn pattern(a: usize, b: usize, both: usize, neither: usize) -> Vec<Outcome> {
    std::iter::repeat_n(Outcome::PreferA, a)
        .chain(std::iter::repeat_n(Outcome::PreferB, b))
        .chain(std::iter::repeat_n(Outcome::Both, both))
        .chain(std::iter::repeat_n(Outcome::Neither, neither))
        .collect()
}

/// Cohen's kappa straight from the 4x4 contingency table.
pub fn kappa_from_table(x: &[Outcome], y: &[Outcome]) -> f64 {
    let cats = [Outcome::PreferA, Outcome::PreferB, Outcome::Both, Outcome::Neither];
    let idx = |o: &Outcome| cats.iter().position(|c| c == o).unwrap();
    let mut t = [[0f64; 4]; 4];
    for (a, b) in x.iter().zip(y) {
        t[idx(a)][idx(b)] += 1.0;
    }
    let n = x.len() as f64;
    let po = (0..4).map(|i| t[i][i]).sum::<f64>() / n;
    let pe = (0..4)
        .map(|i| t[i].iter().sum::<f64>() * (0..4).map(|r| t[r][i]).sum::<f64>())
        .sum::<f64>()
        / (n * n);
    (po - pe) / (1.0 - pe)
}

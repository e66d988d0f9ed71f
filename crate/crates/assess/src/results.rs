//! Unblinded aggregation of verdicts.

use std::collections::BTreeMap;

use serde::Serialize;

use qa_core::stats::{cohens_kappa, sign_test_binomial, wilcoxon_from_counts, Kappa, Sidedness, WilcoxonResult};

use crate::error::Result;
use crate::types::{resolve, Outcome, Session, Verdict};

/// Condition-level verdict counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub prefer_a: u64,
    pub prefer_b: u64,
    pub both: u64,
    pub neither: u64,
}

impl Counts {
    pub fn add(&mut self, o: Outcome) {
        match o {
            Outcome::PreferA => self.prefer_a += 1,
            Outcome::PreferB => self.prefer_b += 1,
            Outcome::Both => self.both += 1,
            Outcome::Neither => self.neither += 1,
        }
    }

    pub fn ties(&self) -> u64 {
        self.both + self.neither
    }

    pub fn total(&self) -> u64 {
        self.prefer_a + self.prefer_b + self.ties()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgeResult {
    pub judge_id: String,
    pub counts: Counts,
    /// Exact sign test with ties discarded; two-sided unless asked otherwise.
    pub binomial_p: f64,
    pub wilcoxon: WilcoxonResult,
    /// No question separated the conditions, so neither test is informative.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub judge_a: String,
    pub judge_b: String,
    /// Questions judged by both.
    pub items: usize,
    pub kappa: Option<Kappa>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsReport {
    pub session_id: String,
    pub condition_a: String,
    pub condition_b: String,
    pub questions: usize,
    pub judges: Vec<JudgeResult>,
    pub agreement: Vec<Agreement>,
}

pub fn judge_result(judge_id: &str, counts: Counts) -> JudgeResult {
    judge_result_sided(judge_id, counts, Sidedness::TwoSided)
}

/// Both tests under the given alternative; `Greater` means A is preferred.
pub fn judge_result_sided(judge_id: &str, counts: Counts, sided: Sidedness) -> JudgeResult {
    JudgeResult {
        judge_id: judge_id.to_string(),
        counts,
        binomial_p: sign_test_binomial(counts.prefer_a, counts.prefer_b, counts.ties(), sided),
        wilcoxon: wilcoxon_from_counts(counts.prefer_a, counts.prefer_b, counts.ties(), sided),
        degenerate: counts.prefer_a + counts.prefer_b == 0,
    }
}

/// Map `(judge, question, verdict)` triples through the side map and run the
/// per-judge tests and pairwise agreement.
pub fn compute_results(session: &Session, verdicts: &[(String, String, Verdict)]) -> Result<ResultsReport> {
    let mut per_judge: BTreeMap<&str, BTreeMap<&str, Outcome>> = BTreeMap::new();
    for (judge, qid, v) in verdicts {
        let side = session.side_map[qid.as_str()];
        per_judge.entry(judge).or_default().insert(qid, resolve(*v, side));
    }
    let judges = per_judge
        .iter()
        .map(|(j, outcomes)| {
            let mut c = Counts::default();
            outcomes.values().for_each(|o| c.add(*o));
            judge_result(j, c)
        })
        .collect();

    let names: Vec<&str> = per_judge.keys().copied().collect();
    let mut agreement = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (ma, mb) = (&per_judge[a], &per_judge[b]);
            let (xs, ys): (Vec<Outcome>, Vec<Outcome>) =
                ma.iter().filter_map(|(q, oa)| mb.get(q).map(|ob| (*oa, *ob))).unzip();
            let kappa = if xs.is_empty() { None } else { Some(cohens_kappa(&xs, &ys)?) };
            agreement.push(Agreement { judge_a: a.to_string(), judge_b: b.to_string(), items: xs.len(), kappa });
        }
    }
    Ok(ResultsReport {
        session_id: session.id.clone(),
        condition_a: session.condition_a.clone(),
        condition_b: session.condition_b.clone(),
        questions: session.questions.len(),
        judges,
        agreement,
    })
}

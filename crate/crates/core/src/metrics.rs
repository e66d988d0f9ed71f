//! Ranked-retrieval metrics under incomplete judgments.
//!
//! A ranked list is resolved against a [`JudgmentStore`] into a sequence of
//! tri-state judgments. Unjudged items count as nonrelevant for MAP and MRR,
//! contribute to the RBP residual, and are ignored entirely by b-pref.
//! Questions without any judged-relevant item are excluded from means.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::data_io::{DatasetSplit, RunFile};
use crate::error::{Error, Result};
use crate::judgments::{Judgment, JudgmentStore, RetrievedSentence};
use crate::text::{jaccard_sorted, token_set};

/// A question's ranking resolved to judgments, with its judged totals.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub question_id: String,
    pub keys: Vec<String>,
    pub judgments: Vec<Judgment>,
    /// Judged-relevant items for the question (retrieved or not).
    pub num_relevant: usize,
    /// Judged-nonrelevant items for the question (retrieved or not).
    pub num_nonrelevant: usize,
}

impl RankedList {
    /// Resolve `keys` (rank order) against `store`. Repeated keys keep only
    /// their first occurrence.
    pub fn resolve<S: AsRef<str>>(question_id: &str, keys: &[S], store: &JudgmentStore) -> Self {
        let mut seen = HashSet::new();
        let keys: Vec<String> = keys
            .iter()
            .map(AsRef::as_ref)
            .filter(|k| seen.insert(*k))
            .map(str::to_string)
            .collect();
        let judgments = keys.iter().map(|k| store.get(question_id, k)).collect();
        Self {
            question_id: question_id.to_string(),
            keys,
            judgments,
            num_relevant: store.num_relevant(question_id),
            num_nonrelevant: store.num_nonrelevant(question_id),
        }
    }

    pub fn from_judgments(judgments: Vec<Judgment>, num_relevant: usize, num_nonrelevant: usize) -> Self {
        Self {
            question_id: String::new(),
            keys: (0..judgments.len()).map(|i| i.to_string()).collect(),
            judgments,
            num_relevant,
            num_nonrelevant,
        }
    }

    pub fn unjudged(&self) -> usize {
        self.judgments.iter().filter(|j| **j == Judgment::Unjudged).count()
    }
}

/// Average precision; `None` when the question has no judged-relevant item.
pub fn average_precision(list: &RankedList) -> Option<f64> {
    if list.num_relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, j) in list.judgments.iter().enumerate() {
        if *j == Judgment::Relevant {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / list.num_relevant as f64)
}

/// Reciprocal rank of the first judged-relevant item; `None` when R = 0.
pub fn reciprocal_rank(list: &RankedList) -> Option<f64> {
    if list.num_relevant == 0 {
        return None;
    }
    Some(
        list.judgments
            .iter()
            .position(|j| *j == Judgment::Relevant)
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

/// Rank-biased precision with its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rbp {
    pub base: f64,
    pub residual: f64,
}

/// RBP at persistence `p` evaluated to `depth` (defaults to the list length).
/// The residual covers unjudged ranks within depth plus the tail `p^depth`.
pub fn rbp(list: &RankedList, p: f64, depth: Option<usize>) -> Result<Rbp> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("RBP persistence must be in (0,1), got {p}")));
    }
    let d = depth.unwrap_or(list.judgments.len());
    let within = d.min(list.judgments.len());
    let mut base = 0.0;
    let mut unjudged = 0.0;
    let mut weight = 1.0 - p;
    for j in &list.judgments[..within] {
        match j {
            Judgment::Relevant => base += weight,
            Judgment::Unjudged => unjudged += weight,
            Judgment::Nonrelevant => {}
        }
        weight *= p;
    }
    // Ranks past the end of the list are unknown, same as unjudged.
    Ok(Rbp { base, residual: unjudged + p.powi(within as i32) })
}

/// b-pref; `None` when R = 0. Unjudged items are ignored.
pub fn bpref(list: &RankedList) -> Option<f64> {
    let r = list.num_relevant;
    if r == 0 {
        return None;
    }
    let denom = r.min(list.num_nonrelevant);
    let mut nonrel_above = 0usize;
    let mut sum = 0.0;
    for j in &list.judgments {
        match j {
            Judgment::Nonrelevant => nonrel_above += 1,
            Judgment::Relevant => {
                let penalty = if denom == 0 {
                    0.0
                } else {
                    nonrel_above.min(denom) as f64 / denom as f64
                };
                sum += 1.0 - penalty;
            }
            Judgment::Unjudged => {}
        }
    }
    Some(sum / r as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Map,
    Mrr,
    Rbp,
    Bpref,
}

/// Which metrics to report and the RBP settings, e.g. `map,mrr,rbp:0.5,bpref`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSelection {
    pub metrics: Vec<MetricKind>,
    pub rbp_p: f64,
    pub rbp_depth: Option<usize>,
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self {
            metrics: vec![MetricKind::Map, MetricKind::Mrr, MetricKind::Rbp, MetricKind::Bpref],
            rbp_p: 0.5,
            rbp_depth: None,
        }
    }
}

impl FromStr for MetricSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sel = MetricSelection { metrics: Vec::new(), ..Default::default() };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, arg) = part.split_once(':').map_or((part, None), |(n, a)| (n, Some(a)));
            let kind = match name {
                "map" => MetricKind::Map,
                "mrr" => MetricKind::Mrr,
                "bpref" => MetricKind::Bpref,
                "rbp" => {
                    if let Some(a) = arg {
                        sel.rbp_p = a
                            .parse()
                            .map_err(|_| Error::InvalidArgument(format!("bad RBP persistence {a:?}")))?;
                    }
                    MetricKind::Rbp
                }
                other => return Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
            };
            if arg.is_some() && kind != MetricKind::Rbp {
                return Err(Error::InvalidArgument(format!("metric {name} takes no argument")));
            }
            if !sel.metrics.contains(&kind) {
                sel.metrics.push(kind);
            }
        }
        if sel.metrics.is_empty() {
            return Err(Error::InvalidArgument("no metrics selected".into()));
        }
        Ok(sel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryMetrics {
    pub question_id: String,
    pub ap: Option<f64>,
    pub rr: Option<f64>,
    pub rbp: Rbp,
    pub bpref: Option<f64>,
    pub retrieved: usize,
    pub unjudged: usize,
    pub num_relevant: usize,
}

impl QueryMetrics {
    pub fn compute(list: &RankedList, sel: &MetricSelection) -> Result<Self> {
        Ok(Self {
            question_id: list.question_id.clone(),
            ap: average_precision(list),
            rr: reciprocal_rank(list),
            rbp: rbp(list, sel.rbp_p, sel.rbp_depth)?,
            bpref: bpref(list),
            retrieved: list.keys.len(),
            unjudged: list.unjudged(),
            num_relevant: list.num_relevant,
        })
    }

    pub fn is_evaluated(&self) -> bool {
        self.num_relevant > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub per_query: Vec<QueryMetrics>,
    pub map: f64,
    pub mrr: f64,
    pub rbp: Rbp,
    pub bpref: f64,
    /// Unjudged retrieved items summed over every question in the run.
    pub unjudged: usize,
    pub evaluated: usize,
    pub excluded: usize,
    #[serde(skip)]
    pub selection: MetricSelection,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluate every question of `run`. Means are taken over questions with at
/// least one judged-relevant item; the rest are counted in `excluded`.
pub fn evaluate(run: &RunFile, store: &JudgmentStore, sel: &MetricSelection) -> Result<MetricReport> {
    let per_query = run
        .by_question()
        .into_iter()
        .map(|(qid, entries)| {
            let keys: Vec<&str> = entries.iter().map(|e| e.key.as_str()).collect();
            QueryMetrics::compute(&RankedList::resolve(qid, &keys, store), sel)
        })
        .collect::<Result<Vec<_>>>()?;
    let evaluated: Vec<&QueryMetrics> = per_query.iter().filter(|q| q.is_evaluated()).collect();
    Ok(MetricReport {
        map: mean(evaluated.iter().filter_map(|q| q.ap)),
        mrr: mean(evaluated.iter().filter_map(|q| q.rr)),
        rbp: Rbp {
            base: mean(evaluated.iter().map(|q| q.rbp.base)),
            residual: mean(evaluated.iter().map(|q| q.rbp.residual)),
        },
        bpref: mean(evaluated.iter().filter_map(|q| q.bpref)),
        unjudged: per_query.iter().map(|q| q.unjudged).sum(),
        evaluated: evaluated.len(),
        excluded: per_query.len() - evaluated.len(),
        per_query,
        selection: sel.clone(),
    })
}

impl MetricReport {
    /// Tab-separated report: selected metric columns plus the unjudged count,
    /// one row per question when `per_query` is set, then an `all` row.
    pub fn to_tsv(&self, per_query: bool) -> String {
        let sel = &self.selection;
        let mut out = String::from("qid");
        for m in &sel.metrics {
            match m {
                MetricKind::Map => out.push_str("\tmap"),
                MetricKind::Mrr => out.push_str("\tmrr"),
                MetricKind::Rbp => {
                    let _ = write!(out, "\trbp@{}\trbp_residual", sel.rbp_p);
                }
                MetricKind::Bpref => out.push_str("\tbpref"),
            }
        }
        out.push_str("\tunjudged\n");
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
        if per_query {
            for q in &self.per_query {
                out.push_str(&q.question_id);
                for m in &sel.metrics {
                    match m {
                        MetricKind::Map => { let _ = write!(out, "\t{}", fmt(q.ap)); }
                        MetricKind::Mrr => { let _ = write!(out, "\t{}", fmt(q.rr)); }
                        MetricKind::Rbp => {
                            let _ = write!(out, "\t{:.4}\t{:.4}", q.rbp.base, q.rbp.residual);
                        }
                        MetricKind::Bpref => { let _ = write!(out, "\t{}", fmt(q.bpref)); }
                    }
                }
                let _ = writeln!(out, "\t{}", q.unjudged);
            }
        }
        out.push_str("all");
        for m in &sel.metrics {
            match m {
                MetricKind::Map => { let _ = write!(out, "\t{:.4}", self.map); }
                MetricKind::Mrr => { let _ = write!(out, "\t{:.4}", self.mrr); }
                MetricKind::Rbp => {
                    let _ = write!(out, "\t{:.4}\t{:.4}", self.rbp.base, self.rbp.residual);
                }
                MetricKind::Bpref => { let _ = write!(out, "\t{:.4}", self.bpref); }
            }
        }
        let _ = writeln!(out, "\t{}", self.unjudged);
        out
    }
}

/// One point of a recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecallPoint {
    pub hits: usize,
    pub recalled: usize,
    pub total_relevant: usize,
    pub recall: f64,
}

/// Fraction of the dataset's relevant sentences that some pooled sentence of
/// the same question matches with Jaccard strictly above `threshold`.
///
/// `pools` pairs each retrieval depth with the sentences pooled at that depth.
pub fn recall_curve(
    pools: &[(usize, Vec<RetrievedSentence>)],
    dataset: &DatasetSplit,
    threshold: f64,
) -> Vec<RecallPoint> {
    let relevant: Vec<(&str, Vec<&str>)> = dataset
        .groups
        .iter()
        .flat_map(|g| {
            g.candidates
                .iter()
                .filter(|c| c.is_relevant())
                .map(move |c| (g.question_id.as_str(), token_set(&c.sentence.tokens)))
        })
        .collect();
    let total = relevant.len();
    pools
        .iter()
        .map(|(hits, pool)| {
            let pool_sets: Vec<(&str, Vec<&str>)> = pool
                .iter()
                .map(|r| (r.question_id.as_str(), token_set(&r.sentence.tokens)))
                .collect();
            let recalled = relevant
                .iter()
                .filter(|(qid, set)| {
                    pool_sets
                        .iter()
                        .any(|(pq, ps)| pq == qid && jaccard_sorted(set, ps) > threshold)
                })
                .count();
            RecallPoint {
                hits: *hits,
                recalled,
                total_relevant: total,
                recall: if total == 0 { 0.0 } else { recalled as f64 / total as f64 },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Judgment::{Nonrelevant as N, Relevant as R, Unjudged as U};

    fn list(j: &[Judgment], r: usize, n: usize) -> RankedList {
        RankedList::from_judgments(j.to_vec(), r, n)
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&list(&[R], 1, 0)), Some(1.0));
        let ap = average_precision(&list(&[R, N, R], 2, 1)).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(average_precision(&list(&[N, U], 2, 1)), Some(0.0));
        assert_eq!(average_precision(&list(&[N], 0, 1)), None);
    }

    #[test]
    fn rr_examples() {
        assert_eq!(reciprocal_rank(&list(&[N, R], 1, 1)), Some(0.5));
        assert_eq!(reciprocal_rank(&list(&[R], 1, 0)), Some(1.0));
        assert_eq!(reciprocal_rank(&list(&[N, U], 1, 1)), Some(0.0));
    }

    #[test]
    fn rbp_examples() {
        let mut j = vec![R, N, R];
        j.extend(std::iter::repeat_n(N, 60));
        let r = rbp(&list(&j, 2, 61), 0.5, None).unwrap();
        assert!((r.base - 0.625).abs() < 1e-12);
        assert!(r.residual < 1e-15);

        let r = rbp(&list(&vec![U; 60], 1, 0), 0.5, None).unwrap();
        assert_eq!(r.base, 0.0);
        assert!((r.residual - 1.0).abs() < 1e-15);

        let r = rbp(&list(&[], 0, 0), 0.5, Some(0)).unwrap();
        assert_eq!((r.base, r.residual), (0.0, 1.0));
        assert!(rbp(&list(&[], 0, 0), 1.0, None).is_err());
    }

    #[test]
    fn bpref_examples() {
        assert_eq!(bpref(&list(&[R, N], 1, 1)), Some(1.0));
        assert_eq!(bpref(&list(&[N, R], 1, 1)), Some(0.0));
        assert_eq!(bpref(&list(&[N, U, R, R], 2, 1)), Some(0.0));
        assert_eq!(bpref(&list(&[N, R, R], 2, 1)), Some(0.0));
        // No judged nonrelevant at all: penalty term is zero.
        assert_eq!(bpref(&list(&[R, U], 2, 0)), Some(0.5));
    }

    #[test]
    fn selection_parsing() {
        let s: MetricSelection = "map,rbp:0.8,bpref".parse().unwrap();
        assert_eq!(s.metrics, [MetricKind::Map, MetricKind::Rbp, MetricKind::Bpref]);
        assert_eq!(s.rbp_p, 0.8);
        assert!("ndcg".parse::<MetricSelection>().is_err());
        assert!("map:3".parse::<MetricSelection>().is_err());
    }

    #[test]
    fn evaluate_single_question_run() {
        use crate::data_io::RunEntry;
        use crate::judgments::Relevance;
        let mut store = JudgmentStore::new();
        store.insert("q1", "d1#0", Relevance::Relevant);
        store.insert("q2", "x", Relevance::Nonrelevant);
        let run = RunFile::new(vec![
            RunEntry { qid: "q1".into(), key: "d1#0".into(), rank: 1, score: 3.0, tag: "t".into() },
            RunEntry { qid: "q1".into(), key: "d2#0".into(), rank: 2, score: 1.0, tag: "t".into() },
            RunEntry { qid: "q2".into(), key: "x".into(), rank: 1, score: 1.0, tag: "t".into() },
        ])
        .unwrap();
        let rep = evaluate(&run, &store, &MetricSelection::default()).unwrap();
        assert_eq!((rep.map, rep.mrr, rep.bpref), (1.0, 1.0, 1.0));
        assert_eq!((rep.evaluated, rep.excluded, rep.unjudged), (1, 1, 1));
        let tsv = rep.to_tsv(true);
        assert!(tsv.starts_with("qid\tmap\tmrr\trbp@0.5\trbp_residual\tbpref\tunjudged\n"), "{tsv}");
        assert!(tsv.contains("\nall\t1.0000\t1.0000\t0.5000\t0.5000\t1.0000\t1\n"), "{tsv}");
    }
}

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ranking::ScoredCandidate;

/// One line of a TREC run: `<qid> Q0 <key> <rank> <score> <tag>`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub qid: String,
    pub key: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    pub entries: Vec<RunEntry>,
}

impl RunFile {
    pub fn new(entries: Vec<RunEntry>) -> Result<Self> {
        let run = Self { entries };
        run.validate()?;
        Ok(run)
    }

    pub fn from_ranked(list: &[ScoredCandidate], tag: &str) -> Self {
        Self {
            entries: list
                .iter()
                .map(|c| RunEntry {
                    qid: c.question_id.clone(),
                    key: c.key.clone(),
                    rank: c.rank,
                    score: c.score,
                    tag: tag.to_string(),
                })
                .collect(),
        }
    }

    pub fn extend(&mut self, other: RunFile) {
        self.entries.extend(other.entries);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Question ids in order of first appearance.
    pub fn question_ids(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.qid.as_str()))
            .map(|e| e.qid.as_str())
            .collect()
    }

    /// Entries grouped by question, in rank order, questions in order of first appearance.
    pub fn by_question(&self) -> Vec<(&str, Vec<&RunEntry>)> {
        let mut order: Vec<(&str, Vec<&RunEntry>)> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for e in &self.entries {
            let i = *slot.entry(e.qid.as_str()).or_insert_with(|| {
                order.push((e.qid.as_str(), Vec::new()));
                order.len() - 1
            });
            order[i].1.push(e);
        }
        for (_, list) in &mut order {
            list.sort_by_key(|e| e.rank);
        }
        order
    }

    /// Ranks 1..n without gaps per question (in file order) and non-increasing scores.
    pub fn validate(&self) -> Result<()> {
        let mut last: HashMap<&str, (usize, f64)> = HashMap::new();
        for e in &self.entries {
            for (what, field) in [("question id", &e.qid), ("key", &e.key), ("tag", &e.tag)] {
                if field.is_empty() || field.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidRun(format!(
                        "{what} {field:?} is empty or contains whitespace"
                    )));
                }
            }
            if !e.score.is_finite() {
                return Err(Error::InvalidRun(format!(
                    "non-finite score at question {} rank {}",
                    e.qid, e.rank
                )));
            }
            let (prev_rank, prev_score) = last.get(e.qid.as_str()).copied().unwrap_or((0, f64::INFINITY));
            if e.rank != prev_rank + 1 {
                return Err(Error::InvalidRun(format!(
                    "rank gap at question {} (rank {} follows {})",
                    e.qid, e.rank, prev_rank
                )));
            }
            if e.score > prev_score {
                return Err(Error::InvalidRun(format!(
                    "score inversion at question {} rank {} ({} > {})",
                    e.qid, e.rank, e.score, prev_score
                )));
            }
            last.insert(e.qid.as_str(), (e.rank, e.score));
        }
        Ok(())
    }

    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            writeln!(out, "{} Q0 {} {} {:.6} {}", e.qid, e.key, e.rank, e.score, e.tag)
                .expect("write to String");
        }
        out
    }

    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(Error::parse(path, i + 1, format!("expected 6 columns, found {}", cols.len())));
            }
            let rank = cols[3]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad rank {:?}", cols[3])))?;
            let score = cols[4]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad score {:?}", cols[4])))?;
            entries.push(RunEntry {
                qid: cols[0].to_string(),
                key: cols[2].to_string(),
                rank,
                score,
                tag: cols[5].to_string(),
            });
        }
        Self::new(entries)
    }
}

pub fn write_run(run: &RunFile, path: &Path) -> Result<()> {
    run.validate()?;
    super::write_atomic(path, run.to_trec_string().as_bytes())
}

pub fn read_run(path: &Path) -> Result<RunFile> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunFile::parse(&content, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(q: &str, k: &str, rank: usize, score: f64) -> RunEntry {
        RunEntry { qid: q.into(), key: k.into(), rank, score, tag: "t".into() }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.txt");
        let run = RunFile::new(vec![entry("q1", "d1#0", 1, 2.5), entry("q1", "d2#3", 2, 0.125)]).unwrap();
        write_run(&run, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "q1 Q0 d1#0 1 2.500000 t\nq1 Q0 d2#3 2 0.125000 t\n"
        );
        assert_eq!(read_run(&path).unwrap(), run);
    }

    #[test]
    fn rank_gap_and_inversion_are_rejected() {
        let err = RunFile::new(vec![entry("q1", "a", 1, 1.0), entry("q1", "b", 3, 0.5)]).unwrap_err();
        assert!(err.to_string().contains("rank gap at question q1"), "{err}");
        let err = RunFile::new(vec![entry("q1", "a", 1, 1.0), entry("q1", "b", 2, 2.0)]).unwrap_err();
        assert!(err.to_string().contains("score inversion"), "{err}");
        assert!(RunFile::new(vec![entry("q1", "a b", 1, 1.0)]).is_err());
        // Interleaved questions are fine as long as each question is consistent.
        RunFile::new(vec![entry("q1", "a", 1, 1.0), entry("q2", "a", 1, 9.0), entry("q1", "b", 2, 1.0)]).unwrap();
    }
}

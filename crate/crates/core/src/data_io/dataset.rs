use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenizedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" | "train-all" => Ok(SplitName::Train),
            "dev" | "raw-dev" => Ok(SplitName::Dev),
            "test" | "raw-test" => Ok(SplitName::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

/// One line of the canonical JSONL format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub qid: String,
    pub question: String,
    pub candidate: String,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCandidate {
    pub sentence: TokenizedSentence,
    pub label: u8,
}

impl LabeledCandidate {
    pub fn is_relevant(&self) -> bool {
        self.label == 1
    }
}

/// All candidates for one question, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionGroup {
    pub question_id: String,
    pub question: TokenizedSentence,
    pub candidates: Vec<LabeledCandidate>,
}

impl QuestionGroup {
    pub fn positives(&self) -> usize {
        self.candidates.iter().filter(|c| c.is_relevant()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SplitStats {
    pub questions: usize,
    pub positives: usize,
    pub negatives: usize,
}

impl std::ops::Add for SplitStats {
    type Output = SplitStats;

    fn add(self, o: SplitStats) -> SplitStats {
        SplitStats {
            questions: self.questions + o.questions,
            positives: self.positives + o.positives,
            negatives: self.negatives + o.negatives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub groups: Vec<QuestionGroup>,
}

impl DatasetSplit {
    /// Group pairs by question id in order of first appearance.
    pub fn from_pairs(name: SplitName, pairs: impl IntoIterator<Item = QAPair>) -> Self {
        let mut groups: Vec<QuestionGroup> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        for pair in pairs {
            let idx = *slot.entry(pair.qid.clone()).or_insert_with(|| {
                groups.push(QuestionGroup {
                    question_id: pair.qid.clone(),
                    question: TokenizedSentence::new(pair.question.clone()),
                    candidates: Vec::new(),
                });
                groups.len() - 1
            });
            groups[idx].candidates.push(LabeledCandidate {
                sentence: TokenizedSentence::new(pair.candidate),
                label: pair.label,
            });
        }
        Self { name, groups }
    }

    pub fn stats(&self) -> SplitStats {
        let positives = self.groups.iter().map(QuestionGroup::positives).sum();
        let total: usize = self.groups.iter().map(|g| g.candidates.len()).sum();
        SplitStats {
            questions: self.groups.len(),
            positives,
            negatives: total - positives,
        }
    }

    pub fn group(&self, question_id: &str) -> Option<&QuestionGroup> {
        self.groups.iter().find(|g| g.question_id == question_id)
    }

    pub fn pairs(&self) -> impl Iterator<Item = QAPair> + '_ {
        self.groups.iter().flat_map(|g| {
            g.candidates.iter().map(move |c| QAPair {
                qid: g.question_id.clone(),
                question: g.question.raw.clone(),
                candidate: c.sentence.raw.clone(),
                label: c.label,
            })
        })
    }
}

#[derive(Deserialize)]
struct RawPair {
    qid: serde_json::Value,
    question: String,
    candidate: String,
    label: serde_json::Value,
}

fn validate_pair(raw: RawPair) -> std::result::Result<QAPair, String> {
    let qid = match raw.qid {
        serde_json::Value::String(s) => s,
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(format!("qid must be a string, got {other}")),
    };
    if qid.trim().is_empty() {
        return Err("empty qid".into());
    }
    let label = match raw.label.as_u64() {
        Some(0) => 0,
        Some(1) => 1,
        _ => return Err(format!("label must be 0 or 1, got {}", raw.label)),
    };
    if TokenizedSentence::new(raw.candidate.as_str()).is_empty() {
        return Err("empty candidate text".into());
    }
    Ok(QAPair {
        qid,
        question: raw.question,
        candidate: raw.candidate,
        label,
    })
}

/// Parse JSONL content; `path` is used only for error messages.
pub fn parse_trecqa(content: &str, name: SplitName, path: &Path) -> Result<DatasetSplit> {
    let mut pairs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPair =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        pairs.push(validate_pair(raw).map_err(|m| Error::parse(path, i + 1, m))?);
    }
    Ok(DatasetSplit::from_pairs(name, pairs))
}

pub fn load_trecqa(path: &Path, name: SplitName) -> Result<DatasetSplit> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trecqa(&content, name, path)
}

pub fn write_trecqa(split: &DatasetSplit, path: &Path) -> Result<()> {
    let mut out = String::new();
    for pair in split.pairs() {
        out.push_str(&serde_json::to_string(&pair).expect("QAPair serializes"));
        out.push('\n');
    }
    super::write_atomic(path, out.as_bytes())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(content.lines().map(str::to_string).collect())
}

/// Read the community layout: `id.txt`, `a.toks` (questions), `b.toks`
/// (candidates) and `sim.txt` (labels), one pair per line in each.
pub fn convert_parallel_files(dir: &Path) -> Result<Vec<QAPair>> {
    let ids = read_lines(&dir.join("id.txt"))?;
    let questions = read_lines(&dir.join("a.toks"))?;
    let candidates = read_lines(&dir.join("b.toks"))?;
    let labels_path = dir.join("sim.txt");
    let labels = read_lines(&labels_path)?;
    let n = ids.len();
    for (name, len) in [("a.toks", questions.len()), ("b.toks", candidates.len()), ("sim.txt", labels.len())] {
        if len != n {
            return Err(Error::parse(
                &dir.join(name),
                len.min(n) + 1,
                format!("expected {n} lines to match id.txt, found {len}"),
            ));
        }
    }
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let label = serde_json::Value::from(
            labels[i]
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(&labels_path, i + 1, format!("bad label {:?}", labels[i])))?,
        );
        let raw = RawPair {
            qid: serde_json::Value::String(ids[i].trim().to_string()),
            question: questions[i].clone(),
            candidate: candidates[i].clone(),
            label,
        };
        pairs.push(validate_pair(raw).map_err(|m| Error::parse(&dir.join("id.txt"), i + 1, m))?);
    }
    Ok(pairs)
}

pub fn load_parallel_split(dir: &Path, name: SplitName) -> Result<DatasetSplit> {
    Ok(DatasetSplit::from_pairs(name, convert_parallel_files(dir)?))
}

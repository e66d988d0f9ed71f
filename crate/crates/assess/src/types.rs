use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Where condition A is shown for a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "A-left")]
    ALeft,
    #[serde(rename = "A-right")]
    ARight,
}

/// What a judge can answer for one side-by-side pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Left,
    Right,
    Both,
    Neither,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [Verdict::Left, Verdict::Right, Verdict::Both, Verdict::Neither];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Left => "Left",
            Verdict::Right => "Right",
            Verdict::Both => "Both",
            Verdict::Neither => "Neither",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Verdict::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidVerdict(s.to_string()))
    }
}

/// A verdict mapped back to the conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    PreferA,
    PreferB,
    Both,
    Neither,
}

pub fn resolve(verdict: Verdict, side: Side) -> Outcome {
    match (verdict, side) {
        (Verdict::Left, Side::ALeft) | (Verdict::Right, Side::ARight) => Outcome::PreferA,
        (Verdict::Left, Side::ARight) | (Verdict::Right, Side::ALeft) => Outcome::PreferB,
        (Verdict::Both, _) => Outcome::Both,
        (Verdict::Neither, _) => Outcome::Neither,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub key: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionQuestion {
    pub id: String,
    pub text: String,
    pub a: Vec<Answer>,
    pub b: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub created_at: String,
    pub seed: u64,
    pub k: usize,
    pub shuffle: bool,
    pub condition_a: String,
    pub condition_b: String,
    pub questions: Vec<SessionQuestion>,
    pub side_map: BTreeMap<String, Side>,
}

impl Session {
    pub fn question(&self, id: &str) -> Option<&SessionQuestion> {
        self.questions.iter().find(|q| q.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub seq: u64,
    pub session_id: String,
    pub judge_id: String,
    pub question_id: String,
    pub verdict: Verdict,
    pub timestamp: String,
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated(Session),
    Judgment(JudgmentRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// What a judge sees: question text and two unlabeled answer columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedItem {
    pub session_id: String,
    pub question_id: String,
    pub question: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextItem {
    pub done: bool,
    pub item: Option<BlindedItem>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub accepted: bool,
    pub seq: u64,
    /// True when this overwrote an earlier verdict for the same question.
    pub replaced: bool,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionProgress {
    pub session_id: String,
    pub total: usize,
    pub judges: BTreeMap<String, usize>,
}

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::judgments::{JudgmentStore, Relevance};

/// Parse `<qid> 0 <key> <rel>` lines with `rel` in {0, 1}.
pub fn parse_qrels(content: &str, path: &Path) -> Result<JudgmentStore> {
    let mut store = JudgmentStore::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::parse(path, i + 1, format!("expected 4 columns, found {}", cols.len())));
        }
        let rel = match cols[3] {
            "0" => Relevance::Nonrelevant,
            "1" => Relevance::Relevant,
            other => return Err(Error::parse(path, i + 1, format!("relevance must be 0 or 1, got {other:?}"))),
        };
        store.insert(cols[0], cols[2], rel);
    }
    Ok(store)
}

pub fn read_qrels(path: &Path) -> Result<JudgmentStore> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(&content, path)
}

pub fn format_qrels(store: &JudgmentStore) -> String {
    let mut out = String::new();
    for (qid, key, rel) in store.iter() {
        let v = match rel {
            Relevance::Relevant => 1,
            Relevance::Nonrelevant => 0,
        };
        writeln!(out, "{qid} 0 {key} {v}").expect("write to String");
    }
    out
}

pub fn write_qrels(store: &JudgmentStore, path: &Path) -> Result<()> {
    super::write_atomic(path, format_qrels(store).as_bytes())
}

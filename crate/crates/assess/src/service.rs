//! Session state backed by a JSONL journal.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use qa_core::data_io::RunFile;

use crate::error::{Error, Result};
use crate::results::{compute_results, ResultsReport};
use crate::types::{
    Ack, Answer, BlindedItem, Event, JudgmentRecord, NextItem, Progress, Session, SessionProgress,
    SessionQuestion, Side, Verdict,
};

pub const DEFAULT_K: usize = 5;

/// Inputs for a new session.
#[derive(Debug, Clone)]
pub struct NewSession {
    pub run_a: RunFile,
    pub run_b: RunFile,
    /// Sentence key to text.
    pub sentences: BTreeMap<String, String>,
    /// Question id to question text.
    pub questions: BTreeMap<String, String>,
    pub k: usize,
    pub seed: u64,
    /// Give each judge their own question order.
    pub shuffle: bool,
}

#[derive(Debug, Clone)]
struct SessionState {
    session: Arc<Session>,
    /// Effective verdicts keyed by (judge, question).
    effective: BTreeMap<(String, String), JudgmentRecord>,
}

#[derive(Debug, Clone, Default)]
struct State {
    sessions: BTreeMap<String, Arc<SessionState>>,
    next_seq: u64,
}

impl State {
    fn apply(&mut self, event: Event) {
        match event {
            Event::SessionCreated(s) => {
                let id = s.id.clone();
                self.sessions
                    .insert(id, Arc::new(SessionState { session: Arc::new(s), effective: BTreeMap::new() }));
            }
            Event::Judgment(j) => {
                self.next_seq = self.next_seq.max(j.seq + 1);
                if let Some(s) = self.sessions.get_mut(&j.session_id) {
                    Arc::make_mut(s)
                        .effective
                        .insert((j.judge_id.clone(), j.question_id.clone()), j);
                }
            }
        }
    }
}

struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Append one event and sync it to disk.
    fn append(&mut self, event: &Event) -> Result<()> {
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

/// The assessment backend. Writes are serialized through the journal lock;
/// reads work on an immutable snapshot of the materialized state.
pub struct AssessService {
    journal: Mutex<Journal>,
    state: RwLock<Arc<State>>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Replay a journal. A final line without its newline is an unacknowledged
/// write cut short by a crash; it is dropped and its byte offset returned.
fn replay(path: &Path) -> Result<(State, Option<u64>)> {
    let mut state = State::default();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((state, None)),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut reader = BufReader::new(file);
    let mut offset = 0u64;
    let mut line_no = 0;
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Ok((state, None));
        }
        line_no += 1;
        if !buf.ends_with('\n') {
            return Ok((state, Some(offset)));
        }
        offset += n as u64;
        if buf.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&buf).map_err(|e| Error::Journal {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        state.apply(event);
    }
}

fn session_id(seed: u64, ordinal: usize, questions: &[SessionQuestion]) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((ordinal as u64).to_le_bytes());
    for q in questions {
        h.update(q.id.as_bytes());
        h.update([0]);
        for a in q.a.iter().chain(&q.b) {
            h.update(a.key.as_bytes());
            h.update([0]);
        }
    }
    format!("s{}", hex::encode(&h.finalize()[..8]))
}

fn judge_seed(seed: u64, judge: &str) -> u64 {
    let digest = Sha256::digest(judge.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

/// Coin flip per question, in sorted question-id order.
pub fn draw_side_map<'a>(question_ids: impl IntoIterator<Item = &'a str>, seed: u64) -> BTreeMap<String, Side> {
    let sorted: BTreeSet<&str> = question_ids.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted
        .into_iter()
        .map(|q| (q.to_string(), if rng.random_bool(0.5) { Side::ALeft } else { Side::ARight }))
        .collect()
}

fn validate_judge(judge: &str) -> Result<()> {
    if judge.trim().is_empty() || judge.len() > 128 {
        return Err(Error::InvalidRequest("judge id must be 1 to 128 characters".into()));
    }
    Ok(())
}

fn answers(run: &RunFile, qid: &str, k: usize, sentences: &BTreeMap<String, String>) -> Result<Vec<Answer>> {
    let mut entries: Vec<_> = run.entries.iter().filter(|e| e.qid == qid).collect();
    entries.sort_by_key(|e| e.rank);
    entries
        .into_iter()
        .take(k)
        .map(|e| {
            let text = sentences
                .get(&e.key)
                .ok_or_else(|| Error::InvalidRequest(format!("no text for sentence {:?}", e.key)))?;
            Ok(Answer { key: e.key.clone(), text: text.clone() })
        })
        .collect()
}

fn run_tag(run: &RunFile, fallback: &str) -> String {
    run.entries.first().map_or_else(|| fallback.to_string(), |e| e.tag.clone())
}

impl AssessService {
    /// Open (or create) the journal at `path` and rebuild state from it.
    pub fn open(path: &Path) -> Result<Self> {
        let (state, torn) = replay(path)?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        if let Some(len) = torn {
            file.set_len(len).map_err(|e| Error::io(path, e))?;
        }
        Ok(Self {
            journal: Mutex::new(Journal { path: path.to_path_buf(), file }),
            state: RwLock::new(Arc::new(state)),
        })
    }

    pub fn journal_path(&self) -> PathBuf {
        self.journal.lock().path.clone()
    }

    fn snapshot(&self) -> Arc<State> {
        self.state.read().clone()
    }

    fn session_state(&self, id: &str) -> Result<Arc<SessionState>> {
        self.snapshot()
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSession(id.to_string()))
    }

    /// Journal the event, then publish the new state. The caller holds the
    /// journal lock, so writers are serialized.
    fn commit(&self, journal: &mut Journal, event: Event) -> Result<()> {
        journal.append(&event)?;
        let mut next = (*self.snapshot()).clone();
        next.apply(event);
        *self.state.write() = Arc::new(next);
        Ok(())
    }

    pub fn create_session(&self, new: NewSession) -> Result<Arc<Session>> {
        if new.k == 0 {
            return Err(Error::InvalidRequest("k must be at least 1".into()));
        }
        let ids_a: BTreeSet<&str> = new.run_a.question_ids().into_iter().collect();
        let ids_b: BTreeSet<&str> = new.run_b.question_ids().into_iter().collect();
        if ids_a != ids_b {
            let only: Vec<&str> = ids_a.symmetric_difference(&ids_b).copied().take(5).collect();
            return Err(Error::InvalidRequest(format!("runs cover different questions, e.g. {only:?}")));
        }
        if ids_a.is_empty() {
            return Err(Error::InvalidRequest("runs contain no questions".into()));
        }
        let mut questions = Vec::with_capacity(ids_a.len());
        for qid in &ids_a {
            let text = new
                .questions
                .get(*qid)
                .ok_or_else(|| Error::InvalidRequest(format!("no text for question {qid:?}")))?;
            questions.push(SessionQuestion {
                id: qid.to_string(),
                text: text.clone(),
                a: answers(&new.run_a, qid, new.k, &new.sentences)?,
                b: answers(&new.run_b, qid, new.k, &new.sentences)?,
            });
        }

        let mut journal = self.journal.lock();
        let ordinal = self.snapshot().sessions.len();
        let session = Session {
            id: session_id(new.seed, ordinal, &questions),
            created_at: now(),
            seed: new.seed,
            k: new.k,
            shuffle: new.shuffle,
            condition_a: run_tag(&new.run_a, "A"),
            condition_b: run_tag(&new.run_b, "B"),
            side_map: draw_side_map(ids_a.iter().copied(), new.seed),
            questions,
        };
        self.commit(&mut journal, Event::SessionCreated(session.clone()))?;
        Ok(Arc::new(session))
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>> {
        Ok(self.session_state(id)?.session.clone())
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.snapshot().sessions.keys().cloned().collect()
    }

    /// The order in which `judge` sees the questions.
    pub fn judge_order(&self, session_id: &str, judge: &str) -> Result<Vec<String>> {
        let s = self.session(session_id)?;
        let mut ids: Vec<String> = s.questions.iter().map(|q| q.id.clone()).collect();
        if s.shuffle {
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(judge_seed(s.seed, judge)));
        }
        Ok(ids)
    }

    fn progress_of(state: &SessionState, judge: &str) -> Progress {
        let done = state.effective.keys().filter(|(j, _)| j == judge).count();
        Progress { done, total: state.session.questions.len() }
    }

    /// The first question in the judge's order that they have not judged.
    pub fn next_item(&self, session_id: &str, judge: &str) -> Result<NextItem> {
        validate_judge(judge)?;
        let state = self.session_state(session_id)?;
        let s = &state.session;
        let progress = Self::progress_of(&state, judge);
        let next = self
            .judge_order(session_id, judge)?
            .into_iter()
            .find(|q| !state.effective.contains_key(&(judge.to_string(), q.clone())));
        let Some(qid) = next else {
            return Ok(NextItem { done: true, item: None, progress });
        };
        let q = s.question(&qid).expect("ordered ids come from the session");
        let texts = |list: &[Answer]| list.iter().map(|a| a.text.clone()).collect::<Vec<_>>();
        let (left, right) = match s.side_map[&qid] {
            Side::ALeft => (texts(&q.a), texts(&q.b)),
            Side::ARight => (texts(&q.b), texts(&q.a)),
        };
        Ok(NextItem {
            done: false,
            item: Some(BlindedItem {
                session_id: s.id.clone(),
                question_id: qid.clone(),
                question: q.text.clone(),
                left,
                right,
            }),
            progress,
        })
    }

    /// Record a verdict. Returns only after the journal line is on disk.
    pub fn submit_judgment(&self, session_id: &str, judge: &str, question_id: &str, verdict: &str) -> Result<Ack> {
        validate_judge(judge)?;
        let verdict: Verdict = verdict.parse()?;
        let state = self.session_state(session_id)?;
        if state.session.question(question_id).is_none() {
            return Err(Error::UnknownQuestion(question_id.to_string()));
        }
        let mut journal = self.journal.lock();
        let current = self.snapshot();
        let replaced = current.sessions[session_id]
            .effective
            .contains_key(&(judge.to_string(), question_id.to_string()));
        let record = JudgmentRecord {
            seq: current.next_seq,
            session_id: session_id.to_string(),
            judge_id: judge.to_string(),
            question_id: question_id.to_string(),
            verdict,
            timestamp: now(),
        };
        let seq = record.seq;
        self.commit(&mut journal, Event::Judgment(record))?;
        drop(journal);
        let state = self.session_state(session_id)?;
        let progress = Self::progress_of(&state, judge);
        Ok(Ack { accepted: true, seq, replaced, progress })
    }

    pub fn progress(&self, session_id: &str) -> Result<SessionProgress> {
        let state = self.session_state(session_id)?;
        let mut judges = BTreeMap::new();
        for (j, _) in state.effective.keys() {
            *judges.entry(j.clone()).or_insert(0) += 1;
        }
        Ok(SessionProgress { session_id: session_id.to_string(), total: state.session.questions.len(), judges })
    }

    /// Effective verdicts as (judge, question, verdict).
    pub fn verdicts(&self, session_id: &str) -> Result<Vec<(String, String, Verdict)>> {
        let state = self.session_state(session_id)?;
        Ok(state
            .effective
            .iter()
            .map(|((j, q), r)| (j.clone(), q.clone(), r.verdict))
            .collect())
    }

    pub fn results(&self, session_id: &str) -> Result<ResultsReport> {
        let state = self.session_state(session_id)?;
        let verdicts: Vec<(String, String, Verdict)> =
            state.effective.iter().map(|((j, q), r)| (j.clone(), q.clone(), r.verdict)).collect();
        compute_results(&state.session, &verdicts)
    }

    /// Every journaled verdict for the session, oldest first, including
    /// overwritten ones.
    pub fn audit_trail(&self, session_id: &str) -> Result<Vec<JudgmentRecord>> {
        self.session_state(session_id)?;
        let path = self.journal_path();
        let _guard = self.journal.lock();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line).map_err(|e| Error::Journal {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if let Event::Judgment(j) = event {
                if j.session_id == session_id {
                    out.push(j);
                }
            }
        }
        Ok(out)
    }
}

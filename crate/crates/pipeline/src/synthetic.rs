//! A small deterministic collection with planted answer sentences and
//! dataset-style annotations, for end-to-end runs without licensed data.
//!
//! Each question asks about one invented fact. The fact's answer sentence is
//! planted in two documents (once verbatim, once behind a short lead-in), and
//! two near-miss sentences that mention the same entity without answering are
//! planted elsewhere. The annotated splits hold the answer as the relevant
//! candidate and near misses plus filler as nonrelevant candidates, written
//! with punctuation split off the way the public datasets are tokenized.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qa_core::data_io::{load_trecqa, write_trecqa, DatasetSplit, QAPair, SplitName};

use crate::documents::{read_documents, write_jsonl, Document};
use crate::error::{Error, Result};
use crate::pipeline::{format_questions, read_questions, Question};

pub const DEFAULT_SEED: u64 = 42;

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const QUESTIONS_FILE: &str = "questions.tsv";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const DEV_FILE: &str = "dev.jsonl";
pub const TEST_FILE: &str = "test.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub documents: usize,
    pub test_questions: usize,
    pub train_questions: usize,
    pub dev_questions: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { documents: 200, test_questions: 20, train_questions: 60, dev_questions: 12, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    /// Test questions, answerable from `documents`.
    pub questions: Vec<Question>,
    pub train: DatasetSplit,
    pub dev: DatasetSplit,
    pub test: DatasetSplit,
}

const SYLLABLES: &[&str] = &[
    "ar", "ve", "lo", "min", "ta", "ren", "so", "dal", "ki", "mor", "bel", "un", "cas", "tor", "ni",
    "fa", "gol", "esh", "ri", "van", "pel", "dru", "sa", "quin", "ob", "lex", "ha", "zed",
];
const DEVICES: &[&str] = &["lamp", "engine", "loom", "telescope", "compass", "press", "valve", "clock"];
const ORG_KINDS: &[&str] = &["Institute", "Society", "Academy", "Museum", "Orchestra", "Foundation"];
const TOPICS: &[&str] = &[
    "the budget", "new trade rules", "a housing plan", "the harvest", "local elections", "road repairs",
    "school funding", "the water supply", "rail service", "museum hours", "fishing quotas", "tax reform",
];
const SUBJECTS: &[&str] = &[
    "The committee", "Officials", "Residents", "Analysts", "The council", "Several teachers",
    "Local farmers", "The mayor", "Union leaders", "Economists",
];
const VERBS: &[&str] = &["discussed", "reported on", "criticized", "reviewed", "debated", "praised", "questioned"];
const DAYS: &[&str] = &["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"];
const LEADS: &[&str] = &["Meanwhile,", "In related news,", "Historians note"];

struct Names {
    rng: ChaCha8Rng,
    used: BTreeSet<String>,
}

impl Names {
    fn word(&mut self) -> String {
        loop {
            let n = self.rng.random_range(2..=3);
            let w: String = (0..n).map(|_| *SYLLABLES.choose(&mut self.rng).expect("nonempty")).collect();
            if self.used.insert(w.clone()) {
                let mut c = w.chars();
                let first = c.next().expect("nonempty").to_ascii_uppercase();
                return std::iter::once(first).chain(c).collect();
            }
        }
    }

    fn person(&mut self) -> String {
        format!("{} {}", self.word(), self.word())
    }
}

struct Fact {
    question: String,
    answer: String,
    near_misses: [String; 2],
}

fn make_fact(names: &mut Names, kind: usize) -> Fact {
    let year = names.rng.random_range(1700..1990);
    let topic = *TOPICS.choose(&mut names.rng).expect("nonempty");
    match kind % 5 {
        0 => {
            let org = format!("{} {}", names.word(), ORG_KINDS.choose(&mut names.rng).expect("nonempty"));
            let person = names.person();
            let city = names.word();
            Fact {
                question: format!("Who founded the {org}?"),
                answer: format!("The {org} was founded by {person} in {year}."),
                near_misses: [
                    format!("The {org} opened a new hall in {city} last spring."),
                    format!("Members of the {org} {} {topic} on {}.", VERBS.choose(&mut names.rng).unwrap(), DAYS.choose(&mut names.rng).unwrap()),
                ],
            }
        }
        1 => {
            let person = names.person();
            let city = names.word();
            Fact {
                question: format!("Where was {person} born?"),
                answer: format!("{person} was born in {city} in {year}."),
                near_misses: [
                    format!("{person} spoke to reporters about {topic} on {}.", DAYS.choose(&mut names.rng).unwrap()),
                    format!("A portrait of {person} hangs in the town library."),
                ],
            }
        }
        2 => {
            let device = format!("{} {}", names.word().to_lowercase(), DEVICES.choose(&mut names.rng).unwrap());
            let person = names.person();
            let city = names.word();
            Fact {
                question: format!("Who invented the {device}?"),
                answer: format!("The {device} was invented by {person} in {year}."),
                near_misses: [
                    format!("Sales of the {device} rose sharply in {city} this year."),
                    format!("Critics said the {device} was too expensive to repair."),
                ],
            }
        }
        3 => {
            let country = names.word();
            let other = names.word();
            let city = names.word();
            let pop = names.rng.random_range(40..900);
            Fact {
                question: format!("What is the capital of {country}?"),
                answer: format!("The capital of {country} is {city}, home to {pop} thousand people."),
                near_misses: [
                    format!("{country} signed a trade agreement with {other} in {year}."),
                    format!("Heavy rain caused flooding across {country} on {}.", DAYS.choose(&mut names.rng).unwrap()),
                ],
            }
        }
        _ => {
            let mountain = names.word();
            let valley = names.word();
            let height = names.rng.random_range(1200..8800);
            Fact {
                question: format!("How tall is Mount {mountain}?"),
                answer: format!("Mount {mountain} stands {height} meters tall above the {valley} valley."),
                near_misses: [
                    format!("Climbers returned from Mount {mountain} after a week of storms."),
                    format!("A new trail to Mount {mountain} will open in {year}."),
                ],
            }
        }
    }
}

fn filler(names: &mut Names) -> String {
    let rng = &mut names.rng;
    format!(
        "{} {} {} on {}.",
        SUBJECTS.choose(rng).unwrap(),
        VERBS.choose(rng).unwrap(),
        TOPICS.choose(rng).unwrap(),
        DAYS.choose(rng).unwrap()
    )
}

/// Dataset-style tokenization: punctuation split into separate tokens.
pub fn dataset_style(sentence: &str) -> String {
    let mut out = String::with_capacity(sentence.len() + 8);
    for c in sentence.chars() {
        if matches!(c, ',' | '.' | '?' | '!' | ':' | ';') {
            out.push(' ');
            out.push(c);
        } else {
            out.push(c);
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn annotate(split: SplitName, prefix: &str, facts: &[(Fact, Vec<String>)]) -> DatasetSplit {
    let pairs = facts.iter().enumerate().flat_map(|(i, (f, fillers))| {
        let qid = format!("{prefix}{:03}", i + 1);
        let question = dataset_style(&f.question);
        let rows = std::iter::once((f.answer.clone(), 1))
            .chain(f.near_misses.iter().map(|s| (s.clone(), 0)))
            .chain(fillers.iter().map(|s| (s.clone(), 0)));
        rows.map(move |(c, label)| QAPair {
            qid: qid.clone(),
            question: question.clone(),
            candidate: dataset_style(&c),
            label,
        })
        .collect::<Vec<_>>()
    });
    DatasetSplit::from_pairs(split, pairs)
}

fn facts(names: &mut Names, count: usize, offset: usize) -> Vec<(Fact, Vec<String>)> {
    (0..count)
        .map(|i| {
            let f = make_fact(names, i + offset);
            let fillers = (0..3).map(|_| filler(names)).collect();
            (f, fillers)
        })
        .collect()
}

pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut names = Names { rng: ChaCha8Rng::seed_from_u64(config.seed), used: BTreeSet::new() };
    let test = facts(&mut names, config.test_questions, 0);
    let train = facts(&mut names, config.train_questions, 1);
    let dev = facts(&mut names, config.dev_questions, 2);

    let mut bodies: Vec<Vec<String>> = (0..config.documents)
        .map(|_| {
            let n = names.rng.random_range(4..=9);
            (0..n).map(|_| filler(&mut names)).collect()
        })
        .collect();
    let mut plant = |names: &mut Names, sentence: String| {
        let d = names.rng.random_range(0..bodies.len());
        let at = names.rng.random_range(0..=bodies[d].len());
        bodies[d].insert(at, sentence);
    };
    if config.documents > 0 {
        for (f, _) in &test {
            let lead = *LEADS.choose(&mut names.rng).unwrap();
            plant(&mut names, f.answer.clone());
            plant(&mut names, format!("{lead} {}", f.answer));
            for nm in &f.near_misses {
                plant(&mut names, nm.clone());
            }
        }
    }

    let documents = bodies
        .into_iter()
        .enumerate()
        .map(|(i, sentences)| Document { id: format!("SYN{:04}", i + 1), text: sentences.join(" ") })
        .collect();
    let questions = test
        .iter()
        .enumerate()
        .map(|(i, (f, _))| Question { id: format!("S{:03}", i + 1), text: f.question.clone() })
        .collect();
    SyntheticCorpus {
        documents,
        questions,
        train: annotate(SplitName::Train, "T", &train),
        dev: annotate(SplitName::Dev, "D", &dev),
        test: annotate(SplitName::Test, "S", &test),
    }
}

impl SyntheticCorpus {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&self.documents, &dir.join(DOCUMENTS_FILE))?;
        let q = dir.join(QUESTIONS_FILE);
        std::fs::write(&q, format_questions(&self.questions)).map_err(|e| Error::io(&q, e))?;
        write_trecqa(&self.train, &dir.join(TRAIN_FILE))?;
        write_trecqa(&self.dev, &dir.join(DEV_FILE))?;
        write_trecqa(&self.test, &dir.join(TEST_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            documents: read_documents(&dir.join(DOCUMENTS_FILE))?,
            questions: read_questions(&dir.join(QUESTIONS_FILE))?,
            train: load_trecqa(&dir.join(TRAIN_FILE), SplitName::Train)?,
            dev: load_trecqa(&dir.join(DEV_FILE), SplitName::Dev)?,
            test: load_trecqa(&dir.join(TEST_FILE), SplitName::Test)?,
        })
    }
}

/// Path of the bundled copy of the default corpus.
pub fn bundled_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("synthetic")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_style_splits_punctuation() {
        assert_eq!(dataset_style("Hi, there: x.y end."), "Hi , there : x .y end .");
    }

    #[test]
    fn shape() {
        let c = generate(&SyntheticConfig::default());
        assert_eq!((c.documents.len(), c.questions.len()), (200, 20));
        assert_eq!(c.test.stats().questions, 20);
        assert_eq!(c.test.stats().positives, 20);
        assert_eq!(c.train.stats().questions, 60);
    }
}

use proptest::prelude::*;
use qa_core::data_io::{
    load_trecqa, read_qrels, read_run, write_qrels, write_run, write_trecqa, DatasetSplit, QAPair, RunEntry, RunFile,
    SplitName,
};
use qa_core::judgments::{JudgmentStore, Relevance};

fn run() -> impl Strategy<Value = RunFile> {
    prop::collection::vec(prop::collection::vec(0u32..2_000_000, 1..6), 0..5).prop_map(|questions| {
        let mut entries = Vec::new();
        for (q, mut scores) in questions.into_iter().enumerate() {
            scores.sort_unstable_by(|a, b| b.cmp(a));
            for (i, s) in scores.into_iter().enumerate() {
                entries.push(RunEntry {
                    qid: format!("q{q}"),
                    key: format!("doc{q}x{i}#{i}"),
                    rank: i + 1,
                    // Six-decimal values survive the text format exactly.
                    score: (s as f64 - 1_000_000.0) / 1e6,
                    tag: "idf".into(),
                });
            }
        }
        RunFile::new(entries).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn run_round_trip(run in run()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.txt");
        write_run(&run, &path).unwrap();
        prop_assert_eq!(read_run(&path).unwrap(), run);
    }

    #[test]
    fn qrels_round_trip(labels in prop::collection::btree_map(("q[0-9]", "d[0-9]{1,3}#[0-9]"), any::<bool>(), 0..30)) {
        let mut store = JudgmentStore::new();
        for ((q, k), rel) in &labels {
            store.insert(q, k, if *rel { Relevance::Relevant } else { Relevance::Nonrelevant });
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qrels.txt");
        write_qrels(&store, &path).unwrap();
        prop_assert_eq!(read_qrels(&path).unwrap(), store);
    }

    #[test]
    fn dataset_reload_idempotent(rows in prop::collection::vec(("q[0-3]", "[A-Za-z ,.]{0,10}[a-z]", 0u8..2), 0..25)) {
        let split = DatasetSplit::from_pairs(
            SplitName::Dev,
            rows.into_iter().map(|(q, c, l)| QAPair { qid: q, question: "What is it ?".into(), candidate: c, label: l }),
        );
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        write_trecqa(&split, &a).unwrap();
        let once = load_trecqa(&a, SplitName::Dev).unwrap();
        write_trecqa(&once, &b).unwrap();
        let twice = load_trecqa(&b, SplitName::Dev).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.stats(), split.stats());
    }
}

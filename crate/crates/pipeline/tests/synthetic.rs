use std::path::Path;

use qa_core::index::{Bm25Params, InvertedIndex};
use qa_core::judgments::{transfer, Judgment, TransferConfig};
use qa_core::StopwordList;
use qa_pipeline::synthetic::{bundled_dir, generate, SyntheticConfig, SyntheticCorpus, DOCUMENTS_FILE};
use qa_pipeline::{Pipeline, PipelineConfig};

/// Regenerate with `QA_BLESS=1 cargo test -p qa-pipeline --test synthetic`.
#[test]
fn bundled_fixture_matches_generator() {
    let fresh = generate(&SyntheticConfig::default());
    let dir = bundled_dir();
    if std::env::var_os("QA_BLESS").is_some() {
        fresh.write(&dir).unwrap();
    }
    let tmp = tempfile::tempdir().unwrap();
    fresh.write(tmp.path()).unwrap();
    for name in std::fs::read_dir(tmp.path()).unwrap() {
        let name = name.unwrap().file_name();
        let want = std::fs::read(tmp.path().join(&name)).unwrap();
        let got = std::fs::read(dir.join(&name)).unwrap_or_default();
        assert!(want == got, "bundled {name:?} differs from the generator");
    }
    assert_eq!(SyntheticCorpus::load(&dir).unwrap(), fresh);
}

#[test]
fn generation_is_seeded() {
    let a = generate(&SyntheticConfig::default());
    assert_eq!(a, generate(&SyntheticConfig::default()));
    let b = generate(&SyntheticConfig { seed: 7, ..Default::default() });
    assert_ne!(a.documents, b.documents);
}

#[test]
fn planted_answers_are_retrieved_and_transfer_as_relevant() {
    let c = SyntheticCorpus::load(&bundled_dir()).unwrap();
    assert!(Path::new(&bundled_dir().join(DOCUMENTS_FILE)).exists());
    let index = InvertedIndex::build(c.documents.iter().map(|d| (d.id.as_str(), d.text.as_str())), Bm25Params::default()).unwrap();
    let sw = StopwordList::bundled();
    let p = Pipeline::new(&index, &sw, PipelineConfig::default(), None).unwrap();
    for q in &c.questions {
        let pool = p.pooled_sentences(q, 50).unwrap();
        let out = transfer(&pool, &c.test, TransferConfig::default());
        // Verbatim and lead-in copies of the answer.
        assert_eq!(out.store.num_relevant(&q.id), 2, "{}", q.id);
        assert!(out.store.num_nonrelevant(&q.id) >= 2, "{}", q.id);
        let top = p.run_question(q).unwrap();
        let judged: Vec<Judgment> = top.keys().iter().map(|k| out.store.get(&q.id, k)).collect();
        assert!(judged.contains(&Judgment::Relevant), "{}: {judged:?}", q.id);
    }
}

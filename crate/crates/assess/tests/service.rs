mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{kappa_from_table, new_session, pattern, verdict_for, TAG_A, TAG_B};
use qa_assess::results::Counts;
use qa_assess::service::draw_side_map;
use qa_assess::types::{resolve, Side, Verdict};
use qa_assess::{AssessService, Error};
use qa_core::stats::{sign_test_binomial, Sidedness};

fn journal() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    (dir, path)
}

/// Smallest and largest counts c with P(X < c) <= 0.005 and P(X > c) <= 0.005
/// for X ~ Bin(n, 1/2).
fn binomial_99_bounds(n: usize) -> (usize, usize) {
    let mut pmf = vec![0.5f64.powi(n as i32)];
    for k in 0..n {
        pmf.push(pmf[k] * (n - k) as f64 / (k + 1) as f64);
    }
    let mut lo = 0;
    let mut tail = 0.0;
    while tail + pmf[lo] <= 0.005 {
        tail += pmf[lo];
        lo += 1;
    }
    (lo, n - lo)
}

#[test]
fn side_map_is_seeded_and_balanced() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let s1 = svc.create_session(new_session(100, 7, true)).unwrap();
    let s2 = svc.create_session(new_session(100, 7, true)).unwrap();
    assert_ne!(s1.id, s2.id);
    assert_eq!(s1.side_map, s2.side_map);
    drop(svc);
    let reopened = AssessService::open(&path).unwrap();
    assert_eq!(reopened.session(&s1.id).unwrap().side_map, s1.side_map);

    let (lo, hi) = binomial_99_bounds(100);
    assert_eq!((lo, hi), (37, 63));
    let left = |m: &BTreeMap<String, Side>| m.values().filter(|s| **s == Side::ALeft).count();
    assert!((lo..=hi).contains(&left(&s1.side_map)));
    let ids: Vec<String> = (0..100).map(|i| format!("q{i:03}")).collect();
    let outside = (0..50u64)
        .filter(|seed| !(lo..=hi).contains(&left(&draw_side_map(ids.iter().map(String::as_str), *seed))))
        .count();
    // Expected 0.5 of 50 seeds; 4 or more has probability below 0.002.
    assert!(outside <= 3, "{outside} of 50 seeds outside the 99% band");
}

#[test]
fn creation_errors() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let mut s = new_session(3, 1, true);
    s.run_b.entries.retain(|e| e.qid != "q002");
    assert!(matches!(svc.create_session(s), Err(Error::InvalidRequest(_))));
    let mut s = new_session(3, 1, true);
    s.k = 0;
    assert!(svc.create_session(s).is_err());
    let mut s = new_session(3, 1, true);
    s.sentences.clear();
    assert!(svc.create_session(s).is_err());
    let mut s = new_session(3, 1, true);
    s.questions.remove("q001");
    assert!(svc.create_session(s).is_err());
    assert!(svc.session_ids().is_empty());
}

#[test]
fn items_follow_each_judges_order_and_skip_judged() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let s = svc.create_session(new_session(20, 3, true)).unwrap();
    assert_eq!(s.questions[0].a.len(), 5);
    let order1 = svc.judge_order(&s.id, "j1").unwrap();
    let order2 = svc.judge_order(&s.id, "j2").unwrap();
    assert_ne!(order1, order2);
    assert_eq!(order1, svc.judge_order(&s.id, "j1").unwrap());

    let first = svc.next_item(&s.id, "j1").unwrap();
    let item = first.item.unwrap();
    assert_eq!(item.question_id, order1[0]);
    let q = s.question(&item.question_id).unwrap();
    let a: Vec<String> = q.a.iter().map(|x| x.text.clone()).collect();
    match s.side_map[&item.question_id] {
        Side::ALeft => assert_eq!(item.left, a),
        Side::ARight => assert_eq!(item.right, a),
    }

    svc.submit_judgment(&s.id, "j1", &order1[1], "Both").unwrap();
    svc.submit_judgment(&s.id, "j1", &order1[0], "Left").unwrap();
    let next = svc.next_item(&s.id, "j1").unwrap();
    assert_eq!(next.item.unwrap().question_id, order1[2]);
    assert_eq!((next.progress.done, next.progress.total), (2, 20));
    for q in &order1 {
        svc.submit_judgment(&s.id, "j1", q, "Neither").unwrap();
    }
    let done = svc.next_item(&s.id, "j1").unwrap();
    assert!(done.done && done.item.is_none());
    assert_eq!(done.progress.done, 20);
    assert_eq!(svc.progress(&s.id).unwrap().judges["j1"], 20);

    let fixed = svc.create_session(new_session(20, 3, false)).unwrap();
    let sorted: Vec<String> = fixed.questions.iter().map(|q| q.id.clone()).collect();
    assert_eq!(svc.judge_order(&fixed.id, "j1").unwrap(), sorted);
    assert_eq!(svc.judge_order(&fixed.id, "j2").unwrap(), sorted);
}

#[test]
fn verdict_validation_and_overwrite_audit() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let s = svc.create_session(new_session(4, 1, true)).unwrap();
    assert!(matches!(svc.submit_judgment(&s.id, "j", "q000", "Maybe"), Err(Error::InvalidVerdict(_))));
    assert!(matches!(svc.submit_judgment(&s.id, "j", "nope", "Left"), Err(Error::UnknownQuestion(_))));
    assert!(matches!(svc.submit_judgment("missing", "j", "q000", "Left"), Err(Error::UnknownSession(_))));
    assert!(matches!(svc.next_item("missing", "j"), Err(Error::UnknownSession(_))));
    assert!(svc.submit_judgment(&s.id, " ", "q000", "Left").is_err());
    assert!(svc.audit_trail(&s.id).unwrap().is_empty());

    let first = svc.submit_judgment(&s.id, "j", "q000", "Left").unwrap();
    let second = svc.submit_judgment(&s.id, "j", "q000", "Right").unwrap();
    assert!(!first.replaced && second.replaced);
    assert!(second.seq > first.seq);
    assert_eq!(second.progress.done, 1);
    assert_eq!(svc.verdicts(&s.id).unwrap(), [("j".to_string(), "q000".to_string(), Verdict::Right)]);
    let trail = svc.audit_trail(&s.id).unwrap();
    assert_eq!(trail.iter().map(|r| r.verdict).collect::<Vec<_>>(), [Verdict::Left, Verdict::Right]);
}

#[test]
fn acknowledged_judgments_survive_restart() {
    let (_d, path) = journal();
    let id;
    {
        let svc = AssessService::open(&path).unwrap();
        id = svc.create_session(new_session(5, 9, true)).unwrap().id.clone();
        svc.submit_judgment(&id, "j1", "q000", "Left").unwrap();
        svc.submit_judgment(&id, "j1", "q001", "Neither").unwrap();
        svc.submit_judgment(&id, "j1", "q001", "Both").unwrap();
        // Dropped without any shutdown step.
    }
    // A crash in the middle of an unacknowledged write leaves a torn line.
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"event\":\"judgment\",\"seq\":99,\"sess").unwrap();
    drop(f);

    let svc = AssessService::open(&path).unwrap();
    let verdicts = svc.verdicts(&id).unwrap();
    assert_eq!(verdicts.len(), 2);
    assert!(verdicts.contains(&("j1".into(), "q001".into(), Verdict::Both)));
    let ack = svc.submit_judgment(&id, "j2", "q003", "Right").unwrap();
    assert_eq!(ack.seq, 3);
    drop(svc);
    let svc = AssessService::open(&path).unwrap();
    assert_eq!(svc.verdicts(&id).unwrap().len(), 3);
    assert_eq!(svc.audit_trail(&id).unwrap().len(), 4);

    let content = std::fs::read_to_string(&path).unwrap();
    let corrupt = content.replacen("\"seq\":1", "\"seq\":\"x\"", 1);
    std::fs::write(&path, corrupt).unwrap();
    assert!(matches!(AssessService::open(&path), Err(Error::Journal { .. })));
}

#[test]
fn judge_patterns_give_expected_counts_tests_and_kappa() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let s = svc.create_session(new_session(100, 2017, true)).unwrap();
    let ids: Vec<String> = s.questions.iter().map(|q| q.id.clone()).collect();
    let judge1 = pattern(30, 17, 14, 39);
    let mut judge2 = pattern(39, 18, 11, 32);
    // Interleave so the two judges disagree on some questions.
    judge2.rotate_left(7);
    for (q, (o1, o2)) in ids.iter().zip(judge1.iter().zip(&judge2)) {
        let side = s.side_map[q];
        svc.submit_judgment(&s.id, "judge1", q, verdict_for(*o1, side).as_str()).unwrap();
        svc.submit_judgment(&s.id, "judge2", q, verdict_for(*o2, side).as_str()).unwrap();
    }
    let r = svc.results(&s.id).unwrap();
    assert_eq!((r.condition_a.as_str(), r.condition_b.as_str()), (TAG_A, TAG_B));
    let c1 = r.judges[0].counts;
    let c2 = r.judges[1].counts;
    assert_eq!(c1, Counts { prefer_a: 30, prefer_b: 17, both: 14, neither: 39 });
    assert_eq!(c2, Counts { prefer_a: 39, prefer_b: 18, both: 11, neither: 32 });
    assert_eq!(r.judges[0].binomial_p, sign_test_binomial(30, 17, 53, Sidedness::TwoSided));
    assert!(r.judges[1].binomial_p < 0.05 && r.judges[0].binomial_p > 0.05);
    assert_eq!(r.judges[0].wilcoxon.nonzero, 47);
    assert!(!r.judges[0].degenerate);

    let k = r.agreement[0].kappa.unwrap().kappa.unwrap();
    assert_eq!(r.agreement[0].items, 100);
    assert!((k - kappa_from_table(&judge1, &judge2)).abs() < 1e-12, "{k}");
}

#[test]
fn degenerate_and_identical_judges() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let s = svc.create_session(new_session(6, 5, true)).unwrap();
    assert!(svc.results(&s.id).unwrap().judges.is_empty());
    for q in &s.questions {
        svc.submit_judgment(&s.id, "solo", &q.id, "Both").unwrap();
    }
    let r = svc.results(&s.id).unwrap();
    assert_eq!(r.judges[0].counts, Counts { prefer_a: 0, prefer_b: 0, both: 6, neither: 0 });
    assert!(r.judges[0].degenerate);
    assert_eq!(r.judges[0].binomial_p, 1.0);

    let t = svc.create_session(new_session(8, 5, true)).unwrap();
    for (i, q) in t.questions.iter().enumerate() {
        let v = ["Left", "Right", "Both", "Neither"][i % 4];
        svc.submit_judgment(&t.id, "x", &q.id, v).unwrap();
        svc.submit_judgment(&t.id, "y", &q.id, v).unwrap();
    }
    let r = svc.results(&t.id).unwrap();
    assert_eq!(r.agreement[0].kappa.unwrap().kappa, Some(1.0));
}

#[test]
fn results_equal_an_independent_recount() {
    let (_d, path) = journal();
    let svc = AssessService::open(&path).unwrap();
    let s = svc.create_session(new_session(40, 11, true)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let verdicts = ["Left", "Right", "Both", "Neither"];
    for _ in 0..300 {
        let judge = ["a", "b", "c"][rng.random_range(0..3)];
        let q = &s.questions[rng.random_range(0..40)].id;
        svc.submit_judgment(&s.id, judge, q, verdicts[rng.random_range(0..4)]).unwrap();
    }
    // Last verdict per (judge, question) from the raw journal, then unblind.
    let mut last: BTreeMap<(String, String), (u64, Verdict)> = BTreeMap::new();
    for r in svc.audit_trail(&s.id).unwrap() {
        let slot = last.entry((r.judge_id.clone(), r.question_id.clone())).or_insert((r.seq, r.verdict));
        if r.seq >= slot.0 {
            *slot = (r.seq, r.verdict);
        }
    }
    let mut recount: BTreeMap<String, Counts> = BTreeMap::new();
    for ((judge, q), (_, v)) in &last {
        recount.entry(judge.clone()).or_default().add(resolve(*v, s.side_map[q]));
    }
    let report = svc.results(&s.id).unwrap();
    let got: BTreeMap<String, Counts> = report.judges.iter().map(|j| (j.judge_id.clone(), j.counts)).collect();
    assert_eq!(got, recount);
    assert_eq!(report.agreement.len(), 3);
}

#[test]
fn concurrent_judges_are_all_journaled() {
    let (_d, path) = journal();
    let svc = Arc::new(AssessService::open(&path).unwrap());
    let s = svc.create_session(new_session(25, 1, true)).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|j| {
            let svc = svc.clone();
            let id = s.id.clone();
            let qs: Vec<String> = s.questions.iter().map(|q| q.id.clone()).collect();
            std::thread::spawn(move || {
                for q in qs {
                    svc.submit_judgment(&id, &format!("judge{j}"), &q, "Left").unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let mut seqs: Vec<u64> = svc.audit_trail(&s.id).unwrap().iter().map(|r| r.seq).collect();
    seqs.sort();
    assert_eq!(seqs, (0..100).collect::<Vec<_>>());
    drop(svc);
    let svc = AssessService::open(&path).unwrap();
    assert!(svc.progress(&s.id).unwrap().judges.values().all(|n| *n == 25));
}

mod common;

use common::oracle;
use proptest::prelude::*;
use qa_core::judgments::Judgment;
use qa_core::metrics::{average_precision, bpref, rbp, reciprocal_rank, RankedList};

fn to_label(j: Judgment) -> oracle::Label {
    match j {
        Judgment::Relevant => Some(true),
        Judgment::Nonrelevant => Some(false),
        Judgment::Unjudged => None,
    }
}

fn judgment() -> impl Strategy<Value = Judgment> {
    prop_oneof![Just(Judgment::Relevant), Just(Judgment::Nonrelevant), Just(Judgment::Unjudged)]
}

/// A ranked list plus unretrieved judged items, so R and N exceed what is in the list.
fn instance() -> impl Strategy<Value = RankedList> {
    (prop::collection::vec(judgment(), 0..=20), 0usize..4, 0usize..4).prop_map(|(js, extra_r, extra_n)| {
        let r = js.iter().filter(|j| **j == Judgment::Relevant).count() + extra_r;
        let n = js.iter().filter(|j| **j == Judgment::Nonrelevant).count() + extra_n;
        RankedList::from_judgments(js, r, n)
    })
}

fn labels(list: &RankedList) -> Vec<oracle::Label> {
    list.judgments.iter().copied().map(to_label).collect()
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_bruteforce_oracles(list in instance(), p in 0.05f64..0.95, depth in prop::option::of(0usize..25)) {
        let l = labels(&list);
        let (r, n) = (list.num_relevant, list.num_nonrelevant);
        prop_assert!(close(average_precision(&list), oracle::ap(&l, r)));
        prop_assert!(close(reciprocal_rank(&list), oracle::rr(&l, r)));
        prop_assert!(close(bpref(&list), oracle::bpref(&l, r, n)));
        let got = rbp(&list, p, depth).unwrap();
        let (base, residual) = oracle::rbp(&l, p, depth.unwrap_or(l.len()));
        prop_assert!((got.base - base).abs() <= 1e-9);
        prop_assert!((got.residual - residual).abs() <= 1e-9);
        prop_assert!(got.base + got.residual <= 1.0 + 1e-12);
        for v in [average_precision(&list), reciprocal_rank(&list), bpref(&list)].into_iter().flatten() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn bpref_ignores_inserted_unjudged(list in instance(), positions in prop::collection::vec(any::<prop::sample::Index>(), 1..5)) {
        let before = bpref(&list);
        let mut js = list.judgments.clone();
        for pos in positions {
            let at = pos.index(js.len() + 1);
            js.insert(at, Judgment::Unjudged);
        }
        let after = bpref(&RankedList::from_judgments(js, list.num_relevant, list.num_nonrelevant));
        prop_assert_eq!(before, after);
    }

    #[test]
    fn tail_permutation_keeps_map_and_mrr(list in instance(), seed in any::<u64>()) {
        let Some(last) = list.judgments.iter().rposition(|j| *j == Judgment::Relevant) else {
            return Ok(());
        };
        let mut js = list.judgments.clone();
        let tail = &mut js[last + 1..];
        // Deterministic shuffle of the tail without pulling in an RNG.
        let mut s = seed;
        for i in (1..tail.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            tail.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted = RankedList::from_judgments(js, list.num_relevant, list.num_nonrelevant);
        prop_assert_eq!(average_precision(&list), average_precision(&permuted));
        prop_assert_eq!(reciprocal_rank(&list), reciprocal_rank(&permuted));
    }

    #[test]
    fn judging_an_item_shrinks_residual(list in instance(), pick in any::<prop::sample::Index>(), rel in any::<bool>(), p in 0.2f64..0.95) {
        let unjudged: Vec<usize> = (0..list.judgments.len())
            .filter(|i| list.judgments[*i] == Judgment::Unjudged)
            .collect();
        if unjudged.is_empty() {
            return Ok(());
        }
        let at = unjudged[pick.index(unjudged.len())];
        let mut js = list.judgments.clone();
        js[at] = if rel { Judgment::Relevant } else { Judgment::Nonrelevant };
        let judged = RankedList::from_judgments(js, list.num_relevant + rel as usize, list.num_nonrelevant);
        let before = rbp(&list, p, None).unwrap();
        let after = rbp(&judged, p, None).unwrap();
        // With p >= 0.2 and at most 20 ranks the removed weight stays well
        // above the rounding error of the residual sum.
        prop_assert!(after.residual < before.residual);
        let weight = (1.0 - p) * p.powi(at as i32);
        prop_assert!((before.residual - after.residual - weight).abs() < 1e-12);
    }

    #[test]
    fn map_equals_mrr_for_single_relevant(js in prop::collection::vec(prop_oneof![Just(Judgment::Nonrelevant), Just(Judgment::Unjudged)], 0..20), at in any::<prop::sample::Index>(), retrieved in any::<bool>()) {
        let mut js = js;
        if retrieved {
            js.insert(at.index(js.len() + 1), Judgment::Relevant);
        }
        let list = RankedList::from_judgments(js, 1, 3);
        prop_assert_eq!(average_precision(&list), reciprocal_rank(&list));
    }
}

#[test]
fn hand_examples_against_oracle() {
    use Judgment::{Nonrelevant as N, Relevant as R, Unjudged as U};
    let l = RankedList::from_judgments(vec![R, N, R], 2, 1);
    assert!((average_precision(&l).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    let r = rbp(&RankedList::from_judgments(vec![R, N, R], 2, 1), 0.5, Some(60)).unwrap();
    assert!((r.base - 0.625).abs() < 1e-15);
    let empty = rbp(&RankedList::from_judgments(vec![], 0, 0), 0.5, Some(0)).unwrap();
    assert_eq!((empty.base, empty.residual), (0.0, 1.0));
    let b = bpref(&RankedList::from_judgments(vec![N, U, R, R], 2, 1)).unwrap();
    assert_eq!(b, 0.0);
    assert_eq!(bpref(&RankedList::from_judgments(vec![N, R, R], 2, 1)).unwrap(), 0.0);
}

mod common;

use common::{random_batch, random_model, random_vocab};
use proptest::prelude::*;
use qa_cnn::model::{Arm, Embeddings, Model, ModelConfig, PairInput};

/// Straight-line forward pass written from the model definition: explicit
/// index arithmetic for padding, no shared helpers.
fn reference_probs(c: &ModelConfig, p: &[f64], emb: &Embeddings<f64>, x: &PairInput) -> [f64; 2] {
    let (d, w, m, h) = (c.dim, c.width, c.maps, c.hidden);
    let arm = |filters_at: usize, bias_at: usize, ids: &[u32]| -> Vec<f64> {
        let n = ids.len() as isize;
        let mut out = vec![0.0f64; m];
        for i in 0..m {
            let mut best = f64::NEG_INFINITY;
            // Window j covers sentence positions j-(w-1) ..= j.
            for j in 0..(n + w as isize - 1) {
                let mut v = p[bias_at + i];
                for k in 0..w {
                    let t = j - (w as isize - 1) + k as isize;
                    if t < 0 || t >= n {
                        continue;
                    }
                    let row = emb.row(ids[t as usize]);
                    for e in 0..d {
                        v += p[filters_at + i * w * d + k * d + e] * row[e];
                    }
                }
                best = best.max(v);
            }
            out[i] = best.max(0.0);
        }
        out
    };
    let fw = m * w * d;
    let xq = arm(0, fw, &x.question);
    let xa = arm(fw + m, 2 * fw + m, &x.answer);
    let mut joined = xq;
    joined.extend(xa);
    joined.extend(x.features);
    let hw = 2 * fw + 2 * m;
    let hb = hw + h * joined.len();
    let hidden: Vec<f64> = (0..h)
        .map(|r| (p[hb + r] + (0..joined.len()).map(|k| p[hw + r * joined.len() + k] * joined[k]).sum::<f64>()).tanh())
        .collect();
    let ow = hb + h;
    let ob = ow + 2 * h;
    let z: Vec<f64> = (0..2).map(|r| p[ob + r] + (0..h).map(|k| p[ow + r * h + k] * hidden[k]).sum::<f64>()).collect();
    let e0 = 1.0 / (1.0 + (z[1] - z[0]).exp());
    [e0, 1.0 - e0]
}

#[test]
fn matches_reference_forward_seed_42() {
    let config = ModelConfig::with_shape(6, 3, 4, 7);
    let model = random_model(config, 42, 0.5);
    let vocab = random_vocab(6, 12, 42);
    for x in random_batch(12, 10, 42) {
        let got = model.forward(&vocab, &x).probs;
        let want = reference_probs(&config, model.params(), &vocab, &x);
        assert!((got[1] - want[1]).abs() < 1e-12, "{got:?} vs {want:?}");
        // Single precision agrees to float resolution.
        let f32_model: Model<f32> = model.cast();
        let got32 = f32_model.forward(&vocab.cast(), &x).probs;
        assert!((got32[1] - want[1]).abs() < 1e-5);
    }
}

#[test]
fn zero_model_scores_one_half() {
    let model = Model::<f32>::zeros(ModelConfig::with_shape(5, 3, 4, 6)).unwrap();
    let vocab = random_vocab(5, 8, 1).cast();
    for x in random_batch(8, 5, 3) {
        assert_eq!(model.forward(&vocab, &x).probs, [0.5, 0.5]);
    }
}

#[test]
fn default_shape() {
    let c = ModelConfig::default();
    assert_eq!((c.dim, c.width, c.maps, c.hidden, c.trainable_embeddings), (50, 5, 100, 204, false));
    assert_eq!(c.join_width(), 204);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn probabilities_normalized(seed in any::<u64>(), scale in 0.01f64..4.0) {
        let model: Model<f32> = random_model(ModelConfig::with_shape(4, 2, 3, 5), seed, scale).cast();
        let vocab = random_vocab(4, 10, seed ^ 1).cast();
        for x in random_batch(10, 4, seed ^ 2) {
            let p = model.forward(&vocab, &x).probs;
            prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&p[1]));
        }
    }

    #[test]
    fn arms_are_independent(seed in any::<u64>()) {
        let model = random_model(ModelConfig::with_shape(4, 3, 3, 5), seed, 1.0);
        let vocab = random_vocab(4, 10, seed ^ 7);
        let batch = random_batch(10, 2, seed ^ 9);
        let (x, y) = (&batch[0], &batch[1]);
        let swapped_answer = PairInput { answer: y.answer.clone(), ..x.clone() };
        let swapped_question = PairInput { question: y.question.clone(), ..x.clone() };
        let f = model.forward(&vocab, x);
        prop_assert_eq!(&f.q.x, &model.forward(&vocab, &swapped_answer).q.x);
        prop_assert_eq!(&f.a.x, &model.forward(&vocab, &swapped_question).a.x);
        prop_assert_eq!(&f.q.x, &model.arm_forward(Arm::Question, &vocab, &x.question).x);
    }

    #[test]
    fn repeating_a_sentence_never_lowers_width_one_maps(seed in any::<u64>(), len in 1usize..6) {
        let model = random_model(ModelConfig::with_shape(4, 1, 5, 3), seed, 1.0);
        let vocab = random_vocab(4, 10, seed);
        let ids: Vec<u32> = (0..len as u32).map(|i| (i * 7 + seed as u32) % 10).collect();
        let doubled: Vec<u32> = ids.iter().chain(&ids).copied().collect();
        let once = model.arm_forward(Arm::Answer, &vocab, &ids).x;
        let twice = model.arm_forward(Arm::Answer, &vocab, &doubled).x;
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!(b >= a);
        }
    }
}

#![allow(dead_code)]

use qa_cnn::model::{Embeddings, Model, ModelConfig, PairInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A model with every parameter (biases included) drawn from ±scale.
pub fn random_model(config: ModelConfig, seed: u64, scale: f64) -> Model<f64> {
    let mut m = Model::<f64>::zeros(config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in m.params_mut() {
        *p = rng.random_range(-scale..scale);
    }
    m.seed = seed;
    m
}

pub fn random_vocab(dim: usize, size: usize, seed: u64) -> Embeddings<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<String> = (0..size).map(|i| format!("w{i}")).collect();
    let data = (0..size * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Embeddings::from_rows(dim, tokens, data).unwrap()
}

pub fn random_batch(vocab_size: usize, n: usize, seed: u64) -> Vec<PairInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let ql = rng.random_range(1..5);
            let al = rng.random_range(1..8);
            PairInput {
                question: (0..ql).map(|_| rng.random_range(0..vocab_size as u32)).collect(),
                answer: (0..al).map(|_| rng.random_range(0..vocab_size as u32)).collect(),
                features: [rng.random(), rng.random(), rng.random(), rng.random()],
                label: rng.random_range(0..2),
            }
        })
        .collect()
}

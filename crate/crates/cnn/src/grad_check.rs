//! Analytic gradients against central finite differences, in double precision.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Arm, Embeddings, Model, ModelConfig, PairInput};
use crate::train::batch_gradient;

/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Index of the worst coordinate; embedding values follow the parameters.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

fn mean_loss(model: &Model<f64>, vocab: &Embeddings<f64>, batch: &[PairInput]) -> f64 {
    batch.iter().map(|ex| model.loss(vocab, ex)).sum::<f64>() / batch.len() as f64
}

/// Compare every coordinate (or a seeded sample of `limit` coordinates).
/// Embedding values are included when the model's embeddings are trainable.
pub fn grad_check(
    model: &Model<f64>,
    vocab: &Embeddings<f64>,
    batch: &[PairInput],
    epsilon: f64,
    limit: Option<(usize, u64)>,
) -> Result<GradCheckReport> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("grad check needs a nonempty batch".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let trainable = model.config.trainable_embeddings;
    let refs: Vec<&PairInput> = batch.iter().collect();
    let (_, grad) = batch_gradient(model, vocab, &refs, trainable);
    let n_params = model.params().len();
    let total = n_params + if trainable { vocab.data().len() } else { 0 };
    let coords: Vec<usize> = match limit {
        Some((k, seed)) if k < total => {
            let mut v = sample(&mut ChaCha8Rng::seed_from_u64(seed), total, k).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..total).collect(),
    };

    let mut m = model.clone();
    let mut v = vocab.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, analytic: 0.0, numeric: 0.0, checked: 0 };
    for &i in &coords {
        let analytic = if i < n_params {
            grad.params[i]
        } else {
            grad.embeddings.as_ref().expect("trainable gradient")[i - n_params]
        };
        let mut at = |delta: f64| {
            let slot = if i < n_params { &mut m.params_mut()[i] } else { &mut v.data_mut()[i - n_params] };
            let orig = *slot;
            *slot = orig + delta;
            let loss = mean_loss(&m, &v, batch);
            let slot = if i < n_params { &mut m.params_mut()[i] } else { &mut v.data_mut()[i - n_params] };
            *slot = orig;
            loss
        };
        let numeric = (at(epsilon) - at(-epsilon)) / (2.0 * epsilon);
        let rel = relative_error(analytic, numeric);
        report.checked += 1;
        if rel > report.max_rel_error || report.checked == 1 {
            report = GradCheckReport { max_rel_error: rel, worst_index: i, analytic, numeric, checked: report.checked };
        }
    }
    Ok(report)
}

/// Smallest distance from a nondifferentiable point a random problem may
/// have. Central differences straddling a kink disagree with the gradient.
pub const MIN_KINK_MARGIN: f64 = 1e-3;

/// Distance of the batch from the nearest kink: the smallest gap between
/// the best and second-best window of a max-pool, or between a pooled
/// pre-activation and the ReLU hinge at zero.
pub fn kink_margin(model: &Model<f64>, vocab: &Embeddings<f64>, batch: &[PairInput]) -> f64 {
    let c = &model.config;
    let span = c.width * c.dim;
    let mut margin = f64::INFINITY;
    for ex in batch {
        for (arm, ids) in [(Arm::Question, &ex.question), (Arm::Answer, &ex.answer)] {
            let cache = model.arm_forward(arm, vocab, ids);
            let (f, b) = model.layout().filters(arm);
            let (filters, bias) = (&model.params()[f], &model.params()[b]);
            let windows = ids.len() + c.width - 1;
            for i in 0..c.maps {
                margin = margin.min(cache.pre[i].abs());
                for j in (0..windows).filter(|j| *j != cache.argmax[i]) {
                    let window = &cache.padded[j * c.dim..j * c.dim + span];
                    let v: f64 = window.iter().zip(&filters[i * span..(i + 1) * span]).map(|(a, b)| a * b).sum::<f64>()
                        + bias[i];
                    margin = margin.min(cache.pre[i] - v);
                }
            }
        }
    }
    margin
}

/// One small random problem: dimension 4, filter width 1 to 3 by trial,
/// 3 maps, hidden width 5, embeddings trainable on odd trials, every
/// parameter drawn from ±0.5, a 9-word vocabulary and 6 random pairs.
/// Draws closer than [`MIN_KINK_MARGIN`] to a kink are discarded.
pub fn random_problem(trial: u64, seed: u64) -> Result<(Model<f64>, Embeddings<f64>, Vec<PairInput>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial));
    loop {
        let problem = draw_problem(trial, seed, &mut rng)?;
        if kink_margin(&problem.0, &problem.1, &problem.2) >= MIN_KINK_MARGIN {
            return Ok(problem);
        }
    }
}

fn draw_problem(trial: u64, seed: u64, rng: &mut ChaCha8Rng) -> Result<(Model<f64>, Embeddings<f64>, Vec<PairInput>)> {
    let mut config = ModelConfig::with_shape(4, 1 + (trial % 3) as usize, 3, 5);
    config.trainable_embeddings = trial % 2 == 1;
    let mut model = Model::<f64>::zeros(config)?;
    for p in model.params_mut() {
        *p = rng.random_range(-0.5..0.5);
    }
    model.seed = seed;
    let vocab_size = 9;
    let tokens = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let data = (0..vocab_size * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vocab = Embeddings::from_rows(4, tokens, data)?;
    let batch = (0..6)
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
        .collect();
    Ok((model, vocab, batch))
}

/// Run [`grad_check`] on `count` problems from [`random_problem`].
pub fn check_random_models(count: u64, seed: u64, epsilon: f64) -> Result<Vec<GradCheckReport>> {
    (0..count)
        .map(|trial| {
            let (model, vocab, batch) = random_problem(trial, seed)?;
            grad_check(&model, &vocab, &batch, epsilon, None)
        })
        .collect()
}



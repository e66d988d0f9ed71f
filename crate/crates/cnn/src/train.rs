//! Mini-batch training with Adam and early stopping on development MAP.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qa_core::data_io::{DatasetSplit, EmbeddingTable};
use qa_core::index::IdfSource;
use qa_core::judgments::Judgment;
use qa_core::metrics::{average_precision, RankedList};
use qa_core::text::StopwordList;

use crate::error::{Error, Result};
use crate::model::{example_loss, Embeddings, Gradient, Model, PairInput};
use crate::rerank::encode_pair;

/// Examples per work unit. Fixed so the gradient sum is associated the same
/// way regardless of thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epochs without a dev MAP improvement before stopping.
    pub patience: usize,
    pub embedding_trainable: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 42,
            patience: 5,
            embedding_trainable: false,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::InvalidArgument("epochs, batch size and patience must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad learning rate {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub dev_map: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_map: f64,
}

impl TrainLog {
    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entry serializes") + "\n")
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// A split encoded against one vocabulary, grouped by question.
pub struct EncodedSplit {
    pub groups: Vec<Vec<PairInput>>,
}

impl EncodedSplit {
    pub fn encode<F: crate::kernel::Real>(
        split: &DatasetSplit,
        model: &Model<F>,
        table: &EmbeddingTable,
        vocab: &mut Embeddings<F>,
        stopwords: &StopwordList,
        idf: &impl IdfSource,
    ) -> Self {
        let groups = split
            .groups
            .iter()
            .map(|g| {
                g.candidates
                    .iter()
                    .map(|c| encode_pair(model, table, vocab, &g.question, &c.sentence, c.label, stopwords, idf))
                    .collect()
            })
            .collect();
        Self { groups }
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean average precision of `model` over grouped examples. Candidates are
/// ranked by score, ties by position; groups without positives are skipped.
pub fn map_score(model: &Model<f32>, vocab: &Embeddings<f32>, split: &EncodedSplit) -> f64 {
    let aps: Vec<Option<f64>> = split
        .groups
        .par_iter()
        .map(|g| {
            let mut scored: Vec<(f64, usize)> =
                g.iter().enumerate().map(|(i, p)| (model.forward(vocab, p).probs[1], i)).collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let judgments: Vec<Judgment> = scored
                .iter()
                .map(|(_, i)| if g[*i].label == 1 { Judgment::Relevant } else { Judgment::Nonrelevant })
                .collect();
            let r = g.iter().filter(|p| p.label == 1).count();
            average_precision(&RankedList::from_judgments(judgments, r, g.len() - r))
        })
        .collect();
    let aps: Vec<f64> = aps.into_iter().flatten().collect();
    if aps.is_empty() {
        0.0
    } else {
        aps.iter().sum::<f64>() / aps.len() as f64
    }
}

struct Adam {
    m: Vec<f32>,
    v: Vec<f32>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f32], grad: &[f32], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1 as f32, cfg.beta2 as f32);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let lr = cfg.learning_rate as f32;
        let eps = cfg.epsilon as f32;
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// Loss and gradient of the mean cross-entropy over `batch`.
pub fn batch_gradient<F: crate::kernel::Real>(
    model: &Model<F>,
    vocab: &Embeddings<F>,
    batch: &[&PairInput],
    trainable: bool,
) -> (f64, Gradient<F>) {
    let n = model.params().len();
    let emb = trainable.then(|| vocab.data().len());
    let weight = 1.0 / batch.len() as f64;
    let parts: Vec<(f64, Gradient<F>)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = Gradient::zeros(n, emb);
            let mut loss = 0.0;
            for ex in chunk {
                let f = model.forward(vocab, ex);
                loss += example_loss(&f, ex.label);
                model.backward(ex, &f, weight, &mut g);
            }
            (loss, g)
        })
        .collect();
    let mut total = Gradient::zeros(n, emb);
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        total.add(g);
    }
    (loss * weight, total)
}

/// Train from `init`, returning the parameters of the best dev epoch.
#[allow(clippy::too_many_arguments)]
pub fn train(
    init: Model<f32>,
    train: &DatasetSplit,
    dev: &DatasetSplit,
    config: &TrainConfig,
    table: &EmbeddingTable,
    idf: &(impl IdfSource + Sync),
    stopwords: &StopwordList,
) -> Result<(Model<f32>, TrainLog)> {
    config.validate()?;
    if train.groups.is_empty() || dev.groups.is_empty() {
        return Err(Error::InvalidArgument("training and development splits must be nonempty".into()));
    }
    if table.dim() != init.config.dim {
        return Err(Error::Shape(format!(
            "embedding table dim {} does not match model dim {}",
            table.dim(),
            init.config.dim
        )));
    }
    let mut model = init;
    model.config.trainable_embeddings = config.embedding_trainable;
    let mut vocab = Embeddings::new(model.config.dim);
    let train_set = EncodedSplit::encode(train, &model, table, &mut vocab, stopwords, idf);
    let dev_set = EncodedSplit::encode(dev, &model, table, &mut vocab, stopwords, idf);
    let examples: Vec<&PairInput> = train_set.groups.iter().flatten().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(model.params().len());
    let mut adam_emb = config.embedding_trainable.then(|| Adam::new(vocab.data().len()));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut log = TrainLog { best_dev_map: f64::NEG_INFINITY, ..Default::default() };
    let mut best = (model.clone(), vocab.clone());
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch_idx in order.chunks(config.batch_size) {
            let batch: Vec<&PairInput> = batch_idx.iter().map(|i| examples[*i]).collect();
            let (loss, grad) = batch_gradient(&model, &vocab, &batch, config.embedding_trainable);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * batch.len() as f64;
            adam.step(model.params_mut(), &grad.params, config);
            if let (Some(a), Some(g)) = (&mut adam_emb, &grad.embeddings) {
                a.step(vocab.data_mut(), g, config);
            }
        }
        let loss = loss_sum / examples.len() as f64;
        if !loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        let dev_map = map_score(&model, &vocab, &dev_set);
        log.epochs.push(EpochLog { epoch, loss, dev_map });
        // A later epoch that matches the best dev MAP replaces it, but only
        // a strict improvement resets patience.
        if dev_map >= log.best_dev_map {
            stale = if dev_map > log.best_dev_map { 0 } else { stale + 1 };
            log.best_dev_map = dev_map;
            log.best_epoch = epoch;
            best = (model.clone(), vocab.clone());
        } else {
            stale += 1;
        }
        if stale >= config.patience {
            break;
        }
    }
    let (mut model, vocab) = best;
    if config.embedding_trainable {
        model.embeddings = Some(vocab);
    }
    Ok((model, log))
}

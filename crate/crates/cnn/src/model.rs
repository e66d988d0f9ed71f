//! The Siamese convolutional model: two convolutional arms (question and
//! answer) with wide convolution, ReLU and max-pooling, a join layer that
//! appends the four overlap features, a tanh hidden layer and a two-way
//! softmax. All parameters except the embeddings live in one flat vector.

use std::collections::HashMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use qa_core::data_io::EmbeddingTable;
use qa_core::overlap::OverlapFeatures;

use crate::error::{Error, Result};
use crate::kernel::{affine, affine_backward, axpy, dot, softmax2, Real};

pub const NUM_FEATURES: usize = OverlapFeatures::LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Embedding dimension d.
    pub dim: usize,
    /// Filter width w.
    pub width: usize,
    /// Feature maps per arm m.
    pub maps: usize,
    /// Hidden layer size.
    pub hidden: usize,
    pub trainable_embeddings: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::with_shape(50, 5, 100, 204)
    }
}

impl ModelConfig {
    pub fn with_shape(dim: usize, width: usize, maps: usize, hidden: usize) -> Self {
        Self { dim, width, maps, hidden, trainable_embeddings: false }
    }

    /// Width of the join vector `[x_q; x_d; x_feat]`.
    pub fn join_width(&self) -> usize {
        2 * self.maps + NUM_FEATURES
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dim", self.dim), ("width", self.width), ("maps", self.maps), ("hidden", self.hidden)] {
            if v == 0 {
                return Err(Error::Shape(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        let filt = self.maps * self.width * self.dim;
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let q_filters = take(filt);
        let q_bias = take(self.maps);
        let a_filters = take(filt);
        let a_bias = take(self.maps);
        let hidden_w = take(self.hidden * self.join_width());
        let hidden_b = take(self.hidden);
        let out_w = take(2 * self.hidden);
        let out_b = take(2);
        Layout { q_filters, q_bias, a_filters, a_bias, hidden_w, hidden_b, out_w, out_b, len: at }
    }
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub q_filters: Range<usize>,
    pub q_bias: Range<usize>,
    pub a_filters: Range<usize>,
    pub a_bias: Range<usize>,
    /// Row-major `(hidden, 2m + 4)`.
    pub hidden_w: Range<usize>,
    pub hidden_b: Range<usize>,
    /// Row-major `(2, hidden)`.
    pub out_w: Range<usize>,
    pub out_b: Range<usize>,
    pub len: usize,
}

impl Layout {
    pub fn filters(&self, arm: Arm) -> (Range<usize>, Range<usize>) {
        match arm {
            Arm::Question => (self.q_filters.clone(), self.q_bias.clone()),
            Arm::Answer => (self.a_filters.clone(), self.a_bias.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Question,
    Answer,
}

/// A token → row embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<F> {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    data: Vec<F>,
}

impl<F: Real> Embeddings<F> {
    pub fn new(dim: usize) -> Self {
        Self { dim, tokens: Vec::new(), index: HashMap::new(), data: Vec::new() }
    }

    pub fn from_rows(dim: usize, tokens: Vec<String>, data: Vec<F>) -> Result<Self> {
        if data.len() != tokens.len() * dim {
            return Err(Error::Shape(format!(
                "{} embedding values for {} tokens of dim {dim}",
                data.len(),
                tokens.len()
            )));
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Self { dim, tokens, index, data })
    }

    /// Add `token` with `vector` unless present; returns its row.
    pub fn insert_with(&mut self, token: &str, vector: impl FnOnce() -> Vec<F>) -> u32 {
        if let Some(id) = self.index.get(token) {
            return *id;
        }
        let id = self.tokens.len() as u32;
        let v = vector();
        debug_assert_eq!(v.len(), self.dim);
        self.data.extend(v);
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn row(&self, id: u32) -> &[F] {
        &self.data[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn cast<G: Real>(&self) -> Embeddings<G> {
        Embeddings {
            dim: self.dim,
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            data: self.data.iter().map(|x| G::of(x.f64())).collect(),
        }
    }
}

/// Separately supplied parameter blocks, for building a model from parts.
#[derive(Debug, Clone)]
pub struct ModelParts<F> {
    pub q_filters: Vec<F>,
    pub q_bias: Vec<F>,
    pub a_filters: Vec<F>,
    pub a_bias: Vec<F>,
    pub hidden_w: Vec<F>,
    /// Input width of the hidden layer; must equal 2m + 4.
    pub hidden_in: usize,
    pub hidden_b: Vec<F>,
    pub out_w: Vec<F>,
    pub out_b: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    pub config: ModelConfig,
    layout: Layout,
    params: Vec<F>,
    /// Trained embedding rows; `None` when embeddings are frozen.
    pub embeddings: Option<Embeddings<F>>,
    /// Seed the parameters were initialized from.
    pub seed: u64,
}

impl<F: Real> Model<F> {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        Ok(Self { params: vec![F::zero(); layout.len], layout, config, embeddings: None, seed: 0 })
    }

    /// Glorot-uniform weights and zero biases from a seeded stream.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        model.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config;
        let l = model.layout.clone();
        let blocks = [
            (l.q_filters, c.width * c.dim, c.maps),
            (l.a_filters, c.width * c.dim, c.maps),
            (l.hidden_w, c.join_width(), c.hidden),
            (l.out_w, c.hidden, 2),
        ];
        for (range, fan_in, fan_out) in blocks {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut model.params[range] {
                *p = F::of(rng.random_range(-limit..limit));
            }
        }
        Ok(model)
    }

    pub fn from_params(config: ModelConfig, params: Vec<F>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        if params.len() != layout.len {
            return Err(Error::Shape(format!(
                "expected {} parameters for {:?}, got {}",
                layout.len,
                config,
                params.len()
            )));
        }
        Ok(Self { params, layout, config, embeddings: None, seed: 0 })
    }

    /// Assemble from blocks, checking every shape against `config`.
    pub fn from_parts(config: ModelConfig, parts: ModelParts<F>) -> Result<Self> {
        config.validate()?;
        if parts.hidden_in != config.join_width() {
            return Err(Error::Shape(format!(
                "hidden layer input width {} must equal 2m+4 = {}",
                parts.hidden_in,
                config.join_width()
            )));
        }
        let layout = config.layout();
        let mut params = Vec::with_capacity(layout.len);
        let blocks = [
            ("question filters", parts.q_filters, &layout.q_filters),
            ("question bias", parts.q_bias, &layout.q_bias),
            ("answer filters", parts.a_filters, &layout.a_filters),
            ("answer bias", parts.a_bias, &layout.a_bias),
            ("hidden weights", parts.hidden_w, &layout.hidden_w),
            ("hidden bias", parts.hidden_b, &layout.hidden_b),
            ("output weights", parts.out_w, &layout.out_w),
            ("output bias", parts.out_b, &layout.out_b),
        ];
        for (name, block, range) in blocks {
            if block.len() != range.len() {
                return Err(Error::Shape(format!("{name}: expected {} values, got {}", range.len(), block.len())));
            }
            params.extend(block);
        }
        Self::from_params(config, params)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn cast<G: Real>(&self) -> Model<G> {
        Model {
            config: self.config,
            layout: self.layout.clone(),
            params: self.params.iter().map(|x| G::of(x.f64())).collect(),
            embeddings: self.embeddings.as_ref().map(Embeddings::cast),
            seed: self.seed,
        }
    }

    /// Embedding vector for `token`: the trained row when present, else the table's.
    pub fn token_vector(&self, table: &EmbeddingTable, token: &str) -> Vec<F> {
        if let Some(e) = &self.embeddings {
            if let Some(id) = e.get(token) {
                return e.row(id).to_vec();
            }
        }
        table.lookup(token).iter().map(|x| F::of(*x as f64)).collect()
    }

    /// A vocabulary covering `sentences`, rows taken from [`Self::token_vector`].
    pub fn vocabulary<'a, I>(&self, table: &EmbeddingTable, sentences: I) -> Embeddings<F>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut vocab = Embeddings::new(self.config.dim);
        for s in sentences {
            for t in s {
                vocab.insert_with(t, || self.token_vector(table, t));
            }
        }
        vocab
    }

    /// Representation of one sentence by one arm.
    pub fn arm_forward(&self, arm: Arm, vocab: &Embeddings<F>, ids: &[u32]) -> ArmCache<F> {
        let (f, b) = self.layout.filters(arm);
        arm_forward(&self.config, &self.params[f], &self.params[b], vocab, ids)
    }

    pub fn forward(&self, vocab: &Embeddings<F>, input: &PairInput) -> Forward<F> {
        let c = &self.config;
        let l = &self.layout;
        let q = self.arm_forward(Arm::Question, vocab, &input.question);
        let a = self.arm_forward(Arm::Answer, vocab, &input.answer);
        let feats: Vec<F> = input.features.iter().map(|x| F::of(*x)).collect();
        let join = join(&q.x, &a.x, &feats).expect("arm outputs have length m");
        let mut hidden = vec![F::zero(); c.hidden];
        affine(&self.params[l.hidden_w.clone()], &self.params[l.hidden_b.clone()], &join, &mut hidden);
        for h in &mut hidden {
            *h = h.tanh();
        }
        let mut logits = [F::zero(); 2];
        affine(&self.params[l.out_w.clone()], &self.params[l.out_b.clone()], &hidden, &mut logits);
        let logits = [logits[0].f64(), logits[1].f64()];
        Forward { probs: softmax2(logits[0], logits[1]), logits, q, a, join, hidden }
    }

    /// Accumulate `weight * ∂loss/∂θ` for one example into `grad`.
    pub fn backward(
        &self,
        input: &PairInput,
        fwd: &Forward<F>,
        weight: f64,
        grad: &mut Gradient<F>,
    ) {
        let c = &self.config;
        let l = &self.layout;
        let y = input.label as usize;
        let dlogits = [
            F::of(weight * (fwd.probs[0] - (y == 0) as u8 as f64)),
            F::of(weight * (fwd.probs[1] - (y == 1) as u8 as f64)),
        ];
        let gp = &mut grad.params;
        let mut dh = vec![F::zero(); c.hidden];
        {
            let (dw, db) = split_two(gp, &l.out_w, &l.out_b);
            affine_backward(&self.params[l.out_w.clone()], &fwd.hidden, &dlogits, dw, db, Some(&mut dh));
        }
        for (d, h) in dh.iter_mut().zip(&fwd.hidden) {
            *d = *d * (F::one() - *h * *h);
        }
        let mut djoin = vec![F::zero(); c.join_width()];
        {
            let (dw, db) = split_two(gp, &l.hidden_w, &l.hidden_b);
            affine_backward(&self.params[l.hidden_w.clone()], &fwd.join, &dh, dw, db, Some(&mut djoin));
        }
        let m = c.maps;
        self.arm_backward(Arm::Question, &input.question, &fwd.q, &djoin[..m], grad);
        self.arm_backward(Arm::Answer, &input.answer, &fwd.a, &djoin[m..2 * m], grad);
    }

    fn arm_backward(
        &self,
        arm: Arm,
        ids: &[u32],
        cache: &ArmCache<F>,
        dx: &[F],
        grad: &mut Gradient<F>,
    ) {
        let c = &self.config;
        let (fr, br) = self.layout.filters(arm);
        let span = c.width * c.dim;
        let filters = &self.params[fr.clone()];
        let mut dpad = grad.embeddings.as_ref().map(|_| vec![F::zero(); cache.padded.len()]);
        for i in 0..c.maps {
            if cache.pre[i] <= F::zero() {
                continue;
            }
            let g = dx[i];
            let start = cache.argmax[i] * c.dim;
            let window = &cache.padded[start..start + span];
            axpy(g, window, &mut grad.params[fr.start + i * span..fr.start + (i + 1) * span]);
            grad.params[br.start + i] = grad.params[br.start + i] + g;
            if let Some(dp) = &mut dpad {
                axpy(g, &filters[i * span..(i + 1) * span], &mut dp[start..start + span]);
            }
        }
        if let (Some(dp), Some(ge)) = (dpad, &mut grad.embeddings) {
            let pad = c.width - 1;
            for (t, id) in ids.iter().enumerate() {
                let src = &dp[(t + pad) * c.dim..(t + pad + 1) * c.dim];
                let dst = &mut ge[*id as usize * c.dim..(*id as usize + 1) * c.dim];
                axpy(F::one(), src, dst);
            }
        }
    }

    /// Cross-entropy of one example.
    pub fn loss(&self, vocab: &Embeddings<F>, input: &PairInput) -> f64 {
        let f = self.forward(vocab, input);
        example_loss(&f, input.label)
    }
}

pub(crate) fn example_loss<F>(f: &Forward<F>, label: u8) -> f64 {
    -f.probs[label as usize].max(f64::MIN_POSITIVE).ln()
}

fn split_two<'a, F>(g: &'a mut [F], a: &Range<usize>, b: &Range<usize>) -> (&'a mut [F], &'a mut [F]) {
    debug_assert!(a.end <= b.start);
    let (lo, hi) = g.split_at_mut(b.start);
    (&mut lo[a.clone()], &mut hi[..b.len()])
}

/// Per-arm intermediate values kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmCache<F> {
    /// Zero-padded sentence matrix, `(n + 2(w-1)) × d`.
    pub padded: Vec<F>,
    /// Max pre-activation over windows per map.
    pub pre: Vec<F>,
    /// Window index achieving `pre`.
    pub argmax: Vec<usize>,
    /// Representation `max(0, pre)`.
    pub x: Vec<F>,
}

/// Wide convolution, ReLU and max-pooling over one sentence.
pub fn arm_forward<F: Real>(
    config: &ModelConfig,
    filters: &[F],
    bias: &[F],
    vocab: &Embeddings<F>,
    ids: &[u32],
) -> ArmCache<F> {
    let (d, w, m) = (config.dim, config.width, config.maps);
    let n = ids.len();
    let pad = w - 1;
    let mut padded = vec![F::zero(); (n + 2 * pad) * d];
    for (t, id) in ids.iter().enumerate() {
        padded[(t + pad) * d..(t + pad + 1) * d].copy_from_slice(vocab.row(*id));
    }
    let windows = n + w - 1;
    let span = w * d;
    let mut pre = vec![F::neg_infinity(); m];
    let mut argmax = vec![0usize; m];
    for j in 0..windows {
        // Rows j..j+w of the padded matrix are one contiguous span.
        let window = &padded[j * d..j * d + span];
        for i in 0..m {
            let v = dot(window, &filters[i * span..(i + 1) * span]) + bias[i];
            if v > pre[i] {
                pre[i] = v;
                argmax[i] = j;
            }
        }
    }
    let x = pre.iter().map(|v| v.max(F::zero())).collect();
    ArmCache { padded, pre, argmax, x }
}

/// `[x_q; x_d; x_feat]`.
pub fn join<F: Copy>(x_q: &[F], x_d: &[F], features: &[F]) -> Result<Vec<F>> {
    if x_q.len() != x_d.len() {
        return Err(Error::Shape(format!("arm outputs differ in length: {} vs {}", x_q.len(), x_d.len())));
    }
    if features.len() != NUM_FEATURES {
        return Err(Error::Shape(format!("expected {NUM_FEATURES} features, got {}", features.len())));
    }
    let mut v = Vec::with_capacity(2 * x_q.len() + NUM_FEATURES);
    v.extend_from_slice(x_q);
    v.extend_from_slice(x_d);
    v.extend_from_slice(features);
    Ok(v)
}

/// One (question, candidate) example as rows of a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInput {
    pub question: Vec<u32>,
    pub answer: Vec<u32>,
    pub features: [f64; NUM_FEATURES],
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward<F> {
    pub q: ArmCache<F>,
    pub a: ArmCache<F>,
    pub join: Vec<F>,
    pub hidden: Vec<F>,
    pub logits: [f64; 2],
    /// `[P(nonrelevant), P(relevant)]`.
    pub probs: [f64; 2],
}

/// Gradient buffers shaped like a model (and its trainable embeddings).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<F> {
    pub params: Vec<F>,
    pub embeddings: Option<Vec<F>>,
}

impl<F: Real> Gradient<F> {
    pub fn zeros(num_params: usize, embedding_values: Option<usize>) -> Self {
        Self { params: vec![F::zero(); num_params], embeddings: embedding_values.map(|n| vec![F::zero(); n]) }
    }

    pub fn add(&mut self, other: &Self) {
        axpy(F::one(), &other.params, &mut self.params);
        if let (Some(a), Some(b)) = (&mut self.embeddings, &other.embeddings) {
            axpy(F::one(), b, a);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig::with_shape(4, 3, 3, 5)
    }

    #[test]
    fn layout_is_contiguous() {
        let c = tiny();
        let l = c.layout();
        assert_eq!(l.q_filters, 0..36);
        assert_eq!(l.hidden_w.len(), 5 * 10);
        assert_eq!(l.out_b.end, l.len);
        assert_eq!(l.len, 36 + 3 + 36 + 3 + 50 + 5 + 10 + 2);
    }

    #[test]
    fn join_examples() {
        assert_eq!(join(&[1, 2], &[3, 4], &[0, 0, 0, 0]).unwrap(), [1, 2, 3, 4, 0, 0, 0, 0]);
        assert!(join(&[1], &[3, 4], &[0, 0, 0, 0]).is_err());
        assert!(join(&[1], &[3], &[0, 0, 0]).is_err());
        assert_eq!(join(&[0.0; 3], &[0.0; 3], &[0.0; 4]).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn shape_law_enforced() {
        let c = tiny();
        let l = c.layout();
        let parts = |hidden_in: usize| ModelParts::<f64> {
            q_filters: vec![0.0; l.q_filters.len()],
            q_bias: vec![0.0; 3],
            a_filters: vec![0.0; l.a_filters.len()],
            a_bias: vec![0.0; 3],
            hidden_w: vec![0.0; 5 * hidden_in],
            hidden_in,
            hidden_b: vec![0.0; 5],
            out_w: vec![0.0; 10],
            out_b: vec![0.0; 2],
        };
        assert!(Model::from_parts(c, parts(10)).is_ok());
        let err = Model::from_parts(c, parts(8)).unwrap_err().to_string();
        assert!(err.contains("2m+4"), "{err}");
        assert!(Model::<f32>::from_params(c, vec![0.0; 3]).is_err());
        assert!(Model::<f32>::zeros(ModelConfig::with_shape(4, 0, 3, 5)).is_err());
    }

    #[test]
    fn arm_examples() {
        let c = ModelConfig::with_shape(3, 1, 1, 2);
        let mut vocab = Embeddings::<f64>::new(3);
        let id = vocab.insert_with("t", || vec![0.5, -2.0, 0.25]);
        // Width-1 filter selecting dimension j.
        for (j, want) in [(0, 0.5), (1, 0.0), (2, 0.25)] {
            let mut f = vec![0.0; 3];
            f[j] = 1.0;
            assert_eq!(arm_forward(&c, &f, &[0.0], &vocab, &[id]).x, [want]);
        }
        let zero = Embeddings::<f64>::from_rows(3, vec!["z".into()], vec![0.0; 3]).unwrap();
        let c5 = ModelConfig::with_shape(3, 2, 4, 2);
        let out = arm_forward(&c5, &[0.3; 24], &[0.0; 4], &zero, &[0, 0, 0]);
        assert_eq!(out.x, [0.0; 4]);
        assert_eq!(out.padded.len(), (3 + 2) * 3);
    }
}

use std::borrow::Cow;
use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Out-of-vocabulary components are drawn uniformly from `[-OOV_RANGE, OOV_RANGE]`.
pub const OOV_RANGE: f32 = 0.25;

/// Word vectors plus a deterministic policy for unknown words.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
    oov_seed: u64,
}

impl EmbeddingTable {
    pub fn new(dim: usize, oov_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(Self { dim, vectors: HashMap::new(), oov_seed })
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, actual: vector.len() });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn oov_seed(&self) -> u64 {
        self.oov_seed
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    /// The stored vector, or the seeded pseudo-random vector for unknown tokens.
    pub fn lookup(&self, token: &str) -> Cow<'_, [f32]> {
        match self.vectors.get(token) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(self.oov_vector(token)),
        }
    }

    pub fn oov_vector(&self, token: &str) -> Vec<f32> {
        let mut h = Sha256::new();
        h.update(self.oov_seed.to_le_bytes());
        h.update(token.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest[..32]);
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dim).map(|_| rng.random_range(-OOV_RANGE..=OOV_RANGE)).collect()
    }

    /// Content hash over dimension, OOV seed and every (token, vector) pair.
    pub fn fingerprint(&self) -> String {
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update(self.oov_seed.to_le_bytes());
        for t in tokens {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
            for x in &self.vectors[t] {
                h.update(x.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Load `<token> <v1> ... <vdim>` lines with an optional `<count> <dim>` header.
/// The dimension is taken from the header or the first vector.
pub fn load_embeddings(path: &Path, oov_seed: u64) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut table: Option<EmbeddingTable> = None;
    let mut header_dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if i == 0 && rest.len() == 1 {
            if let (Ok(_count), Ok(dim)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                header_dim = Some(dim);
                continue;
            }
        }
        let vector = rest
            .iter()
            .map(|f| f.parse::<f32>())
            .collect::<std::result::Result<Vec<f32>, _>>()
            .map_err(|e| Error::parse(path, lineno, format!("non-numeric field: {e}")))?;
        let table = match &mut table {
            Some(t) => t,
            None => {
                let dim = header_dim.unwrap_or(vector.len());
                table.insert(
                    EmbeddingTable::new(dim, oov_seed).map_err(|_| Error::parse(path, lineno, "zero-length vector"))?,
                )
            }
        };
        if vector.len() != table.dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} values, found {}", table.dim, vector.len()),
            ));
        }
        table.vectors.insert(token.to_string(), vector);
    }
    match table {
        Some(t) => Ok(t),
        None => match header_dim {
            Some(dim) => EmbeddingTable::new(dim, oov_seed),
            None => Err(Error::parse(path, 1, "no vectors found")),
        },
    }
}

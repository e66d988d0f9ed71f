//! Model directory: `manifest.txt` (key=value), `params.bin` (little-endian
//! f32), and for trainable embeddings `vocab.txt` plus `embeddings.bin`.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use qa_core::data_io::EmbeddingTable;
use qa_core::index::parse_manifest;

use crate::error::{Error, Result};
use crate::model::{Embeddings, Model, ModelConfig};

pub const FORMAT_VERSION: u32 = 1;

fn to_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn from_bytes(bytes: &[u8], path: &Path) -> Result<Vec<f32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::manifest(path, format!("length {} is not a multiple of 4", bytes.len())));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// SHA-256 over the parameter bytes, followed by the trained embeddings if any.
pub fn checksum(model: &Model<f32>) -> String {
    let mut h = Sha256::new();
    h.update(to_bytes(model.params()));
    if let Some(e) = &model.embeddings {
        for t in e.tokens() {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
        }
        h.update(to_bytes(e.data()));
    }
    hex::encode(h.finalize())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_model(model: &Model<f32>, table: &EmbeddingTable, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let c = &model.config;
    let mut manifest = format!(
        "format_version={FORMAT_VERSION}\ndim={}\nwidth={}\nmaps={}\nhidden={}\nseed={}\n\
         trainable_embeddings={}\nembedding_fingerprint={}\nnum_params={}\n",
        c.dim,
        c.width,
        c.maps,
        c.hidden,
        model.seed,
        c.trainable_embeddings,
        table.fingerprint(),
        model.params().len(),
    );
    write(&dir.join("params.bin"), &to_bytes(model.params()))?;
    if let Some(e) = &model.embeddings {
        manifest.push_str(&format!("vocab_size={}\n", e.len()));
        write(&dir.join("vocab.txt"), (e.tokens().join("\n") + "\n").as_bytes())?;
        write(&dir.join("embeddings.bin"), &to_bytes(e.data()))?;
    }
    manifest.push_str(&format!("checksum={}\n", checksum(model)));
    write(&dir.join("manifest.txt"), manifest.as_bytes())
}

fn field<T: std::str::FromStr>(m: &HashMap<String, String>, key: &str, path: &Path) -> Result<T> {
    let raw = m.get(key).ok_or_else(|| Error::manifest(path, format!("missing key {key}")))?;
    raw.parse().map_err(|_| Error::manifest(path, format!("bad value for {key}: {raw:?}")))
}

/// Load a model saved with [`save_model`]. `table` must be the embedding
/// table the model was trained with.
pub fn load_model(dir: &Path, table: &EmbeddingTable) -> Result<Model<f32>> {
    let mpath = dir.join("manifest.txt");
    let text = String::from_utf8(read(&mpath)?).map_err(|_| Error::manifest(&mpath, "not UTF-8"))?;
    let m = parse_manifest(&text);
    let version: u32 = field(&m, "format_version", &mpath)?;
    if version != FORMAT_VERSION {
        return Err(Error::manifest(&mpath, format!("unsupported format_version {version}")));
    }
    let mut config = ModelConfig::with_shape(
        field(&m, "dim", &mpath)?,
        field(&m, "width", &mpath)?,
        field(&m, "maps", &mpath)?,
        field(&m, "hidden", &mpath)?,
    );
    config.trainable_embeddings = field(&m, "trainable_embeddings", &mpath)?;
    let fingerprint: String = field(&m, "embedding_fingerprint", &mpath)?;
    if table.dim() != config.dim {
        return Err(Error::Shape(format!("embedding table dim {} but model dim {}", table.dim(), config.dim)));
    }
    if fingerprint != table.fingerprint() {
        return Err(Error::manifest(&mpath, "embedding table does not match the one the model was saved with"));
    }
    let ppath = dir.join("params.bin");
    let params = from_bytes(&read(&ppath)?, &ppath)?;
    let expected: usize = field(&m, "num_params", &mpath)?;
    if params.len() != expected || expected != config.layout().len {
        return Err(Error::Shape(format!(
            "{} parameters on disk, manifest says {expected}, shape needs {}",
            params.len(),
            config.layout().len
        )));
    }
    let mut model = Model::from_params(config, params)?;
    model.seed = field(&m, "seed", &mpath)?;
    if let Some(size) = m.get("vocab_size") {
        let size: usize = size.parse().map_err(|_| Error::manifest(&mpath, "bad vocab_size"))?;
        let vpath = dir.join("vocab.txt");
        let vocab = String::from_utf8(read(&vpath)?).map_err(|_| Error::manifest(&vpath, "not UTF-8"))?;
        let tokens: Vec<String> = vocab.lines().map(str::to_string).collect();
        if tokens.len() != size {
            return Err(Error::manifest(&vpath, format!("{} tokens, manifest says {size}", tokens.len())));
        }
        let epath = dir.join("embeddings.bin");
        let data = from_bytes(&read(&epath)?, &epath)?;
        model.embeddings = Some(Embeddings::from_rows(config.dim, tokens, data)?);
    }
    let want: String = field(&m, "checksum", &mpath)?;
    if checksum(&model) != want {
        return Err(Error::manifest(&mpath, "parameter checksum mismatch"));
    }
    Ok(model)
}

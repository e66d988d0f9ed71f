//! In-memory inverted index with BM25 ranking and idf statistics.
//!
//! Documents are tokenized with [`crate::text::tokenize_tokens`]. Internal
//! document numbers follow ascending `doc_id` order, so postings lists sorted
//! by document number are also sorted by `doc_id`.
//!
//! On disk an index is a directory holding `manifest.txt`, `postings.bin`,
//! `docstats.tsv` and `documents.jsonl` (raw text, needed for sentence
//! segmentation downstream).

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::ranking::by_score_then_key;
use crate::text::{tokenize_tokens, TOKENIZER_VERSION};

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;
const POSTINGS_MAGIC: &[u8; 8] = b"QAPOST1\n";
const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: DEFAULT_K1, b: DEFAULT_B }
    }
}

/// Smoothed idf: `ln(1 + (N - df + 0.5) / (df + 0.5))`.
pub fn idf_formula(num_docs: usize, df: usize) -> f64 {
    let n = num_docs as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Anything that can weight a term by rarity.
pub trait IdfSource {
    fn idf(&self, term: &str) -> f64;
}

impl<T: IdfSource + ?Sized> IdfSource for &T {
    fn idf(&self, term: &str) -> f64 {
        (**self).idf(term)
    }
}

/// idf from a plain corpus of token sequences, each counted as one document.
#[derive(Debug, Clone, Default)]
pub struct CorpusIdf {
    num_docs: usize,
    df: HashMap<String, usize>,
}

impl CorpusIdf {
    pub fn from_documents<'a, I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut out = Self::default();
        for doc in docs {
            out.num_docs += 1;
            let distinct: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in distinct {
                *out.df.entry(t.to_string()).or_default() += 1;
            }
        }
        out
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }
}

impl IdfSource for CorpusIdf {
    fn idf(&self, term: &str) -> f64 {
        idf_formula(self.num_docs, self.df(term))
    }
}

/// Explicit per-term weights with a fallback for unknown terms.
#[derive(Debug, Clone, Default)]
pub struct FixedIdf {
    pub weights: HashMap<String, f64>,
    pub default: f64,
}

impl FixedIdf {
    pub fn uniform(value: f64) -> Self {
        Self { weights: HashMap::new(), default: value }
    }
}

impl IdfSource for FixedIdf {
    fn idf(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug)]
enum DocStore {
    None,
    Memory(Vec<String>),
    File { path: PathBuf, offsets: Vec<u64>, file: Mutex<File> },
}

#[derive(Debug)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    total_length: u64,
    params: Bm25Params,
    docs: DocStore,
}

/// Accumulates documents; call [`IndexBuilder::finish`] to get an immutable index.
#[derive(Debug, Default)]
pub struct IndexBuilder {
    postings: HashMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    texts: Option<Vec<String>>,
    seen: HashSet<String>,
}

impl IndexBuilder {
    /// A builder that keeps raw text for later sentence segmentation.
    pub fn new() -> Self {
        Self { texts: Some(Vec::new()), ..Default::default() }
    }

    /// A builder that only keeps statistics and postings.
    pub fn without_text() -> Self {
        Self::default()
    }

    pub fn add(&mut self, doc_id: &str, text: &str) -> Result<()> {
        if doc_id.is_empty() || doc_id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "document id {doc_id:?} is empty or contains whitespace"
            )));
        }
        if !self.seen.insert(doc_id.to_string()) {
            return Err(Error::DuplicateDocument(doc_id.to_string()));
        }
        let doc = self.doc_ids.len() as u32;
        let tokens = tokenize_tokens(text);
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for (term, tf) in tf {
            self.postings.entry(term).or_default().push(Posting { doc, tf });
        }
        self.doc_ids.push(doc_id.to_string());
        self.doc_lengths.push(tokens.len() as u32);
        if let Some(texts) = &mut self.texts {
            texts.push(text.to_string());
        }
        Ok(())
    }

    pub fn finish(self, params: Bm25Params) -> Result<InvertedIndex> {
        if self.doc_ids.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut order: Vec<u32> = (0..self.doc_ids.len() as u32).collect();
        order.sort_by(|a, b| self.doc_ids[*a as usize].cmp(&self.doc_ids[*b as usize]));
        let mut remap = vec![0u32; order.len()];
        for (new, old) in order.iter().enumerate() {
            remap[*old as usize] = new as u32;
        }
        let doc_ids = order.iter().map(|o| self.doc_ids[*o as usize].clone()).collect();
        let doc_lengths: Vec<u32> = order.iter().map(|o| self.doc_lengths[*o as usize]).collect();
        let docs = match self.texts {
            Some(mut texts) => DocStore::Memory(
                order.iter().map(|o| std::mem::take(&mut texts[*o as usize])).collect(),
            ),
            None => DocStore::None,
        };
        let mut postings = self.postings;
        for list in postings.values_mut() {
            for p in list.iter_mut() {
                p.doc = remap[p.doc as usize];
            }
            list.sort_unstable_by_key(|p| p.doc);
        }
        let total_length = doc_lengths.iter().map(|l| *l as u64).sum();
        Ok(InvertedIndex { postings, doc_ids, doc_lengths, total_length, params, docs })
    }
}

impl InvertedIndex {
    pub fn build<'a, I>(documents: I, params: Bm25Params) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut b = IndexBuilder::new();
        for (id, text) in documents {
            b.add(id, text)?;
        }
        b.finish(params)
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.total_length as f64 / self.num_docs() as f64
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn set_params(&mut self, params: Bm25Params) {
        self.params = params;
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, doc: u32) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn doc_number(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .ok()
            .map(|i| i as u32)
    }

    /// Raw text of a document, if this index retains text.
    pub fn document_text(&self, doc_id: &str) -> Result<String> {
        let doc = self
            .doc_number(doc_id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown document {doc_id:?}")))?;
        match &self.docs {
            DocStore::None => Err(Error::InvalidArgument("index holds no document text".into())),
            DocStore::Memory(texts) => Ok(texts[doc as usize].clone()),
            DocStore::File { path, offsets, file } => {
                let start = offsets[doc as usize];
                let end = offsets[doc as usize + 1];
                let mut buf = vec![0u8; (end - start) as usize];
                {
                    let mut f = file.lock().expect("document store lock poisoned");
                    f.seek(SeekFrom::Start(start)).map_err(|e| Error::io(path, e))?;
                    f.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
                }
                let line = String::from_utf8(buf)
                    .map_err(|_| Error::CorruptIndex(format!("non-UTF-8 text for {doc_id}")))?;
                let rec: DocRecord = serde_json::from_str(line.trim_end())
                    .map_err(|e| Error::CorruptIndex(format!("document record for {doc_id}: {e}")))?;
                Ok(rec.text)
            }
        }
    }

    fn bm25_term(&self, idf: f64, tf: u32, doc_len: u32, avgdl: f64, p: Bm25Params) -> f64 {
        let tf = tf as f64;
        let norm = p.k1 * (1.0 - p.b + p.b * doc_len as f64 / avgdl);
        idf * tf * (p.k1 + 1.0) / (tf + norm)
    }

    /// Top-`h` documents for a bag-of-words query with the index's parameters.
    /// Repeated query terms contribute once per occurrence.
    pub fn retrieve_bm25<S: AsRef<str>>(&self, query: &[S], h: usize) -> Vec<ScoredDocument> {
        self.retrieve_bm25_with(query, h, self.params)
    }

    pub fn retrieve_bm25_with<S: AsRef<str>>(
        &self,
        query: &[S],
        h: usize,
        params: Bm25Params,
    ) -> Vec<ScoredDocument> {
        if h == 0 {
            return Vec::new();
        }
        let mut qtf: Vec<(&str, u32)> = Vec::new();
        for t in query {
            let t = t.as_ref();
            match qtf.iter_mut().find(|(x, _)| *x == t) {
                Some((_, n)) => *n += 1,
                None => qtf.push((t, 1)),
            }
        }
        let avgdl = self.avgdl();
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for (term, count) in qtf {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(term);
            for p in list {
                let s = self.bm25_term(idf, p.tf, self.doc_lengths[p.doc as usize], avgdl, params);
                *acc.entry(p.doc).or_default() += count as f64 * s;
            }
        }
        let mut scored: Vec<(u32, f64)> = acc.into_iter().filter(|(_, s)| *s > 0.0).collect();
        let cmp = |a: &(u32, f64), b: &(u32, f64)| {
            by_score_then_key(a.1, self.doc_id(a.0), b.1, self.doc_id(b.0))
        };
        if scored.len() > h {
            scored.select_nth_unstable_by(h - 1, cmp);
            scored.truncate(h);
        }
        scored.sort_by(cmp);
        scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc, score))| ScoredDocument {
                doc_id: self.doc_id(doc).to_string(),
                score,
                rank: i + 1,
            })
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join("postings.bin");
        let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        let io = |e| Error::io(&path, e);
        w.write_all(POSTINGS_MAGIC).map_err(io)?;
        w.write_all(&(terms.len() as u64).to_le_bytes()).map_err(io)?;
        for t in terms {
            let list = &self.postings[t];
            w.write_all(&(t.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(t.as_bytes()).map_err(io)?;
            w.write_all(&(list.len() as u32).to_le_bytes()).map_err(io)?;
            for p in list {
                w.write_all(&p.doc.to_le_bytes()).map_err(io)?;
                w.write_all(&p.tf.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)?;

        let path = dir.join("docstats.tsv");
        let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            writeln!(w, "{id}\t{len}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let has_text = !matches!(self.docs, DocStore::None);
        if has_text {
            let path = dir.join("documents.jsonl");
            let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
            for id in &self.doc_ids {
                let rec = DocRecord { id: id.clone(), text: self.document_text(id)? };
                let line = serde_json::to_string(&rec).expect("DocRecord serializes");
                writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }

        let manifest = format!(
            "format_version = {FORMAT_VERSION}\ntokenizer_version = {TOKENIZER_VERSION}\nk1 = {}\nb = {}\nnum_docs = {}\ntotal_length = {}\nnum_terms = {}\nhas_text = {has_text}\n",
            self.params.k1,
            self.params.b,
            self.num_docs(),
            self.total_length,
            self.num_terms(),
        );
        let path = dir.join("manifest.txt");
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.txt");
        let manifest = parse_manifest(&std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?);
        let field = |k: &str| {
            manifest
                .get(k)
                .cloned()
                .ok_or_else(|| Error::CorruptIndex(format!("manifest lacks {k}")))
        };
        if field("format_version")? != FORMAT_VERSION {
            return Err(Error::CorruptIndex("unsupported format version".into()));
        }
        if field("tokenizer_version")? != TOKENIZER_VERSION {
            return Err(Error::CorruptIndex(format!(
                "index built with tokenizer {}, this build uses {TOKENIZER_VERSION}",
                field("tokenizer_version")?
            )));
        }
        let num = |k: &str| -> Result<f64> {
            field(k)?.parse().map_err(|_| Error::CorruptIndex(format!("bad {k}")))
        };
        let params = Bm25Params { k1: num("k1")?, b: num("b")? };
        let num_docs = num("num_docs")? as usize;
        let num_terms = num("num_terms")? as usize;

        let path = dir.join("docstats.tsv");
        let stats = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut doc_ids = Vec::with_capacity(num_docs);
        let mut doc_lengths = Vec::with_capacity(num_docs);
        for (i, line) in stats.lines().enumerate() {
            let (id, len) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&path, i + 1, "expected <doc_id>\\t<length>"))?;
            doc_ids.push(id.to_string());
            doc_lengths.push(len.parse().map_err(|_| Error::parse(&path, i + 1, "bad length"))?);
        }
        if doc_ids.len() != num_docs || doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::CorruptIndex("document stats disagree with manifest".into()));
        }

        let path = dir.join("postings.bin");
        let mut r = BufReader::new(File::open(&path).map_err(|e| Error::io(&path, e))?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| Error::io(&path, e))?;
        if &magic != POSTINGS_MAGIC {
            return Err(Error::CorruptIndex("bad postings header".into()));
        }
        let corrupt = |_| Error::CorruptIndex("truncated postings file".into());
        let n_terms = read_u64(&mut r).map_err(corrupt)? as usize;
        if n_terms != num_terms {
            return Err(Error::CorruptIndex("term count disagrees with manifest".into()));
        }
        let mut postings = HashMap::with_capacity(n_terms);
        for _ in 0..n_terms {
            let len = read_u32(&mut r).map_err(corrupt)? as usize;
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes).map_err(corrupt)?;
            let term = String::from_utf8(bytes).map_err(|_| Error::CorruptIndex("non-UTF-8 term".into()))?;
            let df = read_u32(&mut r).map_err(corrupt)? as usize;
            let mut list = Vec::with_capacity(df);
            for _ in 0..df {
                let doc = read_u32(&mut r).map_err(corrupt)?;
                let tf = read_u32(&mut r).map_err(corrupt)?;
                if doc as usize >= num_docs {
                    return Err(Error::CorruptIndex(format!("posting for {term} out of range")));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        let total_length = doc_lengths.iter().map(|l: &u32| *l as u64).sum();

        let docs = if field("has_text")? == "true" {
            let path = dir.join("documents.jsonl");
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let mut offsets = vec![0u64];
            let mut reader = BufReader::new(file.try_clone().map_err(|e| Error::io(&path, e))?);
            let mut buf = Vec::new();
            loop {
                buf.clear();
                let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(&path, e))?;
                if n == 0 {
                    break;
                }
                offsets.push(offsets.last().unwrap() + n as u64);
            }
            if offsets.len() != num_docs + 1 {
                return Err(Error::CorruptIndex("document store disagrees with manifest".into()));
            }
            DocStore::File { path, offsets, file: Mutex::new(file) }
        } else {
            DocStore::None
        };

        Ok(Self { postings, doc_ids, doc_lengths, total_length, params, docs })
    }

    /// Structural equality of postings and statistics (ignores the text store).
    pub fn same_contents(&self, other: &Self) -> bool {
        self.postings == other.postings
            && self.doc_ids == other.doc_ids
            && self.doc_lengths == other.doc_lengths
            && self.params == other.params
    }
}

impl IdfSource for InvertedIndex {
    fn idf(&self, term: &str) -> f64 {
        idf_formula(self.num_docs(), self.df(term))
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct DocRecord {
    id: String,
    text: String,
}

/// `key = value` lines; `#` comments and blank lines ignored.
pub fn parse_manifest(content: &str) -> HashMap<String, String> {
    content
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

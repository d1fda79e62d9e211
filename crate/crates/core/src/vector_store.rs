//! Exact cosine-similarity retrieval over document embeddings.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LoadMode};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::provider::SubprocessClient;
use crate::text;

pub const DEFAULT_DIM: usize = 768;
pub const DEFAULT_TOP_K: usize = 5;

/// Anything that turns text into a fixed-dimension vector.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    /// Raw, not necessarily normalized, embedding.
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Signed feature hashing of term frequencies.
///
/// Each token lands in bucket `h mod dim` with sign taken from the top bit of
/// `h`, where `h` is the 64-bit FNV-1a hash of the token. Deterministic across
/// platforms and runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(Self { dim })
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        for tok in text::tokenize(text) {
            let h = fnv1a(tok.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        Ok(v)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

/// Embedding model behind a child process: `{"text"}` → `{"vector":[...]}`.
pub struct SubprocessEmbedder {
    client: SubprocessClient,
    dim: usize,
}

impl SubprocessEmbedder {
    pub fn spawn(command: &[String], dim: usize) -> Result<Self> {
        Ok(Self {
            client: SubprocessClient::spawn(command)?,
            dim,
        })
    }
}

impl Embedder for SubprocessEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let resp: EmbedResponse = self.client.call(&EmbedRequest { text })?;
        Ok(resp.vector)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub id: String,
    #[serde(rename = "vector")]
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let denom = l2_norm(a) * l2_norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

/// Embed and L2-normalize.
pub fn embed_text(
    id: impl Into<String>,
    text: &str,
    provider: &dyn Embedder,
) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(Error::Invalid("cannot embed empty text".into()));
    }
    let mut values = provider.embed(text)?;
    if values.len() != provider.dim() {
        return Err(Error::DimensionMismatch {
            expected: provider.dim(),
            actual: values.len(),
        });
    }
    let norm = l2_norm(&values);
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Provider(format!(
            "embedding of `{text}` has norm {norm}"
        )));
    }
    values.iter_mut().for_each(|x| *x /= norm);
    Ok(EmbeddingVector {
        id: id.into(),
        values,
    })
}

/// Text that gets embedded and handed to the generator for a document: the
/// disease and section heading lead so questions naming them retrieve it.
pub fn document_context(doc: &Document) -> String {
    format!(
        "{}. {}. {}",
        doc.disease,
        doc.section.replace('_', " "),
        doc.text
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<EmbeddingVector>,
    doc_texts: HashMap<String, String>,
}

impl VectorIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EmbeddingVector] {
        &self.entries
    }

    pub fn text(&self, id: &str) -> Option<&str> {
        self.doc_texts.get(id).map(String::as_str)
    }

    /// Assemble an index from pre-computed vectors.
    pub fn from_entries(dim: usize, entries: Vec<(EmbeddingVector, String)>) -> Result<Self> {
        let mut index = Self {
            dim,
            ..Default::default()
        };
        for (vec, text) in entries {
            index.push(vec, text)?;
        }
        Ok(index)
    }

    fn push(&mut self, vec: EmbeddingVector, text: String) -> Result<()> {
        if vec.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vec.dim(),
            });
        }
        if self.doc_texts.contains_key(&vec.id) {
            return Err(Error::DuplicateId(vec.id));
        }
        self.doc_texts.insert(vec.id.clone(), text);
        self.entries.push(vec);
        Ok(())
    }
}

pub fn build_index(
    docs: &[Document],
    provider: &dyn Embedder,
    mode: LoadMode,
) -> Result<(VectorIndex, Vec<String>)> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut index = VectorIndex {
        dim: provider.dim(),
        ..Default::default()
    };
    let mut warnings = Vec::new();
    for doc in docs {
        let context = document_context(doc);
        match embed_text(doc.id.clone(), &context, provider) {
            Ok(vec) => index.push(vec, context)?,
            Err(e) if mode == LoadMode::Lenient => {
                let msg = format!("document `{}` skipped: {e}", doc.id);
                log::warn!("{msg}");
                warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((index, warnings))
}

/// The `k` most cosine-similar documents, best first; equal scores are
/// ordered by id.
pub fn top_k(index: &VectorIndex, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredDoc>> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if query.dim() != index.dim {
        return Err(Error::DimensionMismatch {
            expected: index.dim,
            actual: query.dim(),
        });
    }
    let mut scored: Vec<ScoredDoc> = index
        .entries
        .iter()
        .map(|e| ScoredDoc {
            id: e.id.clone(),
            score: cosine(&e.values, &query.values),
        })
        .collect();
    let order = |a: &ScoredDoc, b: &ScoredDoc| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_by(order);
    Ok(scored)
}

pub const VECTORS_FILE: &str = "vectors.jsonl";
pub const CONTEXTS_FILE: &str = "contexts.jsonl";

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct ContextRecord {
    id: String,
    text: String,
}

/// Write `vectors.jsonl` (metadata line, then one vector per line) and
/// `contexts.jsonl` into `dir`.
pub fn persist_index(index: &VectorIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(VECTORS_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let header = IndexHeader {
        dim: index.dim,
        count: index.entries.len(),
    };
    writeln!(w, "{}", to_line(&header)?).map_err(|e| Error::io(&path, e))?;
    for e in &index.entries {
        writeln!(w, "{}", to_line(e)?).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    jsonl::write_all(
        &dir.join(CONTEXTS_FILE),
        index.entries.iter().map(|e| ContextRecord {
            id: e.id.clone(),
            text: index.doc_texts[&e.id].clone(),
        }),
    )
}

fn to_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn load_index(dir: &Path) -> Result<VectorIndex> {
    let path = dir.join(VECTORS_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: IndexHeader = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&line).map_err(|e| Error::parse(&path, 1, e.to_string()))?
        }
        None => return Err(Error::parse(&path, 1, "missing index header")),
    };
    let mut vectors = Vec::with_capacity(header.count);
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: EmbeddingVector =
            serde_json::from_str(&line).map_err(|e| Error::parse(&path, idx + 1, e.to_string()))?;
        vectors.push(v);
    }
    if vectors.len() != header.count {
        return Err(Error::parse(
            &path,
            1,
            format!(
                "header declares {} vectors, found {}",
                header.count,
                vectors.len()
            ),
        ));
    }
    let mut texts: HashMap<String, String> =
        jsonl::read_all::<ContextRecord>(&dir.join(CONTEXTS_FILE))?
            .into_iter()
            .map(|r| (r.id, r.text))
            .collect();
    let entries = vectors
        .into_iter()
        .map(|v| {
            let text = texts
                .remove(&v.id)
                .ok_or_else(|| Error::Invalid(format!("no context text for `{}`", v.id)))?;
            Ok((v, text))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorIndex::from_entries(header.dim, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(id: &str, v: &[f64]) -> EmbeddingVector {
        EmbeddingVector {
            id: id.into(),
            values: v.to_vec(),
        }
    }

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            disease: "Asthma".into(),
            section: "symptoms".into(),
            text: text.into(),
            source: "t".into(),
        }
    }

    #[test]
    fn reference_embedder_is_deterministic_and_normalized() {
        let e = HashingEmbedder::default();
        let a = embed_text("q", "wheezing and chest tightness", &e).unwrap();
        let b = embed_text("q", "wheezing and chest tightness", &e).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 768);
        assert!((a.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_texts_are_nearly_orthogonal() {
        use rand::{Rng, SeedableRng};
        let e = HashingEmbedder::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut total = 0.0;
        for _ in 0..50 {
            let left: Vec<String> = (0..8)
                .map(|_| format!("left{}", rng.gen_range(0..10_000)))
                .collect();
            let right: Vec<String> = (0..8)
                .map(|_| format!("right{}", rng.gen_range(0..10_000)))
                .collect();
            let a = embed_text("a", &left.join(" "), &e).unwrap();
            let b = embed_text("b", &right.join(" "), &e).unwrap();
            total += cosine(&a.values, &b.values).abs();
        }
        assert!(total / 50.0 < 0.05, "mean |cos| = {}", total / 50.0);
    }

    #[test]
    fn embedding_errors() {
        let e = HashingEmbedder::default();
        assert!(embed_text("q", "   ", &e).is_err());
        assert!(embed_text("q", "?!", &e).is_err());
        struct Short;
        impl Embedder for Short {
            fn dim(&self) -> usize {
                4
            }
            fn embed(&self, _: &str) -> Result<Vec<f64>> {
                Ok(vec![1.0; 3])
            }
        }
        assert!(matches!(
            embed_text("q", "x", &Short),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn hand_built_ranking() {
        let index = VectorIndex::from_entries(
            2,
            vec![
                (unit("x", &[1.0, 0.0]), "x".into()),
                (unit("y", &[0.0, 1.0]), "y".into()),
                (unit("z", &[0.6, 0.8]), "z".into()),
            ],
        )
        .unwrap();
        let hits = top_k(&index, &unit("q", &[1.0, 0.0]), 5).unwrap();
        let ids: Vec<&str> = hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, vec!["x", "z", "y"]);
        assert!((hits[0].score - 1.0).abs() < 1e-12);
        assert!((hits[1].score - 0.6).abs() < 1e-12);
        assert!(hits[2].score.abs() < 1e-12);
        assert_eq!(top_k(&index, &unit("q", &[1.0, 0.0]), 1).unwrap().len(), 1);
        assert!(top_k(&index, &unit("q", &[1.0, 0.0, 0.0]), 1).is_err());
        assert!(top_k(&index, &unit("q", &[1.0, 0.0]), 0).is_err());
    }

    #[test]
    fn ties_break_by_id() {
        let index = VectorIndex::from_entries(
            2,
            vec![
                (unit("b", &[0.0, 1.0]), String::new()),
                (unit("a", &[0.0, 1.0]), String::new()),
                (unit("c", &[1.0, 0.0]), String::new()),
            ],
        )
        .unwrap();
        let hits = top_k(&index, &unit("q", &[1.0, 1.0]), 3).unwrap();
        let ids: Vec<&str> = hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn build_and_persist_is_byte_stable() {
        let docs = vec![
            doc("d1", "wheezing"),
            doc("d2", "cough at night"),
            doc("d3", "chest tightness"),
        ];
        let e = HashingEmbedder::default();
        let (index, _) = build_index(&docs, &e, LoadMode::Strict).unwrap();
        assert_eq!(index.len(), 3);
        assert!(index.entries().iter().all(|v| v.dim() == 768));
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        persist_index(&index, d1.path()).unwrap();
        let (again, _) = build_index(&docs, &e, LoadMode::Strict).unwrap();
        persist_index(&again, d2.path()).unwrap();
        for f in [VECTORS_FILE, CONTEXTS_FILE] {
            assert_eq!(
                fs::read(d1.path().join(f)).unwrap(),
                fs::read(d2.path().join(f)).unwrap()
            );
        }
        let loaded = load_index(d1.path()).unwrap();
        assert_eq!(loaded.entries(), index.entries());
        assert_eq!(loaded.text("d2"), index.text("d2"));
        let first = fs::read_to_string(d1.path().join(VECTORS_FILE)).unwrap();
        assert!(first.starts_with(r#"{"dim":768,"count":3}"#));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let e = HashingEmbedder::default();
        assert!(matches!(
            build_index(&[], &e, LoadMode::Strict),
            Err(Error::EmptyCorpus)
        ));
    }
}

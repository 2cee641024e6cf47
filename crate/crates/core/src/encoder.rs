//! Frozen text encoders producing the feature vectors the network consumes.

use std::collections::HashMap;
use std::fs;
use std::hash::Hasher;
use std::path::Path;
use std::sync::Arc;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense feature vector; either unit L2 norm or all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn normalized(mut v: Vec<f64>) -> Self {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        FeatureVector(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

pub const DEFAULT_HASH_DIM: usize = 256;
pub const DEFAULT_NGRAM_MAX: usize = 2;

fn ngram_bucket(gram: &[String], dim: usize) -> usize {
    let mut h = FnvHasher::default();
    for (i, tok) in gram.iter().enumerate() {
        if i > 0 {
            h.write_u8(0x1f);
        }
        h.write(tok.as_bytes());
    }
    (h.finish() % dim as u64) as usize
}

/// Counts token n-grams (1..=`n_gram_max`) into `dim` FNV-1a buckets and
/// L2-normalizes the counts.
pub fn encode_hashed(tokens: &[String], dim: usize, n_gram_max: usize) -> Result<FeatureVector> {
    if dim < 8 {
        return Err(Error::invalid(format!("hash dimension {dim} below 8")));
    }
    if n_gram_max == 0 {
        return Err(Error::invalid("n_gram_max must be at least 1"));
    }
    if tokens.is_empty() {
        return Err(Error::invalid("cannot encode an empty token list"));
    }
    let mut v = vec![0.0; dim];
    for n in 1..=n_gram_max.min(tokens.len()) {
        for gram in tokens.windows(n) {
            v[ngram_bucket(gram, dim)] += 1.0;
        }
    }
    Ok(FeatureVector::normalized(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    fallback: Vec<f64>,
}

impl EmbeddingTable {
    /// Fallback for unknown tokens is the mean of all vectors.
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::invalid("embedding table is empty"));
        }
        let mut fallback = vec![0.0; dim];
        for (tok, v) in &vectors {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "vector for {tok:?} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("embedding for {tok:?}")));
            }
        }
        // Sorted keys keep the float sum independent of hash order.
        let mut keys: Vec<&String> = vectors.keys().collect();
        keys.sort();
        for k in keys {
            for (f, x) in fallback.iter_mut().zip(&vectors[k]) {
                *f += x;
            }
        }
        let n = vectors.len() as f64;
        fallback.iter_mut().for_each(|f| *f /= n);
        Ok(EmbeddingTable {
            dim,
            vectors,
            fallback,
        })
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

    pub fn lookup(&self, token: &str) -> &[f64] {
        self.vectors.get(token).unwrap_or(&self.fallback)
    }
}

/// Parses `<count> <dim>` followed by `<token> <dim floats>` lines.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(1, format!("bad header: {e}")))?;
    let [count, dim] = head[..] else {
        return Err(err(1, "header must be `<count> <dim>`".into()));
    };
    let mut vectors = HashMap::with_capacity(count);
    for (i, line) in lines {
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-blank line").to_string();
        let v: Vec<f64> = parts
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(i + 1, format!("bad float: {e}")))?;
        if v.len() != dim {
            return Err(err(i + 1, format!("expected {dim} values, found {}", v.len())));
        }
        if vectors.insert(token.clone(), v).is_some() {
            return Err(err(i + 1, format!("duplicate token {token:?}")));
        }
    }
    if vectors.len() != count {
        return Err(err(0, format!("header declares {count} vectors, found {}", vectors.len())));
    }
    EmbeddingTable::new(dim, vectors)
}

/// Mean of per-token vectors, L2-normalized; a zero mean stays zero.
pub fn encode_avg_embedding(tokens: &[String], table: &EmbeddingTable) -> FeatureVector {
    let mut sum = vec![0.0; table.dim()];
    for tok in tokens {
        for (s, x) in sum.iter_mut().zip(table.lookup(tok)) {
            *s += x;
        }
    }
    if !tokens.is_empty() {
        let n = tokens.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    FeatureVector::normalized(sum)
}

/// How encoders are described in configs and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSpec {
    Hashed {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_ngram")]
        n_gram_max: usize,
    },
    Embeddings {
        path: std::path::PathBuf,
    },
}

fn default_dim() -> usize {
    DEFAULT_HASH_DIM
}

fn default_ngram() -> usize {
    DEFAULT_NGRAM_MAX
}

impl Default for EncoderSpec {
    fn default() -> Self {
        EncoderSpec::Hashed {
            dim: DEFAULT_HASH_DIM,
            n_gram_max: DEFAULT_NGRAM_MAX,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Encoder {
    Hashed { dim: usize, n_gram_max: usize },
    Embeddings(Arc<EmbeddingTable>),
}

impl Encoder {
    pub fn from_spec(spec: &EncoderSpec) -> Result<Self> {
        match spec {
            &EncoderSpec::Hashed { dim, n_gram_max } => {
                if dim < 8 || n_gram_max == 0 {
                    return Err(Error::invalid(format!(
                        "hashed encoder needs dim >= 8 and n_gram_max >= 1, got {dim}/{n_gram_max}"
                    )));
                }
                Ok(Encoder::Hashed { dim, n_gram_max })
            }
            EncoderSpec::Embeddings { path } => Ok(Encoder::Embeddings(Arc::new(load_embeddings(path)?))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::Hashed { dim, .. } => *dim,
            Encoder::Embeddings(t) => t.dim(),
        }
    }

    pub fn encode(&self, tokens: &[String]) -> Result<FeatureVector> {
        match self {
            Encoder::Hashed { dim, n_gram_max } => encode_hashed(tokens, *dim, *n_gram_max),
            Encoder::Embeddings(t) => Ok(encode_avg_embedding(tokens, t)),
        }
    }
}

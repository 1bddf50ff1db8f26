//! Word vectors in the word2vec text format, phrase averaging and cosine similarity.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            entries: HashMap::new(),
        }
    }

    /// Inserts a vector under the lowercased token. The first insertion of a
    /// token wins.
    pub fn insert(&mut self, token: &str, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch(self.dimension, vector.len()));
        }
        self.entries.entry(token.to_lowercase()).or_insert(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        match self.entries.get(token) {
            Some(v) => Some(v),
            None => self.entries.get(&token.to_lowercase()).map(Vec::as_slice),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::EmbeddingFormat {
            line: 1,
            message: "empty file".into(),
        })?;
        let mut fields = header.split_whitespace();
        let mut header_field = |what: &str| -> Result<usize> {
            fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::EmbeddingFormat {
                    line: 1,
                    message: format!("header must be `count dimension`, missing {what}"),
                })
        };
        let count = header_field("count")?;
        let dimension = header_field("dimension")?;
        if dimension == 0 {
            return Err(Error::EmbeddingFormat {
                line: 1,
                message: "dimension must be positive".into(),
            });
        }

        let mut table = EmbeddingTable::new(dimension);
        let mut rows = 0;
        for (idx, line) in lines {
            let line_no = idx + 1;
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default();
            let vector = parts
                .map(|v| {
                    v.parse::<f32>().map_err(|_| Error::EmbeddingFormat {
                        line: line_no,
                        message: format!("`{v}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if vector.len() != dimension {
                return Err(Error::EmbeddingFormat {
                    line: line_no,
                    message: format!(
                        "dimension mismatch: expected {dimension} values, found {}",
                        vector.len()
                    ),
                });
            }
            table.insert(token, vector)?;
            rows += 1;
        }
        if rows != count {
            return Err(Error::EmbeddingFormat {
                line: 1,
                message: format!("header announces {count} vectors, file has {rows}"),
            });
        }
        Ok(table)
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::parse(&text)
}

/// Mean of the vectors of the in-vocabulary tokens of `phrase`, or `None`
/// when no token is known.
pub fn phrase_vector(phrase: &str, table: &EmbeddingTable) -> Option<Vec<f32>> {
    let mut sum = vec![0.0f64; table.dimension()];
    let mut known = 0usize;
    for token in phrase.split_whitespace() {
        if let Some(v) = table.get(token) {
            for (acc, x) in sum.iter_mut().zip(v) {
                *acc += f64::from(*x);
            }
            known += 1;
        }
    }
    if known == 0 {
        return None;
    }
    Some(sum.into_iter().map(|s| (s / known as f64) as f32).collect())
}

pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (f64::from(*a), f64::from(*b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine similarity of two phrases' mean vectors, `None` if either phrase
/// is out of vocabulary or averages to the zero vector.
pub fn phrase_similarity(a: &str, b: &str, table: &EmbeddingTable) -> Option<f64> {
    let u = phrase_vector(a, table)?;
    let v = phrase_vector(b, table)?;
    cosine_similarity(&u, &v).ok()
}

use std::collections::HashMap;
use std::path::Path;

use crate::error::{invalid, parse_err, Result};
use crate::rng::Rng;

/// Dense word vectors, one row per word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    width: usize,
}

impl WordVectorTable {
    pub fn new(words: Vec<String>, vectors: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(invalid("word vector width must be >= 1"));
        }
        if vectors.len() != words.len() * width {
            return Err(invalid(format!(
                "{} values cannot hold {} vectors of width {width}",
                vectors.len(),
                words.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(invalid("word vectors must be finite"));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || index.insert(w.clone(), i).is_some() {
                return Err(invalid(format!("duplicate or empty word {w:?}")));
            }
        }
        Ok(Self {
            words,
            index,
            vectors,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.width..(i + 1) * self.width]
    }

    /// Cosine similarity; zero when either vector has zero norm.
    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let (va, vb) = (self.vector(a), self.vector(b));
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        let na: f64 = va.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// The `k` most cosine-similar other words, best first; equal
    /// similarities keep table order.
    pub fn nearest(&self, i: usize, k: usize) -> Vec<usize> {
        let mut cands: Vec<(f64, usize)> = (0..self.len())
            .filter(|&j| j != i)
            .map(|j| (self.cosine(i, j), j))
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        cands.into_iter().take(k).map(|(_, j)| j).collect()
    }

    /// Parses the `V k` header followed by `word v1 … vk` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let mut head = header.split_whitespace();
        let parse_usize = |s: Option<&str>| -> Result<usize> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(hline + 1, "header must be \"V k\""))
        };
        let count = parse_usize(head.next())?;
        let width = parse_usize(head.next())?;
        if head.next().is_some() {
            return Err(parse_err(hline + 1, "header must be \"V k\""));
        }
        let mut words = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * width);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("nonblank line");
            let row: Vec<f64> = parts
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(i + 1, format!("bad number: {e}")))?;
            if row.len() != width {
                return Err(parse_err(
                    i + 1,
                    format!("expected {width} values, found {}", row.len()),
                ));
            }
            words.push(word.to_string());
            vectors.extend(row);
        }
        if words.len() != count {
            return Err(parse_err(
                hline + 1,
                format!("header declares {count} words, file has {}", words.len()),
            ));
        }
        Self::new(words, vectors, width)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.width);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in self.vector(i) {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Neighbor lists for a fixed `k_nn`, computed once per table.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    table: WordVectorTable,
    k_nn: usize,
    neighbors: Vec<Vec<usize>>,
}

impl NeighborIndex {
    pub fn build(table: WordVectorTable, k_nn: usize) -> Result<Self> {
        if k_nn == 0 {
            return Err(invalid("neighbor count must be >= 1"));
        }
        let neighbors = crate::par::map_range(table.len(), |i| table.nearest(i, k_nn));
        Ok(Self {
            table,
            k_nn,
            neighbors,
        })
    }

    pub fn table(&self) -> &WordVectorTable {
        &self.table
    }

    pub fn k_nn(&self) -> usize {
        self.k_nn
    }

    pub fn neighbors_of(&self, word: &str) -> Option<Vec<&str>> {
        let i = self.table.index_of(word)?;
        Some(
            self.neighbors[i]
                .iter()
                .map(|&j| self.table.words[j].as_str())
                .collect(),
        )
    }
}

/// Replaces each in-table word with probability `rate` by a uniform draw
/// from its `k_nn` nearest neighbours.
pub fn embedding_replace(
    tokens: &[String],
    index: &NeighborIndex,
    rate: f64,
    rng: &mut Rng,
) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            let Some(i) = index.table.index_of(t) else {
                return t.clone();
            };
            let nbrs = &index.neighbors[i];
            if nbrs.is_empty() || !rng.bernoulli(rate) {
                return t.clone();
            }
            index.table.words[nbrs[rng.below(nbrs.len())]].clone()
        })
        .collect()
}

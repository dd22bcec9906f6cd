use crate::error::{invalid, Result};
use crate::rng::Rng;

/// Vocabulary size, embedding width and class count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub vocab: usize,
    pub dim: usize,
    pub classes: usize,
}

impl Dims {
    pub fn new(vocab: usize, dim: usize, classes: usize) -> Result<Self> {
        if vocab == 0 || dim == 0 || classes < 2 {
            return Err(invalid(format!(
                "need V >= 1, d >= 1, C >= 2; got V={vocab}, d={dim}, C={classes}"
            )));
        }
        Ok(Self { vocab, dim, classes })
    }
}

/// Classifier weights: embeddings (V×d), head weights (d×C) and head bias (C),
/// all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dims: Dims,
    pub(crate) embeddings: Vec<f64>,
    pub(crate) head_weights: Vec<f64>,
    pub(crate) head_bias: Vec<f64>,
}

/// Same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    dims: Dims,
    pub(crate) embeddings: Vec<f64>,
    pub(crate) head_weights: Vec<f64>,
    pub(crate) head_bias: Vec<f64>,
}

fn check_parts(dims: Dims, emb: &[f64], w: &[f64], b: &[f64]) -> Result<()> {
    if emb.len() != dims.vocab * dims.dim
        || w.len() != dims.dim * dims.classes
        || b.len() != dims.classes
    {
        return Err(invalid(format!(
            "parameter buffers do not match dims {dims:?}: {}, {}, {}",
            emb.len(),
            w.len(),
            b.len()
        )));
    }
    if emb.iter().chain(w).chain(b).any(|v| !v.is_finite()) {
        return Err(invalid("parameters must be finite"));
    }
    Ok(())
}

impl ModelParams {
    pub fn from_parts(
        dims: Dims,
        embeddings: Vec<f64>,
        head_weights: Vec<f64>,
        head_bias: Vec<f64>,
    ) -> Result<Self> {
        let dims = Dims::new(dims.vocab, dims.dim, dims.classes)?;
        check_parts(dims, &embeddings, &head_weights, &head_bias)?;
        Ok(Self {
            dims,
            embeddings,
            head_weights,
            head_bias,
        })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            embeddings: vec![0.0; dims.vocab * dims.dim],
            head_weights: vec![0.0; dims.dim * dims.classes],
            head_bias: vec![0.0; dims.classes],
        }
    }

    /// Uniform initialisation in `[-scale, scale]` for embeddings and head
    /// weights; zero bias.
    pub fn random(dims: Dims, scale: f64, rng: &mut Rng) -> Self {
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| (2.0 * rng.unit() - 1.0) * scale).collect()
        };
        let embeddings = draw(dims.vocab * dims.dim);
        let head_weights = draw(dims.dim * dims.classes);
        Self {
            dims,
            embeddings,
            head_weights,
            head_bias: vec![0.0; dims.classes],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    pub fn embedding_row(&self, token: usize) -> &[f64] {
        let d = self.dims.dim;
        &self.embeddings[token * d..(token + 1) * d]
    }

    pub fn head_weights(&self) -> &[f64] {
        &self.head_weights
    }

    pub fn head_bias(&self) -> &[f64] {
        &self.head_bias
    }

    /// Flat views of the three blocks, in a fixed order.
    pub fn blocks(&self) -> [&[f64]; 3] {
        [&self.embeddings, &self.head_weights, &self.head_bias]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [
            &mut self.embeddings,
            &mut self.head_weights,
            &mut self.head_bias,
        ]
    }

    pub fn num_values(&self) -> usize {
        self.embeddings.len() + self.head_weights.len() + self.head_bias.len()
    }

    /// Reads the i-th value across the concatenated blocks.
    pub fn get_flat(&self, i: usize) -> f64 {
        flat_get(self.blocks(), i)
    }

    pub fn set_flat(&mut self, i: usize, v: f64) {
        *flat_get_mut(self.blocks_mut(), i) = v;
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl Gradient {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            embeddings: vec![0.0; dims.vocab * dims.dim],
            head_weights: vec![0.0; dims.dim * dims.classes],
            head_bias: vec![0.0; dims.classes],
        }
    }

    pub fn from_parts(
        dims: Dims,
        embeddings: Vec<f64>,
        head_weights: Vec<f64>,
        head_bias: Vec<f64>,
    ) -> Result<Self> {
        check_parts(dims, &embeddings, &head_weights, &head_bias)?;
        Ok(Self {
            dims,
            embeddings,
            head_weights,
            head_bias,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    pub fn embedding_row(&self, token: usize) -> &[f64] {
        let d = self.dims.dim;
        &self.embeddings[token * d..(token + 1) * d]
    }

    pub fn head_weights(&self) -> &[f64] {
        &self.head_weights
    }

    pub fn head_bias(&self) -> &[f64] {
        &self.head_bias
    }

    pub fn blocks(&self) -> [&[f64]; 3] {
        [&self.embeddings, &self.head_weights, &self.head_bias]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [
            &mut self.embeddings,
            &mut self.head_weights,
            &mut self.head_bias,
        ]
    }

    pub fn get_flat(&self, i: usize) -> f64 {
        flat_get(self.blocks(), i)
    }

    pub fn num_values(&self) -> usize {
        self.embeddings.len() + self.head_weights.len() + self.head_bias.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|&v| v == 0.0))
    }
}

fn flat_get(blocks: [&[f64]; 3], mut i: usize) -> f64 {
    for b in blocks {
        if i < b.len() {
            return b[i];
        }
        i -= b.len();
    }
    panic!("flat index out of range");
}

fn flat_get_mut(blocks: [&mut Vec<f64>; 3], mut i: usize) -> &mut f64 {
    for b in blocks {
        if i < b.len() {
            return &mut b[i];
        }
        i -= b.len();
    }
    panic!("flat index out of range");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_validation() {
        assert!(Dims::new(1, 1, 2).is_ok());
        assert!(Dims::new(0, 1, 2).is_err());
        assert!(Dims::new(1, 0, 2).is_err());
        assert!(Dims::new(1, 1, 1).is_err());
    }

    #[test]
    fn from_parts_checks_shapes_and_finiteness() {
        let dims = Dims::new(2, 1, 2).unwrap();
        assert!(ModelParams::from_parts(dims, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).is_ok());
        assert!(ModelParams::from_parts(dims, vec![0.0; 3], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(
            ModelParams::from_parts(dims, vec![f64::NAN, 0.0], vec![0.0; 2], vec![0.0; 2]).is_err()
        );
    }

    #[test]
    fn flat_indexing_spans_blocks() {
        let dims = Dims::new(2, 1, 2).unwrap();
        let mut p =
            ModelParams::from_parts(dims, vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]).unwrap();
        let all: Vec<f64> = (0..p.num_values()).map(|i| p.get_flat(i)).collect();
        assert_eq!(all, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        p.set_flat(4, -1.0);
        assert_eq!(p.head_bias(), &[-1.0, 6.0]);
    }
}

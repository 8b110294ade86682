//! Minimal row-major tensor for batched features and activations.

/// Dense row-major array of f64 values. The first axis is always the
/// batch axis for data flowing through networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(values.len(), expected, "value count must match shape product");
        Self { shape, values }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, values: vec![0.0; n] }
    }

    /// Stack per-sample feature vectors into a [n, dim] tensor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let dim = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == dim), "ragged rows");
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            values.extend_from_slice(r);
        }
        Self { shape: vec![rows.len(), dim], values }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Number of samples (size of the batch axis).
    pub fn batch_len(&self) -> usize {
        self.shape[0]
    }

    /// Flat length of one sample (product of the non-batch axes).
    pub fn sample_size(&self) -> usize {
        self.shape[1..].iter().product()
    }

    /// Flat view of one sample.
    pub fn sample(&self, i: usize) -> &[f64] {
        let s = self.sample_size();
        &self.values[i * s..(i + 1) * s]
    }

    /// Gather samples by index into a new tensor (repeatable indices allowed).
    pub fn gather(&self, indices: &[usize]) -> Tensor {
        let s = self.sample_size();
        let mut values = Vec::with_capacity(indices.len() * s);
        for &i in indices {
            values.extend_from_slice(self.sample(i));
        }
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        Tensor { shape, values }
    }
}

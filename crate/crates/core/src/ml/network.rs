//! Feed-forward regression models assembled from layer specs, with a flat
//! weight vector and mean-squared-error backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{layer_backward, layer_forward, Activation, LayerCache, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

const STREAM_INIT: u64 = 0x4d4c_494e;

/// Layer stack over a flat weight vector. The per-sample input shape is
/// fixed at construction; all chained layer shapes are validated then.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkModel {
    input_shape: Vec<usize>,
    specs: Vec<LayerSpec>,
    weights: Vec<f64>,
}

/// Loss and gradients of a mean-squared-error backward pass.
pub struct BackwardResult {
    pub loss: f64,
    /// dL/dw, same length and order as the model weights.
    pub weight_grad: Vec<f64>,
    /// dL/dx, same shape as the input batch.
    pub input_grad: Tensor,
}

impl NetworkModel {
    /// Validate the chain of layer shapes and allocate zeroed weights.
    pub fn new(input_shape: Vec<usize>, specs: Vec<LayerSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        let mut shape = input_shape.clone();
        for spec in &specs {
            shape = spec.output_shape(&shape)?;
        }
        if shape != [1] {
            return Err(Error::InvalidArgument(format!(
                "regression head must end with a single output, got {shape:?}"
            )));
        }
        let n_params = specs.iter().map(LayerSpec::param_count).sum();
        Ok(Self { input_shape, specs, weights: vec![0.0; n_params] })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.weights.len(), "weight vector length mismatch");
        self.weights.copy_from_slice(w);
    }

    /// Fan-in-scaled uniform initialization of weights; biases stay zero.
    pub fn init_weights(&mut self, seed: u64) {
        let mut offset = 0;
        for (idx, spec) in self.specs.iter().enumerate() {
            let count = spec.param_count();
            if count == 0 {
                continue;
            }
            let (fan_in, n_bias) = match *spec {
                LayerSpec::Dense { in_features, out_features, .. } => (in_features, out_features),
                LayerSpec::Conv2d { in_c, kernel, out_c, .. } => (kernel * kernel * in_c, out_c),
                LayerSpec::MaxPool2d { .. } => unreachable!("pool layers have no parameters"),
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut rng = derive_rng(seed, &[STREAM_INIT, idx as u64]);
            for w in &mut self.weights[offset..offset + count - n_bias] {
                *w = rng.gen_range(-bound..bound);
            }
            for w in &mut self.weights[offset + count - n_bias..offset + count] {
                *w = 0.0;
            }
            offset += count;
        }
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.shape()[1..] != self.input_shape {
            return Err(Error::DimensionMismatch(format!(
                "batch shape {:?} does not match model input {:?}",
                &batch.shape()[1..],
                self.input_shape
            )));
        }
        if batch.batch_len() == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        Ok(())
    }

    fn run_forward(&self, batch: &Tensor) -> (Vec<f64>, Vec<LayerCache>) {
        let mut caches = Vec::with_capacity(self.specs.len());
        let mut current = batch.clone();
        let mut offset = 0;
        for spec in &self.specs {
            let count = spec.param_count();
            let (next, cache) = layer_forward(spec, &self.weights[offset..offset + count], &current);
            caches.push(cache);
            current = next;
            offset += count;
        }
        (current.values().to_vec(), caches)
    }

    /// Predictions for a batch, one value per sample.
    pub fn forward(&self, batch: &Tensor) -> Result<Vec<f64>> {
        self.check_batch(batch)?;
        Ok(self.run_forward(batch).0)
    }

    /// Mean-squared-error loss over the batch and its gradients with
    /// respect to all weights and to the input features.
    pub fn backward(&self, batch: &Tensor, targets: &[f64]) -> Result<BackwardResult> {
        self.check_batch(batch)?;
        if targets.len() != batch.batch_len() {
            return Err(Error::DimensionMismatch(format!(
                "{} targets for a batch of {}",
                targets.len(),
                batch.batch_len()
            )));
        }
        let n = batch.batch_len();
        let (preds, caches) = self.run_forward(batch);
        let mut loss = 0.0;
        let mut grad: Vec<f64> = Vec::with_capacity(n);
        for (p, y) in preds.iter().zip(targets) {
            let r = p - y;
            loss += r * r;
            grad.push(2.0 * r / n as f64);
        }
        loss /= n as f64;

        let mut weight_grad = vec![0.0; self.weights.len()];
        let mut offsets = Vec::with_capacity(self.specs.len());
        let mut offset = 0;
        let mut input_lens = Vec::with_capacity(self.specs.len());
        let mut shape = self.input_shape.clone();
        for spec in &self.specs {
            offsets.push(offset);
            offset += spec.param_count();
            input_lens.push(n * shape.iter().product::<usize>());
            shape = spec.output_shape(&shape).expect("validated at construction");
        }
        let mut upstream = grad;
        for (idx, spec) in self.specs.iter().enumerate().rev() {
            let count = spec.param_count();
            let w = &self.weights[offsets[idx]..offsets[idx] + count];
            let (gw, gx) = layer_backward(spec, w, &caches[idx], &upstream, input_lens[idx]);
            weight_grad[offsets[idx]..offsets[idx] + count].copy_from_slice(&gw);
            upstream = gx;
        }
        let mut input_shape = vec![n];
        input_shape.extend_from_slice(&self.input_shape);
        Ok(BackwardResult { loss, weight_grad, input_grad: Tensor::new(input_shape, upstream) })
    }
}

/// Fully connected regressor: input → 400 → 200 → 100 → 50 → 1 with
/// rectifier hidden activations and a linear head.
pub fn fnn_build(input_dim: usize) -> NetworkModel {
    assert!(input_dim >= 1, "input dimension must be positive");
    let sizes = [input_dim, 400, 200, 100, 50];
    let mut specs = Vec::with_capacity(5);
    for w in sizes.windows(2) {
        specs.push(LayerSpec::Dense { in_features: w[0], out_features: w[1], activation: Activation::Relu });
    }
    specs.push(LayerSpec::Dense { in_features: 50, out_features: 1, activation: Activation::Linear });
    NetworkModel::new(vec![input_dim], specs).expect("FNN shapes chain by construction")
}

/// Convolutional variants sized for the three correlation-grid inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CnnVariant {
    /// 10×10 grid, 2×2 kernels and pools.
    D5,
    /// 16×16 grid, 3×3 kernels and pools.
    D8,
    /// 20×20 grid, 3×3 kernels and pools.
    D10,
}

impl CnnVariant {
    pub fn expected_side(self) -> usize {
        match self {
            CnnVariant::D5 => 10,
            CnnVariant::D8 => 16,
            CnnVariant::D10 => 20,
        }
    }

    fn kernel(self) -> usize {
        match self {
            CnnVariant::D5 => 2,
            CnnVariant::D8 | CnnVariant::D10 => 3,
        }
    }
}

/// Convolutional regressor: conv(32) → pool → conv(64) → pool → conv(64)
/// → dense(64) → dense(32) → dense(1), all stride 1, kernel and pool size
/// fixed per variant.
pub fn cnn_build(side: usize, variant: CnnVariant) -> Result<NetworkModel> {
    if side != variant.expected_side() {
        return Err(Error::InvalidArgument(format!(
            "variant expects a {}x{} grid, got side {side}",
            variant.expected_side(),
            variant.expected_side()
        )));
    }
    let k = variant.kernel();
    let mut specs = Vec::new();
    let mut h = side;
    let mut c = 1;
    for (i, out_c) in [32usize, 64, 64].iter().enumerate() {
        specs.push(LayerSpec::Conv2d { in_h: h, in_w: h, in_c: c, kernel: k, out_c: *out_c, activation: Activation::Relu });
        h = h - k + 1;
        c = *out_c;
        if i < 2 {
            specs.push(LayerSpec::MaxPool2d { in_h: h, in_w: h, channels: c, pool: k });
            h = h - k + 1;
        }
    }
    let flat = h * h * c;
    specs.push(LayerSpec::Dense { in_features: flat, out_features: 64, activation: Activation::Relu });
    specs.push(LayerSpec::Dense { in_features: 64, out_features: 32, activation: Activation::Relu });
    specs.push(LayerSpec::Dense { in_features: 32, out_features: 1, activation: Activation::Linear });
    NetworkModel::new(vec![side, side, 1], specs)
}

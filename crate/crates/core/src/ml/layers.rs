//! Network layers: dense affine maps, valid 2D convolutions, and
//! overlapping (stride-1) max pooling, with hand-written backward passes.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Linear,
}

/// Layer shape contract. Spatial layers use channels-last layout
/// [batch, height, width, channels]; convolutions and pools are valid
/// (no padding) with stride 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    Dense {
        in_features: usize,
        out_features: usize,
        activation: Activation,
    },
    Conv2d {
        in_h: usize,
        in_w: usize,
        in_c: usize,
        kernel: usize,
        out_c: usize,
        activation: Activation,
    },
    MaxPool2d {
        in_h: usize,
        in_w: usize,
        channels: usize,
        pool: usize,
    },
}

impl LayerSpec {
    /// Trainable parameter count (weights plus biases; pooling has none).
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_features, out_features, .. } => {
                in_features * out_features + out_features
            }
            LayerSpec::Conv2d { in_c, kernel, out_c, .. } => {
                kernel * kernel * in_c * out_c + out_c
            }
            LayerSpec::MaxPool2d { .. } => 0,
        }
    }

    /// Per-sample output shape given a per-sample input shape; errors on
    /// incompatible shapes.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let flat: usize = input.iter().product();
        match *self {
            LayerSpec::Dense { in_features, out_features, .. } => {
                if flat != in_features {
                    return Err(Error::DimensionMismatch(format!(
                        "dense layer expects {in_features} input features, got shape {input:?}"
                    )));
                }
                Ok(vec![out_features])
            }
            LayerSpec::Conv2d { in_h, in_w, in_c, kernel, out_c, .. } => {
                if input != [in_h, in_w, in_c] {
                    return Err(Error::DimensionMismatch(format!(
                        "conv layer expects [{in_h}, {in_w}, {in_c}], got {input:?}"
                    )));
                }
                if kernel == 0 || kernel > in_h || kernel > in_w {
                    return Err(Error::InvalidArgument(format!(
                        "kernel {kernel} incompatible with {in_h}x{in_w} input"
                    )));
                }
                Ok(vec![in_h - kernel + 1, in_w - kernel + 1, out_c])
            }
            LayerSpec::MaxPool2d { in_h, in_w, channels, pool } => {
                if input != [in_h, in_w, channels] {
                    return Err(Error::DimensionMismatch(format!(
                        "pool layer expects [{in_h}, {in_w}, {channels}], got {input:?}"
                    )));
                }
                if pool == 0 || pool > in_h || pool > in_w {
                    return Err(Error::InvalidArgument(format!(
                        "pool size {pool} incompatible with {in_h}x{in_w} input"
                    )));
                }
                Ok(vec![in_h - pool + 1, in_w - pool + 1, channels])
            }
        }
    }
}

/// Forward-pass byproducts each layer needs for its backward pass.
pub(crate) enum LayerCache {
    Dense {
        /// Flattened input, [n, in_features].
        input: Array2<f64>,
        /// Post-activation output, [n, out_features].
        output: Array2<f64>,
    },
    Conv2d {
        /// im2col patches, [n·oh·ow, kernel²·in_c].
        patches: Array2<f64>,
        /// Post-activation output, [n·oh·ow, out_c].
        output: Array2<f64>,
    },
    MaxPool2d {
        /// Flat input index of the window maximum, one per output value.
        argmax: Vec<usize>,
    },
}

fn apply_activation(a: Activation, out: &mut Array2<f64>) {
    if a == Activation::Relu {
        out.mapv_inplace(|v| v.max(0.0));
    }
}

/// Mask the upstream gradient by the rectifier's active set (output > 0).
fn masked_grad(a: Activation, output: &Array2<f64>, grad_out: &[f64]) -> Array2<f64> {
    let mut gy = Array2::from_shape_vec(output.raw_dim(), grad_out.to_vec())
        .expect("gradient shape matches output");
    if a == Activation::Relu {
        gy.zip_mut_with(output, |g, &o| {
            if o <= 0.0 {
                *g = 0.0;
            }
        });
    }
    gy
}

/// Gather stride-1 valid-convolution patches into a [n·oh·ow, k²·c] matrix
/// whose column order matches the [k, k, in_c, out_c] weight layout.
fn im2col(input: &[f64], n: usize, h: usize, w: usize, c: usize, k: usize) -> Array2<f64> {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut patches = Array2::zeros((n * oh * ow, k * k * c));
    for i in 0..n {
        let sample = &input[i * h * w * c..(i + 1) * h * w * c];
        for r in 0..oh {
            for col in 0..ow {
                let row_idx = (i * oh + r) * ow + col;
                let mut out_col = 0;
                for kr in 0..k {
                    for kc in 0..k {
                        let base = ((r + kr) * w + (col + kc)) * c;
                        for ci in 0..c {
                            patches[(row_idx, out_col)] = sample[base + ci];
                            out_col += 1;
                        }
                    }
                }
            }
        }
    }
    patches
}

/// Run one layer forward. Shapes were validated at model construction;
/// mismatches here are programming errors.
pub(crate) fn layer_forward(spec: &LayerSpec, w: &[f64], input: &Tensor) -> (Tensor, LayerCache) {
    assert_eq!(w.len(), spec.param_count(), "weight slice length mismatch");
    let n = input.batch_len();
    match *spec {
        LayerSpec::Dense { in_features, out_features, activation } => {
            assert_eq!(input.sample_size(), in_features);
            let x = Array2::from_shape_vec((n, in_features), input.values().to_vec())
                .expect("input shape");
            let wm = ArrayView2::from_shape((in_features, out_features), &w[..in_features * out_features])
                .expect("weight shape");
            let b = ArrayView1::from(&w[in_features * out_features..]);
            let mut out = x.dot(&wm);
            out += &b;
            apply_activation(activation, &mut out);
            let tensor = Tensor::new(vec![n, out_features], out.iter().copied().collect());
            (tensor, LayerCache::Dense { input: x, output: out })
        }
        LayerSpec::Conv2d { in_h, in_w, in_c, kernel, out_c, activation } => {
            assert_eq!(input.sample_size(), in_h * in_w * in_c);
            let (oh, ow) = (in_h - kernel + 1, in_w - kernel + 1);
            let patches = im2col(input.values(), n, in_h, in_w, in_c, kernel);
            let kkc = kernel * kernel * in_c;
            let wm = ArrayView2::from_shape((kkc, out_c), &w[..kkc * out_c]).expect("weight shape");
            let b = ArrayView1::from(&w[kkc * out_c..]);
            let mut out = patches.dot(&wm);
            out += &b;
            apply_activation(activation, &mut out);
            let tensor = Tensor::new(vec![n, oh, ow, out_c], out.iter().copied().collect());
            (tensor, LayerCache::Conv2d { patches, output: out })
        }
        LayerSpec::MaxPool2d { in_h, in_w, channels, pool } => {
            assert_eq!(input.sample_size(), in_h * in_w * channels);
            let (oh, ow) = (in_h - pool + 1, in_w - pool + 1);
            let mut values = Vec::with_capacity(n * oh * ow * channels);
            let mut argmax = Vec::with_capacity(n * oh * ow * channels);
            let x = input.values();
            for i in 0..n {
                let base_s = i * in_h * in_w * channels;
                for r in 0..oh {
                    for col in 0..ow {
                        for ch in 0..channels {
                            let mut best = f64::NEG_INFINITY;
                            let mut best_idx = 0;
                            for pr in 0..pool {
                                for pc in 0..pool {
                                    let idx = base_s + (((r + pr) * in_w) + (col + pc)) * channels + ch;
                                    if x[idx] > best {
                                        best = x[idx];
                                        best_idx = idx;
                                    }
                                }
                            }
                            values.push(best);
                            argmax.push(best_idx);
                        }
                    }
                }
            }
            let tensor = Tensor::new(vec![n, oh, ow, channels], values);
            (tensor, LayerCache::MaxPool2d { argmax })
        }
    }
}

/// Run one layer backward: upstream gradient (flat, output-shaped) in,
/// (parameter gradient, input gradient) out. The input gradient is flat
/// and input-shaped.
pub(crate) fn layer_backward(
    spec: &LayerSpec,
    w: &[f64],
    cache: &LayerCache,
    grad_out: &[f64],
    input_len: usize,
) -> (Vec<f64>, Vec<f64>) {
    match (*spec, cache) {
        (LayerSpec::Dense { in_features, out_features, activation }, LayerCache::Dense { input, output }) => {
            let gy = masked_grad(activation, output, grad_out);
            let wm = ArrayView2::from_shape((in_features, out_features), &w[..in_features * out_features])
                .expect("weight shape");
            let dw = input.t().dot(&gy);
            let db: Array1<f64> = gy.sum_axis(Axis(0));
            let dx = gy.dot(&wm.t());
            let mut grad_w = Vec::with_capacity(spec.param_count());
            grad_w.extend(dw.iter());
            grad_w.extend(db.iter());
            (grad_w, dx.iter().copied().collect())
        }
        (LayerSpec::Conv2d { in_h, in_w, in_c, kernel, out_c, activation }, LayerCache::Conv2d { patches, output }) => {
            let gy = masked_grad(activation, output, grad_out);
            let kkc = kernel * kernel * in_c;
            let wm = ArrayView2::from_shape((kkc, out_c), &w[..kkc * out_c]).expect("weight shape");
            let dw = patches.t().dot(&gy);
            let db: Array1<f64> = gy.sum_axis(Axis(0));
            let dpatches = gy.dot(&wm.t());
            let mut grad_w = Vec::with_capacity(spec.param_count());
            grad_w.extend(dw.iter());
            grad_w.extend(db.iter());

            // Scatter patch gradients back onto the input (col2im).
            let n = patches.nrows() / ((in_h - kernel + 1) * (in_w - kernel + 1));
            let (oh, ow) = (in_h - kernel + 1, in_w - kernel + 1);
            let mut grad_in = vec![0.0; input_len];
            for i in 0..n {
                let base_s = i * in_h * in_w * in_c;
                for r in 0..oh {
                    for col in 0..ow {
                        let row_idx = (i * oh + r) * ow + col;
                        let mut pcol = 0;
                        for kr in 0..kernel {
                            for kc in 0..kernel {
                                let base = base_s + (((r + kr) * in_w) + (col + kc)) * in_c;
                                for ci in 0..in_c {
                                    grad_in[base + ci] += dpatches[(row_idx, pcol)];
                                    pcol += 1;
                                }
                            }
                        }
                    }
                }
            }
            (grad_w, grad_in)
        }
        (LayerSpec::MaxPool2d { .. }, LayerCache::MaxPool2d { argmax }) => {
            let mut grad_in = vec![0.0; input_len];
            for (g, &idx) in grad_out.iter().zip(argmax) {
                grad_in[idx] += g;
            }
            (Vec::new(), grad_in)
        }
        _ => unreachable!("cache variant matches layer kind"),
    }
}

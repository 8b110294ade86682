//! Joint training of measurement parameters and network weights.
//!
//! Each epoch runs one minibatch pass of network updates on correlation
//! features from the current θ, then takes a single θ step whose
//! gradient chains the network's input gradient through the analytic
//! correlation Jacobian; features are regenerated after every θ step.
//! θ gradients accumulate over training samples in ascending index
//! order. An optional warm-up holds θ fixed for the first epochs so
//! measurement updates are driven by a trained network rather than a
//! random one.

use serde::{Deserialize, Serialize};

use super::network::{fnn_build, NetworkModel};
use super::optimizer::Adam;
use super::tensor::Tensor;
use super::train::{epoch_order, evaluate, split_indices, EpochStats, History, Metrics, TrainConfig};
use crate::error::{Error, Result};
use crate::measurements::{cglmp_basis, correlation_jacobian, correlations, unitary_to_params, MeasurementParams};
use crate::qcore::{DensityMatrix, Subsystem};

/// Initial measurement parameters for the joint loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaInit {
    /// θ = 0: every device starts as the computational basis.
    Zeros,
    /// Warm start at the fixed Fourier-phase bases.
    Cglmp,
}

/// Options beyond the shared training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridOptions {
    pub init: ThetaInit,
    /// Constrain both parties to the same device parameters.
    pub tie_parties: bool,
    /// Epochs of network-only training before θ steps begin.
    pub theta_warmup: usize,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self { init: ThetaInit::Zeros, tie_parties: false, theta_warmup: 0 }
    }
}

/// Best-validation snapshot of the jointly trained system.
#[derive(Debug, Clone)]
pub struct HybridState {
    pub params: MeasurementParams,
    pub network: NetworkModel,
    /// Epochs actually run before stopping.
    pub epochs_run: usize,
    pub best_val_mse: f64,
}

impl HybridState {
    /// Correlation features of `states` under this snapshot's measurements.
    pub fn features(&self, states: &[DensityMatrix]) -> Result<Tensor> {
        features_for(states, &self.params)
    }

    /// MSE and residuals on a labeled test set.
    pub fn evaluate(&self, labeled: &[(DensityMatrix, f64)]) -> Result<Metrics> {
        let states: Vec<DensityMatrix> = labeled.iter().map(|(s, _)| s.clone()).collect();
        let labels: Vec<f64> = labeled.iter().map(|(_, y)| *y).collect();
        evaluate(&self.network, &self.features(&states)?, &labels)
    }
}

fn features_for(states: &[DensityMatrix], params: &MeasurementParams) -> Result<Tensor> {
    let (a_dev, b_dev) = params.to_measurements()?;
    let mut rows = Vec::with_capacity(states.len());
    for s in states {
        rows.push(correlations(s, &a_dev, &b_dev)?.values().to_vec());
    }
    Ok(Tensor::from_rows(&rows))
}

fn initial_params(d: usize, n: usize, options: &HybridOptions) -> Result<MeasurementParams> {
    let mut params = MeasurementParams::zeros(d, n);
    if options.init == ThetaInit::Cglmp {
        for k in 1..=n {
            let a = cglmp_basis(d, n, Subsystem::A, k)?;
            params.theta_mut(k - 1).copy_from_slice(&unitary_to_params(a.eigenvectors()));
            let b = if options.tie_parties {
                a
            } else {
                cglmp_basis(d, n, Subsystem::B, k)?
            };
            params.theta_mut(n + k - 1).copy_from_slice(&unitary_to_params(b.eigenvectors()));
        }
    }
    Ok(params)
}

/// MSE over all labeled states plus its gradients with respect to all
/// measurement parameters (flattened device-major, matching
/// `MeasurementParams::flatten`) and all network weights. This is the
/// full composed map the joint loop descends; exposed for gradient
/// verification.
pub fn composed_loss_and_grads(
    states: &[(DensityMatrix, f64)],
    params: &MeasurementParams,
    model: &NetworkModel,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let all: Vec<DensityMatrix> = states.iter().map(|(s, _)| s.clone()).collect();
    let features = features_for(&all, params)?;
    let indices: Vec<usize> = (0..states.len()).collect();
    composed_grads_indexed(states, &indices, params, model, &features)
}

/// Composed gradients over a subset of samples with precomputed features.
fn composed_grads_indexed(
    states: &[(DensityMatrix, f64)],
    indices: &[usize],
    params: &MeasurementParams,
    model: &NetworkModel,
    features: &Tensor,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n_total = indices.len();
    let ppd = params.params_per_device();
    let n_dev = params.num_devices();
    let mut theta_grad = vec![0.0; n_dev * ppd];
    let mut weight_grad = vec![0.0; model.param_count()];
    let mut loss = 0.0;
    for chunk in indices.chunks(256) {
        let batch = features.gather(chunk);
        let targets: Vec<f64> = chunk.iter().map(|&i| states[i].1).collect();
        let res = model.backward(&batch, &targets)?;
        let scale = chunk.len() as f64 / n_total as f64;
        loss += res.loss * scale;
        for (acc, g) in weight_grad.iter_mut().zip(&res.weight_grad) {
            *acc += g * scale;
        }
        for (pos, &i) in chunk.iter().enumerate() {
            let dldp: Vec<f64> = res.input_grad.sample(pos).iter().map(|g| g * scale).collect();
            let jac = correlation_jacobian(&states[i].0, params)?;
            let (ga, gb) = jac.chain(&dldp);
            let n = params.n_settings();
            for dev in 0..n {
                for m in 0..ppd {
                    theta_grad[dev * ppd + m] += ga[dev][m];
                    theta_grad[(n + dev) * ppd + m] += gb[dev][m];
                }
            }
        }
    }
    Ok((loss, theta_grad, weight_grad))
}

/// Jointly train measurement parameters and an FNN on correlation
/// features with default options (θ = 0 init, independent parties).
pub fn hybrid_train(
    states: &[(DensityMatrix, f64)],
    n_settings: usize,
    d: usize,
    cfg: &TrainConfig,
) -> Result<(HybridState, History)> {
    hybrid_train_with(states, n_settings, d, cfg, HybridOptions::default())
}

/// Jointly train with explicit initialization and tying options.
pub fn hybrid_train_with(
    states: &[(DensityMatrix, f64)],
    n_settings: usize,
    d: usize,
    cfg: &TrainConfig,
    options: HybridOptions,
) -> Result<(HybridState, History)> {
    cfg.validate()?;
    if n_settings == 0 {
        return Err(Error::InvalidArgument("need at least one setting per party".into()));
    }
    if states.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 labeled states".into()));
    }
    for (s, y) in states {
        if s.dim_a() != d || s.dim_b() != d {
            return Err(Error::DimensionMismatch(format!(
                "state subsystems are {}x{}, task dimension is {d}",
                s.dim_a(),
                s.dim_b()
            )));
        }
        if !y.is_finite() {
            return Err(Error::InvalidArgument("non-finite label".into()));
        }
    }

    let mut params = initial_params(d, n_settings, &options)?;
    let input_dim = n_settings * n_settings * d * d;
    let mut model = fnn_build(input_dim);
    model.init_weights(cfg.seed);

    let (train_idx, val_idx) = split_indices(states.len(), cfg.validation_fraction, cfg.seed);
    let val_labels: Vec<f64> = val_idx.iter().map(|&i| states[i].1).collect();

    let ppd = params.params_per_device();
    let n_theta = if options.tie_parties { n_settings * ppd } else { 2 * n_settings * ppd };
    let mut theta_adam = Adam::new(cfg.theta_learning_rate, n_theta);
    let mut weight_adam = Adam::new(cfg.learning_rate, model.param_count());

    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_weights = model.weights().to_vec();
    let mut best_params = params.clone();
    let mut epochs_run = 0;
    let all_states: Vec<DensityMatrix> = states.iter().map(|(s, _)| s.clone()).collect();
    // Regenerating devices revalidates the measurement invariants; the
    // features stay cached until a θ step changes them.
    let mut features = features_for(&all_states, &params)?;
    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        let order = epoch_order(&train_idx, cfg.seed, epoch);
        let mut loss_sum = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let batch = features.gather(batch_idx);
            let targets: Vec<f64> = batch_idx.iter().map(|&i| states[i].1).collect();
            let res = model.backward(&batch, &targets)?;
            if !res.loss.is_finite() {
                return Err(Error::NanLoss { epoch, detail: "hybrid network batch loss".into() });
            }
            loss_sum += res.loss * batch_idx.len() as f64;
            weight_adam.step(model.weights_mut(), &res.weight_grad);
        }
        let train_mse = loss_sum / train_idx.len() as f64;

        let val_mse = evaluate(&model, &features.gather(&val_idx), &val_labels)?.mse;
        if !val_mse.is_finite() {
            return Err(Error::NanLoss { epoch, detail: "hybrid validation loss".into() });
        }
        history.push(EpochStats { epoch, train_mse, val_mse });
        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best_weights.copy_from_slice(model.weights());
            best_params = params.clone();
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }

        // One θ step per epoch from a full pass over the training set,
        // once the warm-up has given the network informative gradients.
        if epoch < options.theta_warmup {
            continue;
        }
        let (_, theta_grad, _) = composed_grads_indexed(states, &train_idx, &params, &model, &features)?;
        if theta_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NanLoss { epoch, detail: "hybrid measurement gradient".into() });
        }
        let mut flat = params.flatten();
        if options.tie_parties {
            let half = n_settings * ppd;
            let mut tied_grad = vec![0.0; half];
            for i in 0..half {
                tied_grad[i] = theta_grad[i] + theta_grad[half + i];
            }
            let mut tied = flat[..half].to_vec();
            theta_adam.step(&mut tied, &tied_grad);
            flat[..half].copy_from_slice(&tied);
            flat[half..].copy_from_slice(&tied);
        } else {
            theta_adam.step(&mut flat, &theta_grad);
        }
        params.assign_flat(&flat);
        features = features_for(&all_states, &params)?;
    }

    model.set_weights(&best_weights);
    let state = HybridState { params: best_params, network: model, epochs_run, best_val_mse: best_val };
    Ok((state, History { epochs: history, best_epoch, best_val_mse: best_val }))
}

//! Minibatch training loop with validation-based early stopping.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::NetworkModel;
use super::optimizer::Adam;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

const STREAM_SPLIT: u64 = 0x4d4c_5350;
const STREAM_SHUFFLE: u64 = 0x4d4c_5348;

/// Training hyperparameters. `theta_lr` applies only to measurement
/// parameters in the joint loop; plain network training ignores it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub theta_learning_rate: f64,
    pub seed: u64,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            max_epochs: 500,
            learning_rate: 1e-3,
            theta_learning_rate: 1e-2,
            seed: 0,
            patience: 30,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("batch size, epochs, and patience must be positive".into()));
        }
        if self.learning_rate <= 0.0 || self.theta_learning_rate <= 0.0 {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(Error::Config("validation fraction must lie in (0, 0.5]".into()));
        }
        Ok(())
    }
}

/// Per-epoch record of the training trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Full trajectory plus the best validation point (whose weights the
/// trained model carries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

/// Evaluation result: MSE plus per-sample residuals (prediction − label).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub residuals: Vec<f64>,
}

/// Deterministic index split into (train, validation) by seeded shuffle.
pub(crate) fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(seed, &[STREAM_SPLIT]);
    indices.shuffle(&mut rng);
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let val = indices.split_off(n - n_val);
    (indices, val)
}

/// Seeded per-epoch shuffle of the training indices.
pub(crate) fn epoch_order(train: &[usize], seed: u64, epoch: usize) -> Vec<usize> {
    let mut order = train.to_vec();
    let mut rng = derive_rng(seed, &[STREAM_SHUFFLE, epoch as u64]);
    order.shuffle(&mut rng);
    order
}

/// Train in place: minibatch Adam with early stopping on validation MSE.
/// The model is left holding the best-validation weights.
pub fn train(model: &mut NetworkModel, features: &Tensor, labels: &[f64], cfg: &TrainConfig) -> Result<History> {
    cfg.validate()?;
    let n = features.batch_len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} samples", labels.len())));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples to hold out validation".into()));
    }
    let (train_idx, val_idx) = split_indices(n, cfg.validation_fraction, cfg.seed);
    let val_features = features.gather(&val_idx);
    let val_labels: Vec<f64> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut adam = Adam::new(cfg.learning_rate, model.param_count());
    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_weights = model.weights().to_vec();
    for epoch in 0..cfg.max_epochs {
        let order = epoch_order(&train_idx, cfg.seed, epoch);
        let mut loss_sum = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let batch = features.gather(batch_idx);
            let targets: Vec<f64> = batch_idx.iter().map(|&i| labels[i]).collect();
            let res = model.backward(&batch, &targets)?;
            if !res.loss.is_finite() {
                return Err(Error::NanLoss { epoch, detail: "training batch loss".into() });
            }
            loss_sum += res.loss * batch_idx.len() as f64;
            adam.step(model.weights_mut(), &res.weight_grad);
        }
        let train_mse = loss_sum / train_idx.len() as f64;
        let val_mse = evaluate(model, &val_features, &val_labels)?.mse;
        if !val_mse.is_finite() {
            return Err(Error::NanLoss { epoch, detail: "validation loss".into() });
        }
        history.push(EpochStats { epoch, train_mse, val_mse });
        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best_weights.copy_from_slice(model.weights());
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    model.set_weights(&best_weights);
    Ok(History { epochs: history, best_epoch, best_val_mse: best_val })
}

/// MSE and residuals of a trained model on a labeled set.
pub fn evaluate(model: &NetworkModel, features: &Tensor, labels: &[f64]) -> Result<Metrics> {
    let n = features.batch_len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} samples", labels.len())));
    }
    let mut residuals = Vec::with_capacity(n);
    let mut mse = 0.0;
    // Bounded batches keep layer caches small on big sets.
    let chunk = 512;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let preds = model.forward(&features.gather(&idx))?;
        for (p, i) in preds.iter().zip(start..end) {
            let r = p - labels[i];
            residuals.push(r);
            mse += r * r;
        }
        start = end;
    }
    Ok(Metrics { mse: mse / n as f64, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::network::fnn_build;
    use crate::ml::layers::{Activation, LayerSpec};
    use rand::Rng;

    fn small_net(input: usize, hidden: usize, seed: u64) -> NetworkModel {
        let specs = vec![
            LayerSpec::Dense { in_features: input, out_features: hidden, activation: Activation::Relu },
            LayerSpec::Dense { in_features: hidden, out_features: 1, activation: Activation::Linear },
        ];
        let mut m = NetworkModel::new(vec![input], specs).unwrap();
        m.init_weights(seed);
        m
    }

    #[test]
    fn constant_labels_are_learned_by_the_bias() {
        let mut model = small_net(3, 8, 1);
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0, 0.3, -0.2]).collect();
        let features = Tensor::from_rows(&rows);
        let labels = vec![0.7; 40];
        let cfg = TrainConfig { max_epochs: 400, batch_size: 8, learning_rate: 1e-2, seed: 3, ..TrainConfig::default() };
        let history = train(&mut model, &features, &labels, &cfg).unwrap();
        let metrics = evaluate(&model, &features, &labels).unwrap();
        assert!(metrics.mse <= 1e-6, "mse {} after {} epochs", metrics.mse, history.epochs.len());
    }

    #[test]
    fn linear_map_is_learned() {
        let mut rng = derive_rng(9, &[0]);
        let c = [0.8, -1.2, 0.4];
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<f64> = rows.iter().map(|r| r.iter().zip(&c).map(|(x, ci)| x * ci).sum()).collect();
        let features = Tensor::from_rows(&rows);
        let mut model = small_net(3, 32, 2);
        let cfg = TrainConfig { max_epochs: 200, batch_size: 16, learning_rate: 1e-2, seed: 11, ..TrainConfig::default() };
        train(&mut model, &features, &labels, &cfg).unwrap();
        let (_, val_idx) = split_indices(400, 0.1, 11);
        let val_labels: Vec<f64> = val_idx.iter().map(|&i| labels[i]).collect();
        let metrics = evaluate(&model, &features.gather(&val_idx), &val_labels).unwrap();
        assert!(metrics.mse <= 1e-4, "val mse {}", metrics.mse);
    }

    #[test]
    fn histories_reproduce_for_identical_seeds() {
        let mut rng = derive_rng(13, &[0]);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = rows.iter().map(|r| r[0] * r[1] - r[2]).collect();
        let features = Tensor::from_rows(&rows);
        let cfg = TrainConfig { max_epochs: 20, batch_size: 8, seed: 21, ..TrainConfig::default() };

        let mut m1 = small_net(4, 8, 5);
        let h1 = train(&mut m1, &features, &labels, &cfg).unwrap();
        let mut m2 = small_net(4, 8, 5);
        let h2 = train(&mut m2, &features, &labels, &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1.weights(), m2.weights());
    }

    #[test]
    fn best_weights_are_restored() {
        let mut rng = derive_rng(17, &[0]);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = rows.iter().map(|r| (3.0 * r[0]).sin()).collect();
        let features = Tensor::from_rows(&rows);
        let cfg = TrainConfig { max_epochs: 60, batch_size: 16, seed: 23, ..TrainConfig::default() };
        let mut model = small_net(2, 12, 3);
        let history = train(&mut model, &features, &labels, &cfg).unwrap();
        let (_, val_idx) = split_indices(60, 0.1, 23);
        let val_labels: Vec<f64> = val_idx.iter().map(|&i| labels[i]).collect();
        let metrics = evaluate(&model, &features.gather(&val_idx), &val_labels).unwrap();
        assert!((metrics.mse - history.best_val_mse).abs() < 1e-12);
    }

    #[test]
    fn mean_predictor_mse_equals_variance() {
        let labels = vec![1.0, 2.0, 3.0, 6.0];
        let mean = 3.0;
        let specs = vec![LayerSpec::Dense { in_features: 1, out_features: 1, activation: Activation::Linear }];
        let mut model = NetworkModel::new(vec![1], specs).unwrap();
        model.set_weights(&[0.0, mean]);
        let features = Tensor::from_rows(&[vec![0.1], vec![0.2], vec![0.3], vec![0.4]]);
        let metrics = evaluate(&model, &features, &labels).unwrap();
        let variance = labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / 4.0;
        assert!((metrics.mse - variance).abs() < 1e-9);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = TrainConfig::default();
        cfg.validation_fraction = 0.6;
        assert!(cfg.validate().is_err());
        cfg.validation_fraction = 0.1;
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
        cfg.batch_size = 128;
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn feature_dimension_mismatch_rejected() {
        let model = fnn_build(4);
        let features = Tensor::from_rows(&[vec![0.0; 5]]);
        assert!(evaluate(&model, &features, &[0.0]).is_err());
    }
}

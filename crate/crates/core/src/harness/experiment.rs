//! Experiment orchestration: dataset generation, training, evaluation.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{coherent_information, ree_upper_bound};
use crate::ml::{evaluate, fnn_build, hybrid_train_with, train, History, HybridState, Metrics};
use crate::rng::derive_rng;
use crate::states::{
    noisy_me_family, sample_ginibre, sample_separable, stratified_sample, BinReport, Ensemble,
    SamplerConfig,
};

use super::checkpoint::Checkpoint;
use super::config::{ExperimentConfig, Method, Task};
use super::dataset::{Dataset, DatasetRecord, RecordMeta};
use super::features::features_for_config;

/// Which half of an experiment a dataset feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stream(self) -> u64 {
        match self {
            // "DSTR" / "DSTE": independent streams per split.
            Split::Train => 0x4453_5452,
            Split::Test => 0x4453_5445,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

const STREAM_REE_STATE: u64 = 0x5245_4553;
const STREAM_REE_LABEL: u64 = 0x5245_454c;

/// A generated dataset plus fill diagnostics (stratified runs only).
#[derive(Debug)]
pub struct GenOutput {
    pub dataset: Dataset,
    pub bins: Vec<BinReport>,
}

/// Sample states, compute labels and features, and assemble one split.
/// Deterministic in (config, split, scale); parallelism only changes
/// scheduling, never content.
pub fn generate_dataset(cfg: &ExperimentConfig, split: Split, scale: f64) -> Result<GenOutput> {
    cfg.validate()?;
    let sizes = cfg.sizes(scale)?;
    match cfg.task {
        Task::CoherentInfo => {
            let per_bin = match split {
                Split::Train => sizes.per_bin_train,
                Split::Test => sizes.per_bin_test,
            };
            generate_coherent_info(cfg, split, per_bin)
        }
        Task::Ree => {
            let (family_n, sep_n) = match split {
                Split::Train => (sizes.family_train, sizes.separable_train),
                Split::Test => (sizes.family_test, sizes.separable_test),
            };
            generate_ree(cfg, split, family_n, sep_n)
        }
    }
}

fn generate_coherent_info(
    cfg: &ExperimentConfig,
    split: Split,
    per_bin: usize,
) -> Result<GenOutput> {
    let spec = cfg.stratification(per_bin);
    let sampler = SamplerConfig::new(cfg.seed, Ensemble::GinibreFullRank, cfg.d).validated()?;
    let sampled = stratified_sample(&spec, &sampler, coherent_information, split.stream())?;
    let descriptor = cfg.descriptor();
    let records: Vec<DatasetRecord> = sampled
        .samples
        .par_iter()
        .map(|s| {
            let features = features_for_config(cfg, &s.state)?;
            Ok(DatasetRecord {
                features,
                label: s.label,
                meta: RecordMeta {
                    family: "stratified-ginibre".into(),
                    d: cfg.d,
                    bin: s.bin,
                    seed: cfg.seed,
                    descriptor: descriptor.clone(),
                },
            })
        })
        .collect::<Result<_>>()?;
    let dataset = Dataset::new(cfg.task, cfg.measure_name(), cfg.d, &descriptor, records)?;
    Ok(GenOutput { dataset, bins: sampled.bins })
}

fn generate_ree(
    cfg: &ExperimentConfig,
    split: Split,
    family_n: usize,
    sep_n: usize,
) -> Result<GenOutput> {
    let sampler = SamplerConfig::new(cfg.seed, Ensemble::GinibreFullRank, cfg.d).validated()?;
    let sep_sampler =
        SamplerConfig::new(cfg.seed, Ensemble::SeparableMixture, cfg.d).validated()?;
    let label_spec = cfg.ree_label_spec();
    let descriptor = cfg.descriptor();

    // Each record derives its own RNG streams from (seed, split, index),
    // so the set is independent of evaluation order.
    let make = |i: usize| -> Result<DatasetRecord> {
        let mut rng = derive_rng(cfg.seed, &[STREAM_REE_STATE, split.stream(), i as u64]);
        let (state, family, bin) = if i < family_n {
            let eps: f64 = rng.gen();
            let rho0 = sample_ginibre(&sampler, &mut rng);
            let state = noisy_me_family(cfg.d, eps, &rho0)?;
            let decile = ((eps * 10.0).floor() as usize).min(9);
            (state, "noisy-max-entangled", decile)
        } else {
            (sample_separable(&sep_sampler, &mut rng), "separable", 0)
        };
        let label_seed =
            derive_rng(cfg.seed, &[STREAM_REE_LABEL, split.stream(), i as u64]).gen::<u64>();
        let opt = label_spec.to_opt_config(cfg.d, label_seed);
        let label = ree_upper_bound(&state, &opt)?.upper_bound;
        Ok(DatasetRecord {
            features: features_for_config(cfg, &state)?,
            label,
            meta: RecordMeta {
                family: family.into(),
                d: cfg.d,
                bin,
                seed: cfg.seed,
                descriptor: descriptor.clone(),
            },
        })
    };

    let records: Vec<DatasetRecord> =
        (0..family_n + sep_n).into_par_iter().map(make).collect::<Result<_>>()?;
    let dataset = Dataset::new(cfg.task, cfg.measure_name(), cfg.d, &descriptor, records)?;
    Ok(GenOutput { dataset, bins: Vec::new() })
}

fn check_compat(cfg_descriptor: &str, cfg_d: usize, cfg_task: Task, ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::Dataset("dataset has no records".into()));
    }
    if ds.header.descriptor != cfg_descriptor {
        return Err(Error::Dataset(format!(
            "dataset descriptor {} does not match expected {}",
            ds.header.descriptor, cfg_descriptor
        )));
    }
    if ds.header.d != cfg_d {
        return Err(Error::Dataset(format!(
            "dataset dimension {} does not match expected {}",
            ds.header.d, cfg_d
        )));
    }
    if ds.header.task != cfg_task {
        return Err(Error::Dataset("dataset task does not match config".into()));
    }
    Ok(())
}

/// Train the configured model on one dataset. Returns the checkpoint
/// and per-epoch history; nothing is written to disk here.
pub fn run_train(cfg: &ExperimentConfig, train_ds: &Dataset) -> Result<(Checkpoint, History)> {
    cfg.validate()?;
    check_compat(&cfg.descriptor(), cfg.d, cfg.task, train_ds)?;
    let train_cfg = cfg.train_config();
    let (params, network, history, best_val_mse, epochs_run) = match cfg.method {
        Method::CorrelationLearnable => {
            let labeled = train_ds.labeled_states()?;
            let n = cfg.n_settings.expect("validated");
            let (state, history) =
                hybrid_train_with(&labeled, n, cfg.d, &train_cfg, cfg.hybrid_options())?;
            let best = state.best_val_mse;
            let epochs = state.epochs_run;
            (Some(state.params), state.network, history, best, epochs)
        }
        _ => {
            let features = train_ds.features_tensor();
            let labels = train_ds.labels();
            let mut model = fnn_build(cfg.network_input_len());
            model.init_weights(train_cfg.seed);
            let history = train(&mut model, &features, &labels, &train_cfg)?;
            let best = history.best_val_mse;
            let epochs = history.epochs.len();
            (None, model, history, best, epochs)
        }
    };
    let checkpoint = Checkpoint {
        task: cfg.task,
        method: cfg.method,
        d: cfg.d,
        n_settings: cfg.n_settings,
        moment_orders: cfg.moment_orders.clone(),
        descriptor: cfg.descriptor(),
        seed: cfg.seed,
        params,
        network,
        best_val_mse,
        epochs_run,
    };
    Ok((checkpoint, history))
}

/// Evaluate a checkpoint on a test dataset; returns metrics and the
/// (true, predicted) scatter rows.
pub fn run_evaluate(ck: &Checkpoint, test_ds: &Dataset) -> Result<(Metrics, Vec<(f64, f64)>)> {
    check_compat(&ck.descriptor, ck.d, ck.task, test_ds)?;
    let metrics = match ck.method {
        Method::CorrelationLearnable => {
            let params = ck
                .params
                .clone()
                .ok_or_else(|| Error::Checkpoint("learnable checkpoint is missing θ".into()))?;
            let state = HybridState {
                params,
                network: ck.network.clone(),
                epochs_run: ck.epochs_run,
                best_val_mse: ck.best_val_mse,
            };
            state.evaluate(&test_ds.labeled_states()?)?
        }
        _ => evaluate(&ck.network, &test_ds.features_tensor(), &test_ds.labels())?,
    };
    let scatter: Vec<(f64, f64)> = test_ds
        .labels()
        .iter()
        .zip(&metrics.residuals)
        .map(|(&y, &r)| (y, y + r))
        .collect();
    Ok((metrics, scatter))
}

/// Residual summary persisted next to scatter files.
#[derive(Debug, Serialize)]
pub struct MetricsFile {
    pub mse: f64,
    pub count: usize,
    pub mean_residual: f64,
    pub max_abs_residual: f64,
}

pub fn write_metrics(path: &Path, metrics: &Metrics) -> Result<()> {
    let n = metrics.residuals.len().max(1);
    let mean = metrics.residuals.iter().sum::<f64>() / n as f64;
    let max_abs = metrics.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let body = MetricsFile {
        mse: metrics.mse,
        count: metrics.residuals.len(),
        mean_residual: mean,
        max_abs_residual: max_abs,
    };
    let text = serde_json::to_string_pretty(&body)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Plot-ready CSV with one (true, predicted) row per test sample.
pub fn write_scatter(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = String::from("true,predicted\n");
    for (y, p) in rows {
        out.push_str(&format!("{y},{p}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

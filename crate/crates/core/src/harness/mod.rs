//! Experiment harness: configuration, datasets, checkpoints, reports.

mod checkpoint;
mod config;
mod dataset;
mod digest;
mod experiment;
mod features;
mod reproduce;

pub use checkpoint::Checkpoint;
pub use config::{DatasetSizes, DatasetSpec, ExperimentConfig, Method, ReeLabelSpec, Task};
pub use dataset::{Dataset, DatasetHeader, DatasetRecord, RecordMeta};
pub use digest::{blob_digest, file_digest};
pub use experiment::{
    generate_dataset, run_evaluate, run_train, write_metrics, write_scatter, GenOutput, Split,
};
pub use features::{
    cglmp_devices, correlation_features, decode_state, encode_state, features_for_config,
    moment_features,
};
pub use reproduce::{reproduce, Assertion, CellResult, Report, Study};

/// Cap worker parallelism from ENTANGLIB_THREADS; call once at startup.
/// Returns the applied thread count, or None when the variable is
/// absent or the global pool was already configured.
pub fn init_parallelism() -> Option<usize> {
    let n: usize = std::env::var("ENTANGLIB_THREADS").ok()?.parse().ok().filter(|&n| n > 0)?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok()?;
    Some(n)
}

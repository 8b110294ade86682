//! Experiment configuration: one TOML file fully determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::ReeOptConfig;
use crate::ml::{HybridOptions, TrainConfig};
use crate::states::StratificationSpec;

/// Target entanglement measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CoherentInfo,
    Ree,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::CoherentInfo => "coherent-info",
            Task::Ree => "ree",
        }
    }
}

/// Feature-generation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CorrelationFixed,
    CorrelationLearnable,
    Moments,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::CorrelationFixed => "correlation-fixed",
            Method::CorrelationLearnable => "correlation-learnable",
            Method::Moments => "moments",
        }
    }

    pub fn is_correlation(self) -> bool {
        matches!(self, Method::CorrelationFixed | Method::CorrelationLearnable)
    }
}

/// Dataset sizing. Coherent-information runs are stratified (per-bin
/// counts); REE runs mix the noisy family with separable states.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub per_bin_train: Option<usize>,
    pub per_bin_test: Option<usize>,
    pub family_train: Option<usize>,
    pub separable_train: Option<usize>,
    pub family_test: Option<usize>,
    pub separable_test: Option<usize>,
}

/// One experiment: task, method, dimensions, sampling, and training.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub method: Method,
    pub d: usize,
    pub seed: u64,
    /// Measurement settings per party; correlation methods only.
    pub n_settings: Option<usize>,
    /// Moment orders, e.g. [2] or [2, 3]; moments method only.
    pub moment_orders: Option<Vec<u32>>,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub train: TrainConfig,
    /// REE label-optimizer knobs; REE task only, defaults applied.
    pub ree_labels: Option<ReeLabelSpec>,
    /// Hybrid initialization; learnable method only.
    pub hybrid: Option<HybridOptions>,
    /// Output directory, overridable by `--out`.
    pub out_dir: Option<PathBuf>,
}

/// Reduced-cost REE optimizer settings used when labeling datasets.
/// The full-strength defaults of the measure itself stay untouched.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReeLabelSpec {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for ReeLabelSpec {
    fn default() -> Self {
        Self { restarts: 3, max_iters: 800 }
    }
}

impl ReeLabelSpec {
    /// Optimizer config for one state; the per-state seed keeps labels
    /// independent of generation order.
    pub fn to_opt_config(self, d: usize, seed: u64) -> ReeOptConfig {
        let mut cfg = ReeOptConfig::for_dim(d, seed);
        cfg.restarts = self.restarts;
        cfg.max_iters = self.max_iters;
        cfg
    }
}

/// Effective dataset sizes after applying defaults and a scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSizes {
    pub per_bin_train: usize,
    pub per_bin_test: usize,
    pub family_train: usize,
    pub separable_train: usize,
    pub family_test: usize,
    pub separable_test: usize,
}

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64) * scale).round().max(1.0) as usize
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("d must be at least 2, got {}", self.d)));
        }
        match self.method {
            Method::Moments => {
                if self.n_settings.is_some() {
                    return Err(Error::Config(
                        "n_settings is only valid for correlation methods".into(),
                    ));
                }
                let orders = self
                    .moment_orders
                    .as_ref()
                    .ok_or_else(|| Error::Config("moments method requires moment_orders".into()))?;
                if orders.is_empty() || orders.iter().any(|&m| m < 2) {
                    return Err(Error::Config(
                        "moment_orders must be nonempty with every order >= 2".into(),
                    ));
                }
                if orders.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config("moment_orders must be strictly increasing".into()));
                }
            }
            Method::CorrelationFixed | Method::CorrelationLearnable => {
                if self.moment_orders.is_some() {
                    return Err(Error::Config(
                        "moment_orders is only valid for the moments method".into(),
                    ));
                }
                let n = self
                    .n_settings
                    .ok_or_else(|| Error::Config("correlation methods require n_settings".into()))?;
                if n == 0 {
                    return Err(Error::Config("n_settings must be positive".into()));
                }
            }
        }
        if self.hybrid.is_some() && self.method != Method::CorrelationLearnable {
            return Err(Error::Config(
                "hybrid options are only valid for correlation-learnable".into(),
            ));
        }
        if self.ree_labels.is_some() && self.task != Task::Ree {
            return Err(Error::Config("ree_labels is only valid for the ree task".into()));
        }
        self.train.validate()?;
        Ok(())
    }

    /// Dataset sizes with defaults filled in and `scale` applied
    /// (each count is rounded, with a floor of one).
    pub fn sizes(&self, scale: f64) -> Result<DatasetSizes> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Config(format!("scale must lie in (0, 1], got {scale}")));
        }
        let ds = &self.dataset;
        Ok(DatasetSizes {
            per_bin_train: scaled(ds.per_bin_train.unwrap_or(260), scale),
            per_bin_test: scaled(ds.per_bin_test.unwrap_or(65), scale),
            family_train: scaled(ds.family_train.unwrap_or(600), scale),
            separable_train: scaled(ds.separable_train.unwrap_or(100), scale),
            family_test: scaled(ds.family_test.unwrap_or(60), scale),
            separable_test: scaled(ds.separable_test.unwrap_or(20), scale),
        })
    }

    /// Stratification layout for coherent-information sampling.
    pub fn stratification(&self, per_bin: usize) -> StratificationSpec {
        StratificationSpec::coherent_info_default(per_bin)
    }

    /// Feature descriptor recorded in dataset headers; `state` marks
    /// raw density matrices for the learnable method.
    pub fn descriptor(&self) -> String {
        match self.method {
            Method::CorrelationFixed => {
                format!("correlation-n{}", self.n_settings.unwrap_or(0))
            }
            Method::CorrelationLearnable => "state".into(),
            Method::Moments => {
                let orders: Vec<String> =
                    self.moment_orders.iter().flatten().map(|m| m.to_string()).collect();
                let parts = match self.task {
                    Task::CoherentInfo => "a,ab",
                    Task::Ree => "a,b,ab",
                };
                format!("moments-{}-{}", orders.join(","), parts)
            }
        }
    }

    /// Feature vector length implied by task, method, and dimension.
    pub fn feature_len(&self) -> usize {
        match self.method {
            Method::CorrelationFixed => {
                let n = self.n_settings.unwrap_or(0);
                n * n * self.d * self.d
            }
            Method::CorrelationLearnable => {
                let dim = self.d * self.d;
                2 * dim * dim
            }
            Method::Moments => {
                let orders = self.moment_orders.as_ref().map_or(0, |o| o.len());
                let parts = match self.task {
                    Task::CoherentInfo => 2,
                    Task::Ree => 3,
                };
                orders * parts
            }
        }
    }

    /// Input width of the regression network. The learnable method
    /// feeds correlations, not the stored raw states.
    pub fn network_input_len(&self) -> usize {
        match self.method {
            Method::CorrelationLearnable => {
                let n = self.n_settings.unwrap_or(0);
                n * n * self.d * self.d
            }
            _ => self.feature_len(),
        }
    }

    /// Training config with this experiment's seed folded in.
    pub fn train_config(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.seed = self.seed;
        t
    }

    pub fn hybrid_options(&self) -> HybridOptions {
        self.hybrid.unwrap_or_default()
    }

    pub fn ree_label_spec(&self) -> ReeLabelSpec {
        self.ree_labels.unwrap_or_default()
    }

    /// Label-function name recorded in dataset headers.
    pub fn measure_name(&self) -> &'static str {
        match self.task {
            Task::CoherentInfo => "coherent-info",
            Task::Ree => "ree-upper-bound",
        }
    }
}

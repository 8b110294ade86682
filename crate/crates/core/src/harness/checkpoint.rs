//! Checkpoints: a JSON manifest describing shapes and provenance plus
//! a flat little-endian f64 blob holding θ parameters then weights.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::MeasurementParams;
use crate::ml::{LayerSpec, NetworkModel};

use super::config::{Method, Task};
use super::digest::sha256_hex;

pub const CHECKPOINT_FORMAT: &str = "entanglib-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model: the regression network plus, for the learnable
/// method, the measurement parameters that generate its features.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub task: Task,
    pub method: Method,
    pub d: usize,
    pub n_settings: Option<usize>,
    pub moment_orders: Option<Vec<u32>>,
    /// Dataset descriptor this model consumes.
    pub descriptor: String,
    pub seed: u64,
    pub params: Option<MeasurementParams>,
    pub network: NetworkModel,
    pub best_val_mse: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    task: Task,
    method: Method,
    d: usize,
    n_settings: Option<usize>,
    moment_orders: Option<Vec<u32>>,
    descriptor: String,
    seed: u64,
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    theta_devices: usize,
    theta_params_per_device: usize,
    weight_count: usize,
    best_val_mse: f64,
    epochs_run: usize,
    history_file: Option<String>,
    blob_file: String,
    blob_len: u64,
    blob_sha256: String,
}

fn to_le_bytes(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn from_le_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Checkpoint(format!("blob length {} not a multiple of 8", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

impl Checkpoint {
    /// Write `{stem}.json` and `{stem}.bin` into `dir`; returns the
    /// manifest path. `history_file` is recorded verbatim as a pointer.
    pub fn save(&self, dir: &Path, stem: &str, history_file: Option<&str>) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let blob_name = format!("{stem}.bin");
        let mut flat = self.params.as_ref().map_or_else(Vec::new, |p| p.flatten());
        flat.extend_from_slice(self.network.weights());
        let blob = to_le_bytes(&flat);

        let manifest = Manifest {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            task: self.task,
            method: self.method,
            d: self.d,
            n_settings: self.n_settings,
            moment_orders: self.moment_orders.clone(),
            descriptor: self.descriptor.clone(),
            seed: self.seed,
            input_shape: self.network.input_shape().to_vec(),
            layers: self.network.specs().to_vec(),
            theta_devices: self.params.as_ref().map_or(0, |p| p.num_devices()),
            theta_params_per_device: self.params.as_ref().map_or(0, |p| p.params_per_device()),
            weight_count: self.network.weights().len(),
            best_val_mse: self.best_val_mse,
            epochs_run: self.epochs_run,
            history_file: history_file.map(String::from),
            blob_file: blob_name.clone(),
            blob_len: blob.len() as u64,
            blob_sha256: sha256_hex(&blob),
        };

        std::fs::write(dir.join(&blob_name), &blob)?;
        let manifest_path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Checkpoint(format!("manifest serialize: {e}")))?;
        std::fs::write(&manifest_path, text)?;
        Ok(manifest_path)
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest_path)
            .map_err(|e| Error::Checkpoint(format!("reading {}: {e}", manifest_path.display())))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("manifest parse: {e}")))?;
        if m.format != CHECKPOINT_FORMAT || m.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                m.format, m.version
            )));
        }
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let blob = std::fs::read(dir.join(&m.blob_file))?;
        if blob.len() as u64 != m.blob_len {
            return Err(Error::Checkpoint(format!(
                "blob length {} disagrees with manifest {}",
                blob.len(),
                m.blob_len
            )));
        }
        let digest = sha256_hex(&blob);
        if digest != m.blob_sha256 {
            return Err(Error::Checkpoint("blob checksum mismatch".into()));
        }
        let flat = from_le_bytes(&blob)?;
        let theta_len = m.theta_devices * m.theta_params_per_device;
        if flat.len() != theta_len + m.weight_count {
            return Err(Error::Checkpoint(format!(
                "blob holds {} values, manifest implies {}",
                flat.len(),
                theta_len + m.weight_count
            )));
        }
        let params = if m.theta_devices > 0 {
            if m.theta_devices % 2 != 0 || m.theta_params_per_device != m.d * m.d {
                return Err(Error::Checkpoint(format!(
                    "θ layout {}×{} inconsistent with d={}",
                    m.theta_devices, m.theta_params_per_device, m.d
                )));
            }
            let thetas: Vec<Vec<f64>> = flat[..theta_len]
                .chunks_exact(m.theta_params_per_device)
                .map(|c| c.to_vec())
                .collect();
            Some(MeasurementParams::new(m.d, m.theta_devices / 2, thetas)?)
        } else {
            None
        };
        let mut network = NetworkModel::new(m.input_shape, m.layers)?;
        if network.param_count() != m.weight_count {
            return Err(Error::Checkpoint(format!(
                "layer specs imply {} weights, manifest says {}",
                network.param_count(),
                m.weight_count
            )));
        }
        network.set_weights(&flat[theta_len..]);
        Ok(Self {
            task: m.task,
            method: m.method,
            d: m.d,
            n_settings: m.n_settings,
            moment_orders: m.moment_orders,
            descriptor: m.descriptor,
            seed: m.seed,
            params,
            network,
            best_val_mse: m.best_val_mse,
            epochs_run: m.epochs_run,
        })
    }
}

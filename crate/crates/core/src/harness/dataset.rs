//! Line-delimited dataset files: a JSON header line with the feature
//! descriptor and dimensions, then one JSON record per line.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::Tensor;
use crate::qcore::DensityMatrix;

use super::config::Task;
use super::features::decode_state;

pub const DATASET_FORMAT: &str = "entanglib-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Per-record provenance carried alongside features and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    /// State family: stratified-ginibre, noisy-max-entangled, separable.
    pub family: String,
    pub d: usize,
    /// Stratification bin, or the ε decile for REE family records.
    pub bin: usize,
    /// Master generator seed the record derives from.
    pub seed: u64,
    pub descriptor: String,
}

/// One labeled sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub features: Vec<f64>,
    pub label: f64,
    pub meta: RecordMeta,
}

/// First line of every dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub task: Task,
    /// Label function, e.g. coherent-info or ree-upper-bound.
    pub measure: String,
    pub d: usize,
    pub descriptor: String,
    pub feature_len: usize,
    pub count: usize,
}

/// An in-memory dataset; construction and file I/O both enforce the
/// header/record consistency invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn new(
        task: Task,
        measure: &str,
        d: usize,
        descriptor: &str,
        records: Vec<DatasetRecord>,
    ) -> Result<Self> {
        let feature_len = records.first().map_or(0, |r| r.features.len());
        let header = DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            task,
            measure: measure.into(),
            d,
            descriptor: descriptor.into(),
            feature_len,
            count: records.len(),
        };
        let ds = Self { header, records };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        let h = &self.header;
        if h.format != DATASET_FORMAT {
            return Err(Error::Dataset(format!("unknown format tag {}", h.format)));
        }
        if h.version != DATASET_VERSION {
            return Err(Error::Dataset(format!("unsupported version {}", h.version)));
        }
        if h.count != self.records.len() {
            return Err(Error::Dataset(format!(
                "header count {} but {} records",
                h.count,
                self.records.len()
            )));
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.features.len() != h.feature_len {
                return Err(Error::Dataset(format!(
                    "record {i} has {} features, header says {}",
                    r.features.len(),
                    h.feature_len
                )));
            }
            if !r.label.is_finite() || r.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("record {i} contains non-finite values")));
            }
            if r.meta.d != h.d || r.meta.descriptor != h.descriptor {
                return Err(Error::Dataset(format!("record {i} metadata disagrees with header")));
            }
        }
        Ok(())
    }

    /// Serialize to one JSON object per line; floats round-trip
    /// bit-exactly through the shortest-representation encoder.
    pub fn write(&self, path: &Path) -> Result<()> {
        self.check()?;
        let mut out = Vec::new();
        serde_json::to_writer(&mut out, &self.header).map_err(io_err)?;
        out.push(b'\n');
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(io_err)?;
            out.push(b'\n');
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Dataset(format!("opening {}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Dataset(format!("{} is empty", path.display())))??;
        let header: DatasetHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::Dataset(format!("header parse: {e}")))?;
        let mut records = Vec::with_capacity(header.count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DatasetRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Dataset(format!("record {i} parse: {e}")))?;
            records.push(record);
        }
        let ds = Self { header, records };
        ds.check()?;
        Ok(ds)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn features_tensor(&self) -> Tensor {
        let rows: Vec<Vec<f64>> = self.records.iter().map(|r| r.features.clone()).collect();
        Tensor::from_rows(&rows)
    }

    pub fn labels(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Decode embedded density matrices; only valid when the file was
    /// generated for the learnable method (descriptor `state`).
    pub fn states(&self) -> Result<Vec<DensityMatrix>> {
        if self.header.descriptor != "state" {
            return Err(Error::Dataset(format!(
                "descriptor {} does not embed states",
                self.header.descriptor
            )));
        }
        self.records.iter().map(|r| decode_state(self.header.d, &r.features)).collect()
    }

    /// (state, label) pairs for hybrid training and evaluation.
    pub fn labeled_states(&self) -> Result<Vec<(DensityMatrix, f64)>> {
        let states = self.states()?;
        Ok(states.into_iter().zip(self.labels()).collect())
    }
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Dataset(format!("serialize: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::features::encode_state;
    use crate::rng::derive_rng;
    use crate::states::{sample_ginibre, Ensemble, SamplerConfig};
    use rand::Rng;

    fn meta(descriptor: &str) -> RecordMeta {
        RecordMeta { family: "test".into(), d: 3, bin: 0, seed: 1, descriptor: descriptor.into() }
    }

    fn tiny_dataset() -> Dataset {
        let mut rng = derive_rng(3, &[9]);
        let records: Vec<DatasetRecord> = (0..5)
            .map(|_| DatasetRecord {
                features: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                label: rng.gen_range(-1.5..1.5),
                meta: meta("correlation-n1"),
            })
            .collect();
        Dataset::new(Task::CoherentInfo, "coherent-info", 3, "correlation-n1", records).unwrap()
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let ds = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        ds.write(&path).unwrap();
        let back = Dataset::read(&path).unwrap();
        assert_eq!(back, ds);
        for (a, b) in back.records.iter().zip(&ds.records) {
            for (x, y) in a.features.iter().zip(&b.features) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(a.label.to_bits(), b.label.to_bits());
        }
    }

    #[test]
    fn rewriting_produces_identical_bytes() {
        let ds = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.jsonl");
        let p2 = dir.path().join("b.jsonl");
        ds.write(&p1).unwrap();
        ds.write(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn inconsistent_feature_lengths_are_rejected() {
        let records = vec![
            DatasetRecord { features: vec![1.0, 2.0], label: 0.0, meta: meta("x") },
            DatasetRecord { features: vec![1.0], label: 0.0, meta: meta("x") },
        ];
        assert!(Dataset::new(Task::CoherentInfo, "coherent-info", 3, "x", records).is_err());
    }

    #[test]
    fn non_finite_labels_are_rejected() {
        let records = vec![DatasetRecord {
            features: vec![1.0],
            label: f64::NAN,
            meta: meta("x"),
        }];
        assert!(Dataset::new(Task::CoherentInfo, "coherent-info", 3, "x", records).is_err());
    }

    #[test]
    fn embedded_states_decode_back() {
        let cfg = SamplerConfig::new(11, Ensemble::GinibreFullRank, 2);
        let mut rng = derive_rng(11, &[2]);
        let states: Vec<_> = (0..3).map(|_| sample_ginibre(&cfg, &mut rng)).collect();
        let records: Vec<DatasetRecord> = states
            .iter()
            .map(|s| DatasetRecord {
                features: encode_state(s),
                label: 0.5,
                meta: RecordMeta {
                    family: "test".into(),
                    d: 2,
                    bin: 0,
                    seed: 11,
                    descriptor: "state".into(),
                },
            })
            .collect();
        let ds = Dataset::new(Task::Ree, "ree-upper-bound", 2, "state", records).unwrap();
        let decoded = ds.states().unwrap();
        for (orig, back) in states.iter().zip(&decoded) {
            assert_eq!(orig.matrix(), back.matrix());
        }
        // A non-state dataset refuses to decode.
        assert!(tiny_dataset().states().is_err());
    }

    #[test]
    fn header_record_disagreement_fails_on_read() {
        let ds = tiny_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        ds.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let tampered = lines[0].replace("\"count\":5", "\"count\":4");
        lines[0] = &tampered;
        std::fs::write(&path, lines.join("\n")).unwrap();
        assert!(Dataset::read(&path).is_err());
    }
}

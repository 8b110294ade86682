//! Stratified sampling: fill label-range bins with states whose
//! recomputed label lands in the bin.
//!
//! Raw Hilbert-Schmidt samples concentrate in a narrow label band (for
//! the coherent information at d=3, roughly [-1.2, -0.6]), so most bins
//! are unreachable by rejection alone. Each raw draw is therefore
//! interpolated along a convex path toward an anchor state with extreme
//! label, bisecting the mixing weight until the exactly recomputed
//! label falls inside the bin. Anchors are drawn fresh per attempt so a
//! bin's population is not a one-parameter family: the raising anchor
//! is a Haar-random maximally entangled state (label exactly +log₂d),
//! the lowering anchor a random product background σ_A ⊗ I/d (label
//! exactly -log₂d for any σ_A).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{ginibre_density, haar_unitary, sample_state, SamplerConfig};
use crate::error::{Error, Result};
use crate::qcore::{pure_state, C64, ComplexMatrix, DensityMatrix};
use crate::rng::derive_rng;

/// Bin layout and fill targets for one stratified dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratificationSpec {
    /// Label-function identifier, recorded in dataset metadata.
    pub measure: String,
    pub lower: f64,
    pub upper: f64,
    pub bin_width: f64,
    pub per_bin: usize,
    #[serde(default = "default_max_attempts")]
    pub max_attempts_per_bin: u64,
}

fn default_max_attempts() -> u64 {
    1_000_000
}

impl StratificationSpec {
    /// Standard coherent-information layout: [-1.5, log₂3] in 31 bins
    /// of width 0.1 (the last bin is narrower and closed at the top).
    pub fn coherent_info_default(per_bin: usize) -> Self {
        Self {
            measure: "coherent-info".into(),
            lower: -1.5,
            upper: 3f64.log2(),
            bin_width: 0.1,
            per_bin,
            max_attempts_per_bin: default_max_attempts(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.upper > self.lower) {
            return Err(Error::InvalidArgument(format!(
                "stratification range [{}, {}] is empty",
                self.lower, self.upper
            )));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::InvalidArgument("bin width must be positive".into()));
        }
        if self.per_bin == 0 || self.max_attempts_per_bin == 0 {
            return Err(Error::InvalidArgument(
                "per_bin and max_attempts_per_bin must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of bins, ceil((upper - lower)/width) with a guard against
    /// float noise on exact multiples.
    pub fn num_bins(&self) -> usize {
        (((self.upper - self.lower) / self.bin_width) - 1e-9).ceil() as usize
    }

    /// Bin boundaries [lo, hi); the last bin is truncated at `upper`.
    pub fn bin_bounds(&self, index: usize) -> (f64, f64) {
        let lo = self.lower + index as f64 * self.bin_width;
        let hi = (lo + self.bin_width).min(self.upper);
        (lo, hi)
    }

    /// Membership test: half-open bins, except the last which is closed
    /// at the upper endpoint (attained by maximally entangled states).
    pub fn in_bin(&self, index: usize, label: f64) -> bool {
        let (lo, hi) = self.bin_bounds(index);
        if index + 1 == self.num_bins() {
            label >= lo && label <= self.upper
        } else {
            label >= lo && label < hi
        }
    }
}

/// One accepted sample with its exactly recomputed label.
#[derive(Debug, Clone)]
pub struct LabeledState {
    pub state: DensityMatrix,
    pub label: f64,
    pub bin: usize,
}

/// Fill diagnostics for one bin. A shortfall (filled < requested) is
/// reported here rather than failing the whole run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinReport {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub requested: usize,
    pub filled: usize,
    pub attempts: u64,
}

/// Output of `stratified_sample`: accepted samples in bin order plus
/// per-bin diagnostics.
#[derive(Debug)]
pub struct StratifiedSample {
    pub samples: Vec<LabeledState>,
    pub bins: Vec<BinReport>,
}

const STREAM_STRATIFY: u64 = 0x5354_5241;

/// Generate `per_bin` states per bin whose label (recomputed from the
/// final state, never from interpolation bookkeeping) lies in the bin.
/// Bins run in parallel on independent RNG streams derived from
/// (cfg.seed, bin index), so results are schedule-independent.
pub fn stratified_sample(
    spec: &StratificationSpec,
    cfg: &SamplerConfig,
    label: impl Fn(&DensityMatrix) -> f64 + Sync,
    label_stream: u64,
) -> Result<StratifiedSample> {
    spec.validate()?;
    let n_bins = spec.num_bins();
    let d = cfg.dim;

    let per_bin_results: Vec<(Vec<LabeledState>, BinReport)> = (0..n_bins)
        .into_par_iter()
        .map(|bin| {
            let mut rng = derive_rng(cfg.seed, &[STREAM_STRATIFY, label_stream, bin as u64]);
            let (lo, hi) = spec.bin_bounds(bin);
            let mut found = Vec::with_capacity(spec.per_bin);
            let mut attempts: u64 = 0;
            while found.len() < spec.per_bin && attempts < spec.max_attempts_per_bin {
                attempts += 1;
                let raw = sample_state(cfg, &mut rng);
                let y0 = label(&raw);
                if spec.in_bin(bin, y0) {
                    found.push(LabeledState { state: raw, label: y0, bin });
                    continue;
                }
                let anchor = if y0 < lo {
                    random_entangled_anchor(d, &mut rng)
                } else {
                    random_flat_anchor(d, &mut rng)
                };
                if let Some((state, y)) = bisect_into_bin(spec, bin, &raw, y0, &anchor, &label) {
                    found.push(LabeledState { state, label: y, bin });
                }
            }
            let report = BinReport {
                index: bin,
                lo,
                hi,
                requested: spec.per_bin,
                filled: found.len(),
                attempts,
            };
            (found, report)
        })
        .collect();

    let mut samples = Vec::with_capacity(n_bins * spec.per_bin);
    let mut bins = Vec::with_capacity(n_bins);
    for (found, report) in per_bin_results {
        samples.extend(found);
        bins.push(report);
    }
    Ok(StratifiedSample { samples, bins })
}

/// Haar-random maximally entangled state Σ_ij V_ij |ij⟩ / √d.
fn random_entangled_anchor(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let v = haar_unitary(d, rng);
    let amp = 1.0 / (d as f64).sqrt();
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            psi[i * d + j] = v.get(i, j) * amp;
        }
    }
    pure_state(d, d, &psi).expect("rotated maximally entangled state is valid by construction")
}

/// Random product background σ_A ⊗ I/d with Ginibre σ_A.
fn random_flat_anchor(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let sigma = ginibre_density(d, d, rng);
    let flat = ComplexMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0));
    DensityMatrix::from_parts_unchecked(d, d, sigma.kron(&flat))
}

/// Convex combination (1-t)ρ₀ + t·anchor.
fn mix(rho0: &DensityMatrix, anchor: &DensityMatrix, t: f64) -> DensityMatrix {
    let m = rho0
        .matrix()
        .scale(C64::new(1.0 - t, 0.0))
        .add(&anchor.matrix().scale(C64::new(t, 0.0)));
    DensityMatrix::from_parts_unchecked(rho0.dim_a(), rho0.dim_b(), m)
}

/// Bisect the mixing weight until the recomputed label lands in the
/// bin. The bracket always contains a crossing because the label is
/// continuous along the path and the endpoints lie on opposite sides.
fn bisect_into_bin(
    spec: &StratificationSpec,
    bin: usize,
    rho0: &DensityMatrix,
    y0: f64,
    anchor: &DensityMatrix,
    label: &(impl Fn(&DensityMatrix) -> f64 + Sync),
) -> Option<(DensityMatrix, f64)> {
    let (lo, _) = spec.bin_bounds(bin);
    let y1 = label(anchor);
    let below_at_a = y0 < lo;
    // Bisect only when the endpoints straddle lo or the anchor label
    // itself reaches the bin; otherwise no crossing exists on this path.
    if !spec.in_bin(bin, y1) && (y1 < lo) == below_at_a {
        return None;
    }
    let (mut ta, mut tb) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let tm = 0.5 * (ta + tb);
        let cand = mix(rho0, anchor, tm);
        let y = label(&cand);
        if spec.in_bin(bin, y) {
            return Some((cand, y));
        }
        if (y < lo) == below_at_a {
            ta = tm;
        } else {
            tb = tm;
        }
    }
    None
}

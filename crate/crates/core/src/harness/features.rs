//! Feature construction: moments, fixed-CGLMP correlations, and the
//! raw-state encoding used by the learnable method.

use crate::error::{Error, Result};
use crate::measurements::{cglmp_basis, correlations, Measurement};
use crate::qcore::{moment, C64, ComplexMatrix, DensityMatrix, Subsystem};

use super::config::{ExperimentConfig, Method, Task};

/// CGLMP device banks for both parties at N settings per party.
pub fn cglmp_devices(d: usize, n: usize) -> Result<(Vec<Measurement>, Vec<Measurement>)> {
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 1..=n {
        a.push(cglmp_basis(d, n, Subsystem::A, k)?);
        b.push(cglmp_basis(d, n, Subsystem::B, k)?);
    }
    Ok((a, b))
}

/// Correlation features under fixed devices: the flattened probability
/// tensor, N²d² values in (x, y, a, b) lexicographic order.
pub fn correlation_features(
    rho: &DensityMatrix,
    a: &[Measurement],
    b: &[Measurement],
) -> Result<Vec<f64>> {
    Ok(correlations(rho, a, b)?.values().to_vec())
}

/// Moment features grouped by order: coherent information uses
/// {μ_m(ρ_A), μ_m(ρ)}, the REE task adds μ_m(ρ_B).
pub fn moment_features(rho: &DensityMatrix, orders: &[u32], task: Task) -> Result<Vec<f64>> {
    let rho_a = rho.partial_trace(Subsystem::A);
    let rho_b = rho.partial_trace(Subsystem::B);
    let mut out = Vec::with_capacity(orders.len() * 3);
    for &m in orders {
        out.push(moment(&rho_a, m)?);
        if task == Task::Ree {
            out.push(moment(&rho_b, m)?);
        }
        out.push(moment(rho, m)?);
    }
    Ok(out)
}

/// Raw-state encoding: row-major interleaved (re, im) entries, length
/// 2·dim². Exact in both directions because no arithmetic is applied.
pub fn encode_state(rho: &DensityMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * rho.dim() * rho.dim());
    for v in rho.matrix().data() {
        out.push(v.re);
        out.push(v.im);
    }
    out
}

/// Inverse of `encode_state`; revalidates the density-matrix
/// invariants so corrupted files fail loudly.
pub fn decode_state(d: usize, features: &[f64]) -> Result<DensityMatrix> {
    let dim = d * d;
    if features.len() != 2 * dim * dim {
        return Err(Error::Dataset(format!(
            "state encoding for d={d} needs {} values, got {}",
            2 * dim * dim,
            features.len()
        )));
    }
    let data: Vec<C64> =
        features.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
    DensityMatrix::new(d, d, ComplexMatrix::new(dim, dim, data))
}

/// Features for one state as dictated by the experiment config. The
/// learnable method stores the state itself; its correlation features
/// are regenerated from the trained parameters at run time.
pub fn features_for_config(cfg: &ExperimentConfig, rho: &DensityMatrix) -> Result<Vec<f64>> {
    match cfg.method {
        Method::CorrelationFixed => {
            let n = cfg.n_settings.expect("validated");
            let (a, b) = cglmp_devices(cfg.d, n)?;
            correlation_features(rho, &a, &b)
        }
        Method::CorrelationLearnable => Ok(encode_state(rho)),
        Method::Moments => {
            moment_features(rho, cfg.moment_orders.as_deref().expect("validated"), cfg.task)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{max_entangled, max_mixed};
    use crate::rng::derive_rng;
    use crate::states::{sample_ginibre, Ensemble, SamplerConfig};

    #[test]
    fn moment_features_follow_task_layout() {
        let rho = max_entangled(2);
        let ci = moment_features(&rho, &[2, 3], Task::CoherentInfo).unwrap();
        assert_eq!(ci.len(), 4);
        // Pure maximally entangled: marginal is I/2, global is pure.
        assert!((ci[0] - 0.5).abs() < 1e-12);
        assert!((ci[1] - 1.0).abs() < 1e-12);
        assert!((ci[2] - 0.25).abs() < 1e-12);
        assert!((ci[3] - 1.0).abs() < 1e-12);

        let ree = moment_features(&rho, &[2], Task::Ree).unwrap();
        assert_eq!(ree.len(), 3);
        assert!((ree[0] - 0.5).abs() < 1e-12);
        assert!((ree[1] - 0.5).abs() < 1e-12);
        assert!((ree[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_features_have_grid_length() {
        let (a, b) = cglmp_devices(3, 2).unwrap();
        let rho = max_mixed(3, 3);
        let feats = correlation_features(&rho, &a, &b).unwrap();
        assert_eq!(feats.len(), 36);
        let total: f64 = feats.iter().sum();
        // Four (x, y) setting pairs, each summing to one.
        assert!((total - 4.0).abs() < 1e-9);
    }

    #[test]
    fn state_encoding_round_trips_exactly() {
        let cfg = SamplerConfig::new(7, Ensemble::GinibreFullRank, 3);
        let mut rng = derive_rng(7, &[1]);
        let rho = sample_ginibre(&cfg, &mut rng);
        let encoded = encode_state(&rho);
        assert_eq!(encoded.len(), 162);
        let back = decode_state(3, &encoded).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn decode_rejects_wrong_length_and_invalid_states() {
        assert!(decode_state(2, &[0.0; 7]).is_err());
        // Right length, but not a density matrix.
        let bad = vec![0.0; 32];
        assert!(decode_state(2, &bad).is_err());
    }
}

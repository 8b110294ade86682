//! Coherent information I_C(ρ) = S(ρ_A) − S(ρ).

use crate::qcore::{von_neumann_entropy, DensityMatrix, Subsystem};

/// Coherent information in bits. Lies in [−log₂ d_B·d_A-bounded,
/// log₂ d_A]; equals the entanglement entropy S(ρ_A) on pure states.
pub fn coherent_information(rho: &DensityMatrix) -> f64 {
    von_neumann_entropy(&rho.partial_trace(Subsystem::A)) - von_neumann_entropy(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::max_mixed;
    use crate::rng::derive_rng;
    use crate::states::{maximally_entangled, sample_state, Ensemble, SamplerConfig};

    #[test]
    fn maximally_entangled_reaches_log2_d() {
        let ic = coherent_information(&maximally_entangled(3).unwrap());
        assert!((ic - 3f64.log2()).abs() < 1e-10);
        assert!((ic - 1.584963).abs() < 1e-6);
    }

    #[test]
    fn max_mixed_reaches_negative_log2_d() {
        let ic = coherent_information(&max_mixed(3, 3));
        assert!((ic + 3f64.log2()).abs() < 1e-10);
    }

    #[test]
    fn pure_product_state_is_zero() {
        let cfg = SamplerConfig {
            rank: Some(1),
            num_product_terms: 1,
            ..SamplerConfig::new(3, Ensemble::SeparableMixture, 3)
        };
        let rho = sample_state(&cfg, &mut derive_rng(3, &[0]));
        assert!(coherent_information(&rho).abs() < 1e-9);
    }

    #[test]
    fn pure_states_give_entanglement_entropy() {
        let cfg = SamplerConfig::new(17, Ensemble::Pure, 3);
        let mut rng = derive_rng(cfg.seed, &[0]);
        for _ in 0..20 {
            let rho = sample_state(&cfg, &mut rng);
            let sa = von_neumann_entropy(&rho.partial_trace(Subsystem::A));
            let ic = coherent_information(&rho);
            assert!((ic - sa).abs() < 1e-9);
            assert!(ic <= 3f64.log2() + 1e-9);
        }
    }
}

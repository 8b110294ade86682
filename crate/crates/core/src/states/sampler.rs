//! Random-state samplers: Hilbert-Schmidt (Ginibre) ensembles and
//! separable-by-construction mixtures.

use rand::Rng;
use rand_distr::{Dirichlet, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{C64, ComplexMatrix, DensityMatrix};

/// Which random ensemble to draw bipartite d ⊗ d states from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Full-rank Hilbert-Schmidt: ρ = GG†/Tr(GG†) with G of size d²×d².
    GinibreFullRank,
    /// Rank-limited Hilbert-Schmidt: G of size d²×k.
    GinibreRankK,
    /// Haar-random pure state.
    Pure,
    /// Convex mixture of random product states (separable by construction).
    SeparableMixture,
}

/// Sampler parameters. `seed` is the master seed callers derive RNG
/// streams from; the sample functions themselves take an explicit stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub ensemble: Ensemble,
    /// Subsystem dimension d (the full space has dimension d²).
    pub dim: usize,
    /// Rank bound k for the rank-limited ensemble; also bounds the rank
    /// of separable-mixture factors when present.
    #[serde(default)]
    pub rank: Option<usize>,
    /// Upper bound for the number of product terms in separable samples;
    /// each sample draws its term count uniformly from {1, ..., this}.
    #[serde(default = "default_num_product_terms")]
    pub num_product_terms: usize,
}

fn default_num_product_terms() -> usize {
    0 // sentinel replaced by 2d² in validate_or_default
}

impl SamplerConfig {
    pub fn new(seed: u64, ensemble: Ensemble, dim: usize) -> Self {
        Self { seed, ensemble, dim, rank: None, num_product_terms: 2 * dim * dim }
    }

    /// Check invariants, filling the num_product_terms default (2d²).
    pub fn validated(mut self) -> Result<Self> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "subsystem dimension must be at least 2, got {}",
                self.dim
            )));
        }
        if self.num_product_terms == 0 {
            self.num_product_terms = 2 * self.dim * self.dim;
        }
        if let Some(k) = self.rank {
            if k == 0 || k > self.dim * self.dim {
                return Err(Error::InvalidArgument(format!(
                    "rank must lie in 1..=d² = {}, got {k}",
                    self.dim * self.dim
                )));
            }
        }
        if self.ensemble == Ensemble::GinibreRankK && self.rank.is_none() {
            return Err(Error::InvalidArgument(
                "rank-limited ensemble requires an explicit rank".into(),
            ));
        }
        Ok(self)
    }
}

/// Matrix with i.i.d. standard complex Gaussian entries.
fn ginibre_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(C64::new(re, im));
    }
    ComplexMatrix::new(rows, cols, data)
}

/// Normalized GG†/Tr(GG†) for G of size dim×rank.
pub(crate) fn ginibre_density(dim: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre_matrix(dim, rank, rng);
    let gg = g.matmul(&g.adjoint());
    let t = gg.trace().re;
    gg.scale(C64::new(1.0 / t, 0.0))
}

/// Haar-random dim×dim unitary: modified Gram-Schmidt on a Ginibre
/// matrix, which keeps the R diagonal real positive and hence the Q
/// factor Haar-distributed.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre_matrix(dim, dim, rng);
    let mut cols: Vec<Vec<C64>> = (0..dim).map(|j| g.column(j)).collect();
    for j in 0..dim {
        for k in 0..j {
            let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(q, v)| q.conj() * v).sum();
            for i in 0..dim {
                let correction = proj * cols[k][i];
                cols[j][i] -= correction;
            }
        }
        let norm = cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "Ginibre columns are almost surely independent");
        for c in cols[j].iter_mut() {
            *c /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Draw a bipartite d ⊗ d state from the configured Ginibre ensemble.
pub fn sample_ginibre(cfg: &SamplerConfig, rng: &mut impl Rng) -> DensityMatrix {
    let d2 = cfg.dim * cfg.dim;
    let rank = match cfg.ensemble {
        Ensemble::GinibreRankK => cfg.rank.expect("validated config carries a rank"),
        _ => d2,
    };
    DensityMatrix::from_parts_unchecked(cfg.dim, cfg.dim, ginibre_density(d2, rank, rng))
}

/// Haar-random pure bipartite state.
fn sample_pure(cfg: &SamplerConfig, rng: &mut impl Rng) -> DensityMatrix {
    let d2 = cfg.dim * cfg.dim;
    let mut psi: Vec<C64> = (0..d2)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut psi {
        *c /= norm;
    }
    DensityMatrix::from_parts_unchecked(cfg.dim, cfg.dim, ComplexMatrix::outer(&psi, &psi))
}

/// Convex mixture Σ_i p_i σ_i^A ⊗ σ_i^B of random product states. The
/// output is separable by construction; dataset writers record that
/// provenance in the sample metadata. Term count is uniform in
/// {1, ..., num_product_terms}, weights are Dirichlet-uniform, factors
/// are subsystem Ginibre states (rank-limited when cfg.rank is set).
pub fn sample_separable(cfg: &SamplerConfig, rng: &mut impl Rng) -> DensityMatrix {
    let d = cfg.dim;
    let terms = rng.gen_range(1..=cfg.num_product_terms.max(1));
    let weights: Vec<f64> = if terms == 1 {
        vec![1.0]
    } else {
        let dir = Dirichlet::new_with_size(1.0, terms).expect("terms >= 2");
        rng.sample(dir)
    };
    let factor_rank = cfg.rank.unwrap_or(d).min(d);
    let mut acc = ComplexMatrix::zeros(d * d, d * d);
    for &w in &weights {
        let a = ginibre_density(d, factor_rank, rng);
        let b = ginibre_density(d, factor_rank, rng);
        acc = acc.add(&a.kron(&b).scale(C64::new(w, 0.0)));
    }
    DensityMatrix::from_parts_unchecked(d, d, acc)
}

/// Draw one state from whichever ensemble the config selects.
pub fn sample_state(cfg: &SamplerConfig, rng: &mut impl Rng) -> DensityMatrix {
    match cfg.ensemble {
        Ensemble::GinibreFullRank | Ensemble::GinibreRankK => sample_ginibre(cfg, rng),
        Ensemble::Pure => sample_pure(cfg, rng),
        Ensemble::SeparableMixture => sample_separable(cfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{hermitian_eig, spectral_decompose, von_neumann_entropy, Subsystem};
    use crate::rng::derive_rng;

    fn full_rank_cfg(d: usize) -> SamplerConfig {
        SamplerConfig::new(11, Ensemble::GinibreFullRank, d)
    }

    #[test]
    fn ginibre_passes_density_invariants() {
        let cfg = full_rank_cfg(3);
        let mut rng = derive_rng(cfg.seed, &[0]);
        for i in 0..50 {
            let rho = sample_ginibre(&cfg, &mut rng);
            assert_eq!(rho.dim(), 9);
            // Revalidate through the checked constructor.
            DensityMatrix::new(3, 3, rho.matrix().clone())
                .unwrap_or_else(|e| panic!("sample {i} failed invariants: {e}"));
        }
    }

    #[test]
    fn same_stream_reproduces() {
        let cfg = full_rank_cfg(3);
        let a = sample_ginibre(&cfg, &mut derive_rng(7, &[1, 2]));
        let b = sample_ginibre(&cfg, &mut derive_rng(7, &[1, 2]));
        assert_eq!(a.matrix(), b.matrix());
        let c = sample_ginibre(&cfg, &mut derive_rng(7, &[1, 3]));
        assert!(a.matrix().max_abs_diff(c.matrix()) > 1e-3);
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        for d in [2, 3, 4] {
            let u = haar_unitary(d, &mut derive_rng(5, &[d as u64]));
            let gram = u.adjoint().matmul(&u);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12);
            let again = haar_unitary(d, &mut derive_rng(5, &[d as u64]));
            assert_eq!(u, again);
            let other = haar_unitary(d, &mut derive_rng(6, &[d as u64]));
            assert!(u.max_abs_diff(&other) > 1e-3);
        }
    }

    #[test]
    fn hilbert_schmidt_mean_purity() {
        // E[Tr ρ²] = 2D/(D²+1) for the HS ensemble on dimension D = d².
        let cfg = full_rank_cfg(3);
        let mut rng = derive_rng(13, &[0]);
        let n = 1000;
        let purities: Vec<f64> = (0..n).map(|_| sample_ginibre(&cfg, &mut rng).purity()).collect();
        let mean = purities.iter().sum::<f64>() / n as f64;
        let var = purities.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let expected = 18.0 / 82.0;
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean purity {mean:.5} vs expected {expected:.5} (3se = {:.5})",
            3.0 * se
        );
    }

    #[test]
    fn rank_limited_spectrum() {
        let cfg = SamplerConfig {
            rank: Some(2),
            ..SamplerConfig::new(5, Ensemble::GinibreRankK, 3)
        }
        .validated()
        .unwrap();
        let rho = sample_ginibre(&cfg, &mut derive_rng(5, &[0]));
        let s = spectral_decompose(&rho);
        assert!(s.eigenvalues[1] > 1e-6);
        for &l in &s.eigenvalues[2..] {
            assert!(l < 1e-12, "eigenvalue {l} beyond rank bound");
        }
    }

    #[test]
    fn separable_samples_pass_ppt() {
        // Independent check: the partial transpose on B of a separable
        // state has no negative eigenvalue.
        let cfg = SamplerConfig::new(3, Ensemble::SeparableMixture, 2).validated().unwrap();
        let mut rng = derive_rng(cfg.seed, &[0]);
        for _ in 0..100 {
            let rho = sample_separable(&cfg, &mut rng);
            let d = 2;
            let pt = ComplexMatrix::from_fn(4, 4, |r, c| {
                let (i, a) = (r / d, r % d);
                let (j, b) = (c / d, c % d);
                rho.matrix().get(i * d + b, j * d + a)
            });
            let min = hermitian_eig(&pt).values.last().copied().unwrap();
            assert!(min > -1e-10, "PPT violated: min eigenvalue {min}");
        }
    }

    #[test]
    fn single_pure_term_is_pure_product() {
        let cfg = SamplerConfig {
            rank: Some(1),
            num_product_terms: 1,
            ..SamplerConfig::new(9, Ensemble::SeparableMixture, 2)
        };
        let rho = sample_separable(&cfg, &mut derive_rng(9, &[0]));
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        let ra = rho.partial_trace(Subsystem::A);
        assert!((ra.purity() - 1.0).abs() < 1e-10);
        // Pure product state: S(ρ_A) = S(ρ) = 0, so the coherent
        // information vanishes.
        assert!(von_neumann_entropy(&rho).abs() < 1e-9);
        assert!(von_neumann_entropy(&ra).abs() < 1e-9);
    }

    #[test]
    fn config_invariants_enforced() {
        assert!(SamplerConfig {
            rank: Some(10),
            ..SamplerConfig::new(0, Ensemble::GinibreRankK, 3)
        }
        .validated()
        .is_err());
        assert!(SamplerConfig::new(0, Ensemble::GinibreRankK, 3).validated().is_err());
        let filled = SamplerConfig {
            num_product_terms: 0,
            ..SamplerConfig::new(0, Ensemble::SeparableMixture, 3)
        }
        .validated()
        .unwrap();
        assert_eq!(filled.num_product_terms, 18);
    }
}

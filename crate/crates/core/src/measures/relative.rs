//! Quantum relative entropy S(ρ‖σ) = Tr(ρ log₂ρ − ρ log₂σ).

use crate::error::{Error, Result};
use crate::qcore::{spectral_decompose, DensityMatrix};

/// σ eigenvalues below this count as outside the support.
pub const SUPPORT_EIGENVALUE_TOL: f64 = 1e-12;

/// ρ-weight on a null direction of σ above this makes S(ρ‖σ) infinite.
pub const SUPPORT_OVERLAP_TOL: f64 = 1e-9;

/// Floor applied to σ eigenvalues inside the logarithm.
pub const LOG_EIGENVALUE_FLOOR: f64 = 1e-12;

/// Relative entropy outcome: a finite value in bits, or the infinite
/// divergence reached when ρ has weight outside the support of σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Divergence::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(*v),
            Divergence::Infinite => None,
        }
    }
}

/// S(ρ‖σ) in bits. Nonnegative; zero iff ρ = σ up to tolerance. A
/// support violation (σ eigenvalue below 1e-12 carrying ρ-overlap above
/// 1e-9) yields `Divergence::Infinite`, which is a mathematical outcome
/// and not an error; only shape mismatches fail.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Divergence> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy needs equal dimensions, got {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sig = spectral_decompose(sigma);
    let mut tr_rho_log_sigma = 0.0;
    for (k, &s) in sig.eigenvalues.iter().enumerate() {
        let v = sig.eigenvectors.column(k);
        let overlap = rho.matrix().quadratic_form(&v, &v).re;
        if s < SUPPORT_EIGENVALUE_TOL && overlap > SUPPORT_OVERLAP_TOL {
            return Ok(Divergence::Infinite);
        }
        if overlap > 0.0 {
            tr_rho_log_sigma += overlap * s.max(LOG_EIGENVALUE_FLOOR).log2();
        }
    }
    let tr_rho_log_rho: f64 = spectral_decompose(rho)
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.log2())
        .sum();
    Ok(Divergence::Finite(tr_rho_log_rho - tr_rho_log_sigma))
}

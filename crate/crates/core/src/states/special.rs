//! Structured state families: maximally entangled, isotropic, noisy.

use crate::error::{Error, Result};
use crate::qcore::{max_entangled, C64, ComplexMatrix, DensityMatrix};

/// The maximally entangled state |ψ+⟩⟨ψ+|, |ψ+⟩ = (1/√d) Σ_i |ii⟩.
pub fn maximally_entangled(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "maximally entangled state needs d >= 2, got {d}"
        )));
    }
    Ok(max_entangled(d))
}

/// Isotropic state ((1-eps)/d²) I + eps |ψ+⟩⟨ψ+| on d ⊗ d.
pub fn isotropic(d: usize, eps: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "mixing weight must lie in [0, 1], got {eps}"
        )));
    }
    let me = maximally_entangled(d)?;
    let dd = (d * d) as f64;
    let m = ComplexMatrix::identity(d * d)
        .scale(C64::new((1.0 - eps) / dd, 0.0))
        .add(&me.matrix().scale(C64::new(eps, 0.0)));
    Ok(DensityMatrix::from_parts_unchecked(d, d, m))
}

/// Noisy maximally entangled family (1-eps) ρ₀ + eps |ψ+⟩⟨ψ+|.
pub fn noisy_me_family(d: usize, eps: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "mixing weight must lie in [0, 1], got {eps}"
        )));
    }
    if rho0.dim_a() != d || rho0.dim_b() != d {
        return Err(Error::DimensionMismatch(format!(
            "base state has dims ({}, {}), expected ({d}, {d})",
            rho0.dim_a(),
            rho0.dim_b()
        )));
    }
    let me = maximally_entangled(d)?;
    let m = rho0
        .matrix()
        .scale(C64::new(1.0 - eps, 0.0))
        .add(&me.matrix().scale(C64::new(eps, 0.0)));
    Ok(DensityMatrix::from_parts_unchecked(d, d, m))
}

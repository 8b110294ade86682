//! Hermitian eigendecomposition, von Neumann entropy, and state moments.

use nalgebra::{DMatrix, SymmetricEigen};

use super::density::DensityMatrix;
use super::matrix::{C64, ComplexMatrix};
use super::{HERMITICITY_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Raw eigendecomposition of a Hermitian matrix: `values` sorted
/// descending, `vectors` holding the matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a density matrix. Eigenvalues are sorted
/// descending and clamped into [0, 1] after a tolerance check.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Dense Hermitian eigensolver. The caller vouches for Hermiticity;
/// deviations beyond 1e-10 are a contract violation and panic.
pub fn hermitian_eig(m: &ComplexMatrix) -> HermitianEig {
    assert!(m.is_square(), "eigendecomposition requires a square matrix");
    assert!(
        m.hermiticity_deviation() <= HERMITICITY_TOL,
        "matrix is not Hermitian within 1e-10"
    );
    let n = m.rows();
    let dm = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("Hermitian eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEig { values, vectors }
}

/// Spectral decomposition of a density matrix. Eigenvalues in
/// [-1e-10, 0) are clamped to 0 and values marginally above 1 are
/// clamped to 1; anything further out indicates a broken invariant.
pub fn spectral_decompose(rho: &DensityMatrix) -> Spectrum {
    let eig = hermitian_eig(rho.matrix());
    let eigenvalues = eig
        .values
        .into_iter()
        .map(|v| {
            assert!(
                v >= -PSD_TOL && v <= 1.0 + PSD_TOL,
                "density-matrix eigenvalue {v:.3e} outside [0, 1] beyond tolerance"
            );
            v.clamp(0.0, 1.0)
        })
        .collect();
    Spectrum { eigenvalues, eigenvectors: eig.vectors }
}

/// Von Neumann entropy S(ρ) = -Σ λ log₂ λ in bits, with 0·log₂0 := 0.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    spectral_decompose(rho)
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Moment μ_m(ρ) = Tr(ρ^m) = Σ λ^m for integer order m ≥ 1.
pub fn moment(rho: &DensityMatrix, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    Ok(spectral_decompose(rho)
        .eigenvalues
        .iter()
        .map(|&l| l.powi(m as i32))
        .sum())
}

/// Rebuild V diag(λ) V† from an eigensystem.
pub fn reconstruct(values: &[f64], vectors: &ComplexMatrix) -> ComplexMatrix {
    let n = vectors.rows();
    assert_eq!(values.len(), n);
    ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vectors.get(i, k) * C64::new(values[k], 0.0) * vectors.get(j, k).conj())
            .sum()
    })
}

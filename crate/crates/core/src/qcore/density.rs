//! Bipartite density matrices and the partial trace.

use serde::{Deserialize, Serialize};

use super::matrix::{C64, ComplexMatrix};
use super::spectral::hermitian_eig;
use super::{HERMITICITY_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Selects one party of a bipartite state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Validated density matrix on a bipartite Hilbert space of dimension
/// `dim_a * dim_b`. The index convention is row = i_a * dim_b + i_b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a candidate density matrix. Checks shape,
    /// Hermiticity (tolerance 1e-10), unit trace (1e-10), and positive
    /// semidefiniteness (eigenvalues >= -1e-10).
    pub fn new(dim_a: usize, dim_b: usize, matrix: ComplexMatrix) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidArgument(
                "subsystem dimensions must be positive".into(),
            ));
        }
        let d = dim_a * dim_b;
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} matrix for dims ({dim_a}, {dim_b}), got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm_dev = matrix.hermiticity_deviation();
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { max_dev: herm_dev, tol: HERMITICITY_TOL });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > HERMITICITY_TOL || trace.im.abs() > HERMITICITY_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "trace is {trace}, expected 1 within 1e-10"
            )));
        }
        let eig = hermitian_eig(&matrix);
        if let Some(&min) = eig.values.last() {
            if min < -PSD_TOL {
                return Err(Error::NotDensityMatrix(format!(
                    "smallest eigenvalue {min:.3e} below -1e-10"
                )));
            }
        }
        Ok(Self { dim_a, dim_b, matrix })
    }

    /// Wrap without validation. For internal constructions that hold the
    /// invariants by design (mixtures of validated states, unitary
    /// conjugations). Debug builds still assert the cheap shape check.
    pub(crate) fn from_parts_unchecked(dim_a: usize, dim_b: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), dim_a * dim_b);
        debug_assert_eq!(matrix.cols(), dim_a * dim_b);
        Self { dim_a, dim_b, matrix }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Total Hilbert-space dimension `dim_a * dim_b`.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Reduced state on the kept subsystem. Keeping A sums out the B
    /// indices, (ρ_A)_{ij} = Σ_k ρ_{(i,k),(j,k)}, and dually for B. The
    /// result is a single-party state, represented with dim_b = 1.
    pub fn partial_trace(&self, keep: Subsystem) -> DensityMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let reduced = match keep {
            Subsystem::A => ComplexMatrix::from_fn(da, da, |i, j| {
                (0..db)
                    .map(|k| self.matrix.get(i * db + k, j * db + k))
                    .sum::<C64>()
            }),
            Subsystem::B => ComplexMatrix::from_fn(db, db, |i, j| {
                (0..da)
                    .map(|k| self.matrix.get(k * db + i, k * db + j))
                    .sum::<C64>()
            }),
        };
        let dim = reduced.rows();
        DensityMatrix::from_parts_unchecked(dim, 1, reduced)
    }

    /// Purity Tr(ρ²), computed directly from the entries.
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix.get(i, j).norm_sqr();
            }
        }
        acc
    }
}

/// Density matrix of a normalized pure state |ψ⟩⟨ψ|.
pub fn pure_state(dim_a: usize, dim_b: usize, psi: &[C64]) -> Result<DensityMatrix> {
    let d = dim_a * dim_b;
    if psi.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "state vector has length {}, expected {d}",
            psi.len()
        )));
    }
    let norm_sqr: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "state vector norm² is {norm_sqr}, expected 1"
        )));
    }
    Ok(DensityMatrix::from_parts_unchecked(
        dim_a,
        dim_b,
        ComplexMatrix::outer(psi, psi),
    ))
}

/// The maximally entangled state (1/√d) Σ_i |ii⟩ on d ⊗ d.
pub fn max_entangled(d: usize) -> DensityMatrix {
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        psi[i * d + i] = amp;
    }
    pure_state(d, d, &psi).expect("maximally entangled state is valid by construction")
}

/// The maximally mixed state I/(d_a d_b).
pub fn max_mixed(dim_a: usize, dim_b: usize) -> DensityMatrix {
    let d = dim_a * dim_b;
    let m = ComplexMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0));
    DensityMatrix::from_parts_unchecked(dim_a, dim_b, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_entangled_reduces_to_max_mixed() {
        let rho = max_entangled(3);
        let ra = rho.partial_trace(Subsystem::A);
        let rb = rho.partial_trace(Subsystem::B);
        let third = ComplexMatrix::identity(3).scale(C64::new(1.0 / 3.0, 0.0));
        assert!(ra.matrix().max_abs_diff(&third) < 1e-12);
        assert!(rb.matrix().max_abs_diff(&third) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let rho = max_mixed(2, 3);
        let ra = rho.partial_trace(Subsystem::A);
        let rb = rho.partial_trace(Subsystem::B);
        assert!((ra.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!((rb.matrix().trace().re - 1.0).abs() < 1e-12);
        assert_eq!(ra.dim(), 2);
        assert_eq!(rb.dim(), 3);
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let a = ComplexMatrix::from_real_diagonal(&[0.7, 0.3]);
        let b = ComplexMatrix::from_real_diagonal(&[0.5, 0.25, 0.25]);
        let rho = DensityMatrix::new(2, 3, a.kron(&b)).unwrap();
        assert!(rho.partial_trace(Subsystem::A).matrix().max_abs_diff(&a) < 1e-12);
        assert!(rho.partial_trace(Subsystem::B).matrix().max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(4).scale(C64::new(0.25, 0.0));
        m.set(0, 1, C64::new(0.1, 0.0));
        let err = DensityMatrix::new(2, 2, m).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn rejects_wrong_trace() {
        let m = ComplexMatrix::identity(4).scale(C64::new(0.3, 0.0));
        let err = DensityMatrix::new(2, 2, m).unwrap_err();
        assert!(matches!(err, Error::NotDensityMatrix(_)));
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        // diag(0.6, 0.6, -0.1, -0.1): Hermitian, trace 1, but not PSD.
        let m = ComplexMatrix::from_real_diagonal(&[0.6, 0.6, -0.1, -0.1]);
        let err = DensityMatrix::new(2, 2, m).unwrap_err();
        assert!(matches!(err, Error::NotDensityMatrix(_)));
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        assert!((max_entangled(3).purity() - 1.0).abs() < 1e-12);
        assert!((max_mixed(3, 3).purity() - 1.0 / 9.0).abs() < 1e-12);
    }
}

//! Linear-algebra substrate: complex matrices, bipartite density
//! matrices, partial trace, spectral decomposition, entropy, moments.
//!
//! All operations are pure functions of their inputs; values are
//! immutable after construction and safe to share between threads.

mod density;
mod matrix;
mod spectral;

pub use density::{max_entangled, max_mixed, pure_state, DensityMatrix, Subsystem};
pub use matrix::{C64, ComplexMatrix};
pub(crate) use matrix::kron_vec;
pub use spectral::{
    hermitian_eig, moment, reconstruct, spectral_decompose, von_neumann_entropy, HermitianEig,
    Spectrum,
};

/// Largest tolerated deviation from Hermiticity or unit trace.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues of density matrices may undershoot zero by this much.
pub const PSD_TOL: f64 = 1e-10;

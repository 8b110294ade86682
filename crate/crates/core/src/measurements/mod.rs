//! Local measurements and the statistics they generate: fixed
//! Fourier-phase bases, trainable parameterized bases, correlation
//! tensors p(ab|xy), and analytic Jacobians of correlations with
//! respect to measurement parameters.

mod correlations;
mod measurement;
mod unitary;

pub use correlations::{
    correlation_jacobian, correlations, CorrelationJacobian, CorrelationTensor,
};
pub use measurement::{cglmp_basis, Measurement, MeasurementParams};
pub use unitary::params_to_measurement;
pub(crate) use unitary::unitary_to_params;

/// Orthonormality/completeness tolerance for measurement bases.
pub const MEASUREMENT_TOL: f64 = 1e-10;

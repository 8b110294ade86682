//! Projective measurement bases and per-device parameter bundles.

use serde::{Deserialize, Serialize};

use super::MEASUREMENT_TOL;
use crate::error::{Error, Result};
use crate::qcore::{C64, ComplexMatrix, Subsystem};

/// A d-outcome projective measurement, held as the d orthonormal
/// eigenvector columns; projectors are the rank-1 outer products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    dim: usize,
    eigenvectors: ComplexMatrix,
}

impl Measurement {
    /// Validate orthonormality and completeness (both within 1e-10).
    pub fn new(eigenvectors: ComplexMatrix) -> Result<Self> {
        if !eigenvectors.is_square() || eigenvectors.rows() == 0 {
            return Err(Error::DimensionMismatch(
                "measurement needs a nonempty square eigenvector matrix".into(),
            ));
        }
        let d = eigenvectors.rows();
        let id = ComplexMatrix::identity(d);
        let gram = eigenvectors.adjoint().matmul(&eigenvectors);
        let ortho_dev = gram.max_abs_diff(&id);
        if ortho_dev > MEASUREMENT_TOL {
            return Err(Error::InvalidArgument(format!(
                "basis columns not orthonormal: max deviation {ortho_dev:.3e}"
            )));
        }
        let completeness = eigenvectors.matmul(&eigenvectors.adjoint());
        let comp_dev = completeness.max_abs_diff(&id);
        if comp_dev > MEASUREMENT_TOL {
            return Err(Error::InvalidArgument(format!(
                "projectors do not resolve the identity: max deviation {comp_dev:.3e}"
            )));
        }
        Ok(Self { dim: d, eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    /// Basis vector for outcome `r`.
    pub fn basis_vector(&self, r: usize) -> Vec<C64> {
        self.eigenvectors.column(r)
    }
}

/// Build the Fourier-phase measurement basis for one device. Party A
/// setting k uses |r⟩ = (1/√d) Σ_q e^{(2πi/d) q (r − α_k)} |q⟩ with
/// α_k = (k − 1/2)/N; party B conjugates the phase and uses β_l = l/N.
/// Settings are 1-based: 1 ≤ k ≤ N.
pub fn cglmp_basis(d: usize, n: usize, party: Subsystem, k: usize) -> Result<Measurement> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "setting index {k} outside 1..={n}"
        )));
    }
    let offset = match party {
        Subsystem::A => (k as f64 - 0.5) / n as f64,
        Subsystem::B => k as f64 / n as f64,
    };
    let sign = match party {
        Subsystem::A => 1.0,
        Subsystem::B => -1.0,
    };
    let norm = 1.0 / (d as f64).sqrt();
    let eigenvectors = ComplexMatrix::from_fn(d, d, |q, r| {
        let phase = sign * 2.0 * std::f64::consts::PI / d as f64 * q as f64 * (r as f64 - offset);
        C64::new(phase.cos() * norm, phase.sin() * norm)
    });
    Measurement::new(eigenvectors)
}

/// Trainable measurement parameters: one θ vector of length d² per
/// device, ordered (A₁..A_N, B₁..B_N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams {
    dim: usize,
    n_settings: usize,
    thetas: Vec<Vec<f64>>,
}

impl MeasurementParams {
    /// All-zero parameters: every device measures the computational basis.
    pub fn zeros(dim: usize, n_settings: usize) -> Self {
        Self {
            dim,
            n_settings,
            thetas: vec![vec![0.0; dim * dim]; 2 * n_settings],
        }
    }

    pub fn new(dim: usize, n_settings: usize, thetas: Vec<Vec<f64>>) -> Result<Self> {
        if thetas.len() != 2 * n_settings {
            return Err(Error::InvalidArgument(format!(
                "expected {} device vectors, got {}",
                2 * n_settings,
                thetas.len()
            )));
        }
        for (i, t) in thetas.iter().enumerate() {
            if t.len() != dim * dim {
                return Err(Error::InvalidArgument(format!(
                    "device {i} has {} parameters, expected d² = {}",
                    t.len(),
                    dim * dim
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "device {i} has a non-finite parameter"
                )));
            }
        }
        Ok(Self { dim, n_settings, thetas })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_settings(&self) -> usize {
        self.n_settings
    }

    pub fn num_devices(&self) -> usize {
        2 * self.n_settings
    }

    /// Parameters per device, d².
    pub fn params_per_device(&self) -> usize {
        self.dim * self.dim
    }

    pub fn theta(&self, device: usize) -> &[f64] {
        &self.thetas[device]
    }

    pub fn theta_mut(&mut self, device: usize) -> &mut [f64] {
        &mut self.thetas[device]
    }

    /// All parameters as one flat vector, device-major.
    pub fn flatten(&self) -> Vec<f64> {
        self.thetas.iter().flatten().copied().collect()
    }

    /// Inverse of `flatten`.
    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_devices() * self.params_per_device());
        let p = self.params_per_device();
        for (i, t) in self.thetas.iter_mut().enumerate() {
            t.copy_from_slice(&flat[i * p..(i + 1) * p]);
        }
    }

    /// Realize every device as a concrete measurement basis:
    /// (A-devices, B-devices).
    pub fn to_measurements(&self) -> Result<(Vec<Measurement>, Vec<Measurement>)> {
        let mut a = Vec::with_capacity(self.n_settings);
        let mut b = Vec::with_capacity(self.n_settings);
        for x in 0..self.n_settings {
            a.push(super::params_to_measurement(&self.thetas[x], self.dim)?);
        }
        for y in 0..self.n_settings {
            b.push(super::params_to_measurement(&self.thetas[self.n_settings + y], self.dim)?);
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cglmp_bases_orthonormal_and_complete() {
        for d in [2, 3, 4] {
            for n in [2, 3] {
                for k in 1..=n {
                    for party in [Subsystem::A, Subsystem::B] {
                        let m = cglmp_basis(d, n, party, k).unwrap();
                        let id = ComplexMatrix::identity(d);
                        let gram = m.eigenvectors().adjoint().matmul(m.eigenvectors());
                        assert!(gram.max_abs_diff(&id) < 1e-12);
                        let comp = m.eigenvectors().matmul(&m.eigenvectors().adjoint());
                        assert!(comp.max_abs_diff(&id) < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn qubit_setting_one_sits_on_the_equator() {
        // d=2, N=2, party A, k=1: α₁ = 1/4, so the relative phase of the
        // outcome-0 vector is e^{-iπ/4} and outcome 1 adds a π rotation.
        let m = cglmp_basis(2, 2, Subsystem::A, 1).unwrap();
        let amp = 1.0 / 2f64.sqrt();
        for r in 0..2 {
            let v = m.basis_vector(r);
            assert!((v[0].norm() - amp).abs() < 1e-12);
            assert!((v[1].norm() - amp).abs() < 1e-12);
        }
        let v0 = m.basis_vector(0);
        let ratio = v0[1] / v0[0];
        let expected = C64::new((-std::f64::consts::FRAC_PI_4).cos(), (-std::f64::consts::FRAC_PI_4).sin());
        assert!((ratio - expected).norm() < 1e-12);
    }

    #[test]
    fn qutrit_inner_products_are_kronecker_deltas() {
        let m = cglmp_basis(3, 2, Subsystem::A, 1).unwrap();
        for r in 0..3 {
            for rp in 0..3 {
                let dot: C64 = m
                    .basis_vector(r)
                    .iter()
                    .zip(m.basis_vector(rp))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let expected = if r == rp { 1.0 } else { 0.0 };
                assert!((dot.norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn setting_index_bounds_checked() {
        assert!(cglmp_basis(3, 2, Subsystem::A, 0).is_err());
        assert!(cglmp_basis(3, 2, Subsystem::A, 3).is_err());
        assert!(cglmp_basis(3, 2, Subsystem::B, 2).is_ok());
    }

    #[test]
    fn non_orthonormal_matrix_rejected() {
        let mut m = ComplexMatrix::identity(3);
        m.set(0, 1, C64::new(0.5, 0.0));
        assert!(Measurement::new(m).is_err());
    }

    #[test]
    fn params_roundtrip_and_validation() {
        let mut p = MeasurementParams::zeros(3, 2);
        assert_eq!(p.num_devices(), 4);
        assert_eq!(p.params_per_device(), 9);
        let mut flat = p.flatten();
        assert_eq!(flat.len(), 36);
        flat[10] = 0.7;
        p.assign_flat(&flat);
        assert_eq!(p.theta(1)[1], 0.7);
        assert!(MeasurementParams::new(3, 2, vec![vec![0.0; 9]; 3]).is_err());
        assert!(MeasurementParams::new(3, 2, vec![vec![0.0; 8]; 4]).is_err());
        assert!(MeasurementParams::new(3, 2, vec![vec![f64::NAN; 9]; 4]).is_err());
    }
}

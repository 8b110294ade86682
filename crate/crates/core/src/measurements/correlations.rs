//! Joint outcome probabilities p(ab|xy) for local projective measurements
//! and their exact gradients with respect to measurement parameters.

use super::measurement::{Measurement, MeasurementParams};
use super::unitary::unitary_and_gradient;
use crate::error::{Error, Result};
use crate::qcore::{kron_vec, C64, DensityMatrix, Subsystem};

/// Entries at least this far below zero indicate a bug, not eigenvalue noise.
const CLAMP_TOL: f64 = 1e-12;

/// p(ab|xy) for all settings x, y and outcomes a, b, stored in
/// (x, y, a, b) lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTensor {
    n_settings_a: usize,
    n_settings_b: usize,
    n_outcomes: usize,
    values: Vec<f64>,
}

impl CorrelationTensor {
    pub fn n_settings_a(&self) -> usize {
        self.n_settings_a
    }

    pub fn n_settings_b(&self) -> usize {
        self.n_settings_b
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    #[inline]
    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.n_settings_b + y) * self.n_outcomes + a) * self.n_outcomes + b
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.values[self.index(x, y, a, b)]
    }

    /// Flat view in (x, y, a, b) lexicographic order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 2D layout for convolutional inputs: rows indexed (x, a) as x·d + a,
    /// columns indexed (y, b) as y·d + b. Returns (rows, cols, row-major values).
    pub fn to_grid(&self) -> (usize, usize, Vec<f64>) {
        let d = self.n_outcomes;
        let rows = self.n_settings_a * d;
        let cols = self.n_settings_b * d;
        let mut grid = vec![0.0; rows * cols];
        for x in 0..self.n_settings_a {
            for a in 0..d {
                for y in 0..self.n_settings_b {
                    for b in 0..d {
                        grid[(x * d + a) * cols + (y * d + b)] = self.get(x, y, a, b);
                    }
                }
            }
        }
        (rows, cols, grid)
    }
}

fn check_devices(rho: &DensityMatrix, a_devices: &[Measurement], b_devices: &[Measurement]) -> Result<()> {
    if a_devices.is_empty() || b_devices.is_empty() {
        return Err(Error::InvalidArgument("need at least one device per party".into()));
    }
    if rho.dim_a() != rho.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "correlation tensor requires equal subsystem dimensions, got {} and {}",
            rho.dim_a(),
            rho.dim_b()
        )));
    }
    for (party, dim, devices) in [("A", rho.dim_a(), a_devices), ("B", rho.dim_b(), b_devices)] {
        if let Some(m) = devices.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "party {party} device has dimension {}, subsystem has {dim}",
                m.dim()
            )));
        }
    }
    Ok(())
}

/// Born probabilities p(ab|xy) = ⟨u_a ⊗ n_b| ρ |u_a ⊗ n_b⟩ for every
/// device pair, clamped at 0 and renormalized per (x, y) slice.
pub fn correlations(
    rho: &DensityMatrix,
    a_devices: &[Measurement],
    b_devices: &[Measurement],
) -> Result<CorrelationTensor> {
    check_devices(rho, a_devices, b_devices)?;
    let d = rho.dim_a();
    let (na, nb) = (a_devices.len(), b_devices.len());
    let mut values = vec![0.0; na * nb * d * d];
    let mut idx = 0;
    for ma in a_devices {
        for mb in b_devices {
            let slice_start = idx;
            for a in 0..d {
                let ua = ma.basis_vector(a);
                for b in 0..d {
                    let psi = kron_vec(&ua, &mb.basis_vector(b));
                    let p = rho.matrix().quadratic_form(&psi, &psi).re;
                    assert!(p >= -CLAMP_TOL, "probability {p:.3e} below clamp tolerance");
                    values[idx] = p.max(0.0);
                    idx += 1;
                }
            }
            let total: f64 = values[slice_start..idx].iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "slice normalization off by {:.3e}", total - 1.0);
            for v in &mut values[slice_start..idx] {
                *v /= total;
            }
        }
    }
    Ok(CorrelationTensor { n_settings_a: na, n_settings_b: nb, n_outcomes: d, values })
}

/// Exact Jacobian ∂p(ab|xy)/∂θ of the map from measurement parameters to
/// correlations. Entries are stored per device; p(ab|xy) depends only on
/// the parameters of devices A_x and B_y, so the other blocks are zero.
#[derive(Debug, Clone)]
pub struct CorrelationJacobian {
    n_settings: usize,
    n_outcomes: usize,
    /// a_grads[x][m][(y·d + a)·d + b] = ∂p(ab|xy)/∂θ^{A_x}_m.
    a_grads: Vec<Vec<Vec<f64>>>,
    /// b_grads[y][m][(x·d + a)·d + b] = ∂p(ab|xy)/∂θ^{B_y}_m.
    b_grads: Vec<Vec<Vec<f64>>>,
}

impl CorrelationJacobian {
    pub fn n_settings(&self) -> usize {
        self.n_settings
    }

    pub fn params_per_device(&self) -> usize {
        self.n_outcomes * self.n_outcomes
    }

    /// ∂p(ab|xy)/∂θ for parameter `param` of the given device; zero when
    /// the device is not involved in setting (x, y).
    pub fn entry(
        &self,
        party: Subsystem,
        device: usize,
        param: usize,
        x: usize,
        y: usize,
        a: usize,
        b: usize,
    ) -> f64 {
        let d = self.n_outcomes;
        match party {
            Subsystem::A => {
                if device != x {
                    return 0.0;
                }
                self.a_grads[x][param][(y * d + a) * d + b]
            }
            Subsystem::B => {
                if device != y {
                    return 0.0;
                }
                self.b_grads[y][param][(x * d + a) * d + b]
            }
        }
    }

    /// Chain rule: fold dL/dp over the tensor (flat (x, y, a, b) order)
    /// into per-device parameter gradients, returned as
    /// (A-device gradients, B-device gradients).
    pub fn chain(&self, dldp: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.n_settings;
        let d = self.n_outcomes;
        assert_eq!(dldp.len(), n * n * d * d, "dL/dp length mismatch");
        let entry = |x: usize, y: usize, a: usize, b: usize| dldp[((x * n + y) * d + a) * d + b];
        let p = self.params_per_device();
        let mut ga = vec![vec![0.0; p]; n];
        let mut gb = vec![vec![0.0; p]; n];
        for x in 0..n {
            for m in 0..p {
                let grads = &self.a_grads[x][m];
                let mut acc = 0.0;
                for y in 0..n {
                    for a in 0..d {
                        for b in 0..d {
                            acc += entry(x, y, a, b) * grads[(y * d + a) * d + b];
                        }
                    }
                }
                ga[x][m] = acc;
            }
        }
        for y in 0..n {
            for m in 0..p {
                let grads = &self.b_grads[y][m];
                let mut acc = 0.0;
                for x in 0..n {
                    for a in 0..d {
                        for b in 0..d {
                            acc += entry(x, y, a, b) * grads[(x * d + a) * d + b];
                        }
                    }
                }
                gb[y][m] = acc;
            }
        }
        (ga, gb)
    }
}

/// Analytic Jacobian of θ → correlations(ρ, devices(θ)), computed from the
/// spectral derivative of each device unitary. With w = ρψ and
/// ψ = u_a ⊗ n_b, a parameter's entry is 2 Re⟨∂ψ, w⟩ contracted against
/// the fixed factor of the other party.
pub fn correlation_jacobian(rho: &DensityMatrix, params: &MeasurementParams) -> Result<CorrelationJacobian> {
    let d = params.dim();
    if rho.dim_a() != d || rho.dim_b() != d {
        return Err(Error::DimensionMismatch(format!(
            "params have dimension {d}, state subsystems have {} and {}",
            rho.dim_a(),
            rho.dim_b()
        )));
    }
    let n = params.n_settings();
    let p = params.params_per_device();
    let grads_a: Vec<_> = (0..n).map(|x| unitary_and_gradient(params.theta(x), d)).collect();
    let grads_b: Vec<_> = (0..n).map(|y| unitary_and_gradient(params.theta(n + y), d)).collect();

    let mut a_grads = vec![vec![vec![0.0; n * d * d]; p]; n];
    let mut b_grads = vec![vec![vec![0.0; n * d * d]; p]; n];
    for x in 0..n {
        for y in 0..n {
            let ua = &grads_a[x].u;
            let ub = &grads_b[y].u;
            for a in 0..d {
                for b in 0..d {
                    let psi = kron_vec(&ua.column(a), &ub.column(b));
                    let w = rho.matrix().matvec(&psi);
                    // Contractions of w against the fixed factor of each party.
                    let mut wa = vec![C64::new(0.0, 0.0); d];
                    let mut wb = vec![C64::new(0.0, 0.0); d];
                    for i in 0..d {
                        for j in 0..d {
                            wa[i] += ub.get(j, b).conj() * w[i * d + j];
                            wb[j] += ua.get(i, a).conj() * w[i * d + j];
                        }
                    }
                    for m in 0..p {
                        let dua = &grads_a[x].du[m];
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..d {
                            acc += dua.get(i, a).conj() * wa[i];
                        }
                        a_grads[x][m][(y * d + a) * d + b] = 2.0 * acc.re;

                        let dub = &grads_b[y].du[m];
                        let mut acc = C64::new(0.0, 0.0);
                        for j in 0..d {
                            acc += dub.get(j, b).conj() * wb[j];
                        }
                        b_grads[y][m][(x * d + a) * d + b] = 2.0 * acc.re;
                    }
                }
            }
        }
    }
    Ok(CorrelationJacobian { n_settings: n, n_outcomes: d, a_grads, b_grads })
}

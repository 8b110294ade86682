//! Parameterized unitaries U(θ) = exp(iH(θ)) and their derivatives.
//!
//! θ has length d²: the first d entries are the diagonal of H, the rest
//! are (Re, Im) pairs for the strict upper triangle in row-major order.
//! The derivative of the exponential is taken in H's eigenbasis via
//! divided differences of e^{iλ}, written in the uniformly stable form
//! i e^{i(λ_k+λ_l)/2} sinc((λ_k−λ_l)/2) that needs no branch between
//! the degenerate and separated cases.

use super::measurement::Measurement;
use crate::error::{Error, Result};
use crate::qcore::{hermitian_eig, C64, ComplexMatrix};

/// Hermitian generator H(θ). Panics on wrong θ length (callers
/// validate at the API boundary).
fn hermitian_from_params(theta: &[f64], d: usize) -> ComplexMatrix {
    assert_eq!(theta.len(), d * d, "θ must have length d²");
    let mut h = ComplexMatrix::zeros(d, d);
    for q in 0..d {
        h.set(q, q, C64::new(theta[q], 0.0));
    }
    let mut idx = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let v = C64::new(theta[idx], theta[idx + 1]);
            h.set(i, j, v);
            h.set(j, i, v.conj());
            idx += 2;
        }
    }
    h
}

/// sin(x)/x with the analytic value at 0.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// U(θ) together with all ∂U/∂θ_m.
pub(crate) struct UnitaryWithGrad {
    pub u: ComplexMatrix,
    pub du: Vec<ComplexMatrix>,
}

/// Compute U = exp(iH(θ)) and its derivative with respect to every
/// parameter, via the spectral decomposition of H.
pub(crate) fn unitary_and_gradient(theta: &[f64], d: usize) -> UnitaryWithGrad {
    let h = hermitian_from_params(theta, d);
    let eig = hermitian_eig(&h);
    let lam = &eig.values;
    let v = &eig.vectors;

    let exp_il: Vec<C64> = lam.iter().map(|&l| C64::new(l.cos(), l.sin())).collect();
    // U = V diag(e^{iλ}) V†
    let mut core = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        core.set(k, k, exp_il[k]);
    }
    let u = v.matmul(&core).matmul(&v.adjoint());

    // Divided differences Φ_kl of e^{iλ}.
    let mut phi = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let mid = 0.5 * (lam[k] + lam[l]);
            let half = 0.5 * (lam[k] - lam[l]);
            let s = sinc(half);
            phi.set(k, l, C64::new(-mid.sin() * s, mid.cos() * s));
        }
    }

    // ∂U/∂θ_m = V (Φ ∘ (V† ∂H V)) V†, with ∂H sparse per parameter.
    let vh = v.adjoint();
    let mut du = Vec::with_capacity(d * d);
    let mut push_term = |s: ComplexMatrix| {
        let mut core = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            for l in 0..d {
                core.set(k, l, phi.get(k, l) * s.get(k, l));
            }
        }
        du.push(v.matmul(&core).matmul(&vh));
    };
    for q in 0..d {
        // ∂H = E_qq: (V† E_qq V)_kl = conj(V_qk) V_ql.
        push_term(ComplexMatrix::from_fn(d, d, |k, l| v.get(q, k).conj() * v.get(q, l)));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            // Re part: ∂H = E_ij + E_ji.
            push_term(ComplexMatrix::from_fn(d, d, |k, l| {
                v.get(i, k).conj() * v.get(j, l) + v.get(j, k).conj() * v.get(i, l)
            }));
            // Im part: ∂H = i(E_ij − E_ji).
            push_term(ComplexMatrix::from_fn(d, d, |k, l| {
                C64::new(0.0, 1.0)
                    * (v.get(i, k).conj() * v.get(j, l) - v.get(j, k).conj() * v.get(i, l))
            }));
        }
    }
    UnitaryWithGrad { u, du }
}

/// Recover θ with exp(iH(θ)) = V for a unitary V: eigenvectors come from
/// a generic Hermitian combination of V's real and imaginary parts (which
/// commutes with V), phases from the Rayleigh quotients. Principal branch,
/// so eigenphases land in (−π, π].
pub(crate) fn unitary_to_params(v: &ComplexMatrix) -> Vec<f64> {
    assert!(v.is_square());
    let d = v.rows();
    let vh = v.adjoint();
    // A mixing weight only fails if two distinct eigenphases give the
    // same combined value; retry with others before giving up.
    for c in [0.7390851332151607, 1.2412535341894302, 0.3111086724970395] {
        let m = ComplexMatrix::from_fn(d, d, |i, j| {
            let sym = (v.get(i, j) + vh.get(i, j)) * 0.5;
            let asym = (v.get(i, j) - vh.get(i, j)) * C64::new(0.0, -0.5);
            sym + asym * c
        });
        let eig = hermitian_eig(&m);
        let mut h = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let col = eig.vectors.column(k);
            let vv = v.quadratic_form(&col, &col);
            let lambda = vv.im.atan2(vv.re);
            for i in 0..d {
                for j in 0..d {
                    let cur = h.get(i, j);
                    h.set(i, j, cur + col[i] * col[j].conj() * lambda);
                }
            }
        }
        let mut theta = vec![0.0; d * d];
        for q in 0..d {
            theta[q] = h.get(q, q).re;
        }
        let mut idx = d;
        for i in 0..d {
            for j in (i + 1)..d {
                theta[idx] = h.get(i, j).re;
                theta[idx + 1] = h.get(i, j).im;
                idx += 2;
            }
        }
        if unitary_and_gradient(&theta, d).u.max_abs_diff(v) < 1e-8 {
            return theta;
        }
    }
    panic!("unitary log round trip failed for every mixing weight");
}

/// Measurement in the eigenbasis of U(θ): outcome r projects onto the
/// r-th column of U = exp(iH(θ)).
pub fn params_to_measurement(theta: &[f64], d: usize) -> Result<Measurement> {
    if theta.len() != d * d {
        return Err(Error::InvalidArgument(format!(
            "θ has length {}, expected d² = {}",
            theta.len(),
            d * d
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("θ has a non-finite entry".into()));
    }
    Measurement::new(unitary_and_gradient(theta, d).u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;

    fn random_theta(d: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..d * d).map(|_| rng.gen_range(-1.5..1.5)).collect()
    }

    #[test]
    fn zero_theta_gives_computational_basis() {
        let m = params_to_measurement(&vec![0.0; 9], 3).unwrap();
        assert!(m.eigenvectors().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn random_theta_gives_unitary() {
        let mut rng = derive_rng(19, &[0]);
        for d in [2, 3, 4] {
            for _ in 0..5 {
                let theta = random_theta(d, &mut rng);
                let m = params_to_measurement(&theta, d).unwrap();
                let v = m.eigenvectors();
                let id = ComplexMatrix::identity(d);
                assert!(v.adjoint().matmul(v).max_abs_diff(&id) < 1e-10);
                assert!(v.matmul(&v.adjoint()).max_abs_diff(&id) < 1e-10);
            }
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(params_to_measurement(&[0.0; 8], 3).is_err());
    }

    #[test]
    fn unitary_derivative_matches_finite_differences() {
        let mut rng = derive_rng(23, &[1]);
        let d = 3;
        for _ in 0..3 {
            let theta = random_theta(d, &mut rng);
            let grad = unitary_and_gradient(&theta, d);
            let h = 1e-5;
            for m in 0..d * d {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[m] += h;
                dn[m] -= h;
                let uu = unitary_and_gradient(&up, d).u;
                let ud = unitary_and_gradient(&dn, d).u;
                let fd = uu.sub(&ud).scale(C64::new(1.0 / (2.0 * h), 0.0));
                let err = fd.max_abs_diff(&grad.du[m]);
                assert!(err < 1e-8, "param {m}: max abs deviation {err:.3e}");
            }
        }
    }

    #[test]
    fn unitary_log_round_trips() {
        let mut rng = derive_rng(29, &[2]);
        for d in [2, 3] {
            for _ in 0..4 {
                let theta = random_theta(d, &mut rng);
                let u = unitary_and_gradient(&theta, d).u;
                let back = unitary_to_params(&u);
                let u2 = unitary_and_gradient(&back, d).u;
                assert!(u2.max_abs_diff(&u) < 1e-8);
            }
        }
        // Identity: all phases zero.
        let theta = unitary_to_params(&ComplexMatrix::identity(3));
        assert!(theta.iter().all(|t| t.abs() < 1e-10));
    }

    #[test]
    fn degenerate_spectrum_is_stable() {
        // H = diag(0.5, 0.5, 0.5): fully degenerate; derivatives must
        // still match finite differences.
        let mut theta = vec![0.0; 9];
        theta[0] = 0.5;
        theta[1] = 0.5;
        theta[2] = 0.5;
        let grad = unitary_and_gradient(&theta, 3);
        let h = 1e-5;
        for m in 0..9 {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[m] += h;
            dn[m] -= h;
            let uu = unitary_and_gradient(&up, 3).u;
            let ud = unitary_and_gradient(&dn, 3).u;
            let fd = uu.sub(&ud).scale(C64::new(1.0 / (2.0 * h), 0.0));
            assert!(fd.max_abs_diff(&grad.du[m]) < 1e-8);
        }
    }
}

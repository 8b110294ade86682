//! C ABI over the core library: opaque state handles, integer status
//! codes, and flat f64 buffers for matrices and feature vectors.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use entanglib::error::Error;
use entanglib::harness::{cglmp_devices, correlation_features};
use entanglib::measures::{coherent_information, ree_upper_bound, ReeOptConfig};
use entanglib::qcore::{moment, von_neumann_entropy, C64, ComplexMatrix, DensityMatrix, Subsystem};

/// Call completed successfully.
pub const ENT_OK: i32 = 0;
/// A required pointer argument was null.
pub const ENT_ERR_NULL: i32 = 1;
/// An argument was out of range or otherwise invalid.
pub const ENT_ERR_INVALID: i32 = 2;
/// A buffer length did not match the expected element count.
pub const ENT_ERR_LENGTH: i32 = 3;
/// The input failed density-matrix validation.
pub const ENT_ERR_NOT_DENSITY: i32 = 4;
/// A numeric routine failed or panicked.
pub const ENT_ERR_NUMERIC: i32 = 5;

/// Opaque handle for a validated bipartite density matrix.
pub struct EntState {
    inner: DensityMatrix,
}

fn status_of(err: &Error) -> i32 {
    match err {
        Error::NotHermitian { .. } | Error::NotDensityMatrix(_) => ENT_ERR_NOT_DENSITY,
        Error::NanLoss { .. } => ENT_ERR_NUMERIC,
        _ => ENT_ERR_INVALID,
    }
}

fn guarded(body: impl FnOnce() -> i32) -> i32 {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(ENT_ERR_NUMERIC)
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ent_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ent_strerror(code: i32) -> *const c_char {
    let msg: &'static [u8] = match code {
        ENT_OK => b"ok\0",
        ENT_ERR_NULL => b"null pointer argument\0",
        ENT_ERR_INVALID => b"invalid argument\0",
        ENT_ERR_LENGTH => b"buffer length mismatch\0",
        ENT_ERR_NOT_DENSITY => b"not a density matrix\0",
        ENT_ERR_NUMERIC => b"numeric failure\0",
        _ => b"unknown status code\0",
    };
    msg.as_ptr() as *const c_char
}

/// Build a state handle from `2*(dim_a*dim_b)^2` doubles, row-major with
/// interleaved re/im parts; writes the new handle to `out` on success.
#[no_mangle]
pub unsafe extern "C" fn ent_state_new(
    dim_a: usize,
    dim_b: usize,
    re_im: *const f64,
    len: usize,
    out: *mut *mut EntState,
) -> i32 {
    if re_im.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    if dim_a == 0 || dim_b == 0 {
        return ENT_ERR_INVALID;
    }
    let d = dim_a * dim_b;
    if len != 2 * d * d {
        return ENT_ERR_LENGTH;
    }
    let buf = std::slice::from_raw_parts(re_im, len);
    guarded(|| {
        let data: Vec<C64> = buf.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        match DensityMatrix::new(dim_a, dim_b, ComplexMatrix::new(d, d, data)) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(EntState { inner: state }));
                ENT_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ent_state_free(state: *mut EntState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Write the subsystem dimensions of `state` to `dim_a` and `dim_b`.
#[no_mangle]
pub unsafe extern "C" fn ent_state_dims(
    state: *const EntState,
    dim_a: *mut usize,
    dim_b: *mut usize,
) -> i32 {
    if state.is_null() || dim_a.is_null() || dim_b.is_null() {
        return ENT_ERR_NULL;
    }
    let rho = &(*state).inner;
    *dim_a = rho.dim_a();
    *dim_b = rho.dim_b();
    ENT_OK
}

/// Copy the matrix into `out` as interleaved re/im doubles; `len` must be
/// `2*(dim_a*dim_b)^2`.
#[no_mangle]
pub unsafe extern "C" fn ent_state_data(state: *const EntState, out: *mut f64, len: usize) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    let rho = &(*state).inner;
    let d = rho.dim();
    if len != 2 * d * d {
        return ENT_ERR_LENGTH;
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    for (pair, z) in dst.chunks_exact_mut(2).zip(rho.matrix().data()) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
    ENT_OK
}

/// Reduce onto one party: nonzero `keep_a` keeps A, zero keeps B. The
/// result is a fresh single-party handle with dim_b = 1.
#[no_mangle]
pub unsafe extern "C" fn ent_partial_trace(
    state: *const EntState,
    keep_a: i32,
    out: *mut *mut EntState,
) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    let rho = &(*state).inner;
    guarded(|| {
        let keep = if keep_a != 0 { Subsystem::A } else { Subsystem::B };
        *out = Box::into_raw(Box::new(EntState { inner: rho.partial_trace(keep) }));
        ENT_OK
    })
}

/// Von Neumann entropy of the state in bits.
#[no_mangle]
pub unsafe extern "C" fn ent_von_neumann_entropy(state: *const EntState, out: *mut f64) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    guarded(|| {
        *out = von_neumann_entropy(&(*state).inner);
        ENT_OK
    })
}

/// Coherent information S(rho_A) - S(rho) in bits.
#[no_mangle]
pub unsafe extern "C" fn ent_coherent_information(state: *const EntState, out: *mut f64) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    guarded(|| {
        *out = coherent_information(&(*state).inner);
        ENT_OK
    })
}

/// Moment Tr(rho^order) for integer `order >= 1`.
#[no_mangle]
pub unsafe extern "C" fn ent_moment(state: *const EntState, order: u32, out: *mut f64) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    guarded(|| match moment(&(*state).inner, order) {
        Ok(v) => {
            *out = v;
            ENT_OK
        }
        Err(e) => status_of(&e),
    })
}

/// Relative-entropy-of-entanglement upper bound in bits. Zero `restarts`
/// or `max_iters` selects the built-in defaults for the state dimension.
#[no_mangle]
pub unsafe extern "C" fn ent_ree_upper_bound(
    state: *const EntState,
    seed: u64,
    restarts: usize,
    max_iters: usize,
    out: *mut f64,
) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    let rho = &(*state).inner;
    guarded(|| {
        let mut cfg = ReeOptConfig::for_dim(rho.dim_a().max(rho.dim_b()), seed);
        cfg.num_terms = 2 * rho.dim_a() * rho.dim_b();
        if restarts > 0 {
            cfg.restarts = restarts;
        }
        if max_iters > 0 {
            cfg.max_iters = max_iters;
        }
        match ree_upper_bound(rho, &cfg) {
            Ok(res) => {
                *out = res.upper_bound;
                ENT_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Joint outcome probabilities under the fixed CGLMP bases at
/// `n_settings` settings per party, in (x, y, a, b) lexicographic order;
/// requires equal local dimensions and `len == n_settings^2 * d^2`.
#[no_mangle]
pub unsafe extern "C" fn ent_cglmp_correlations(
    state: *const EntState,
    n_settings: usize,
    out: *mut f64,
    len: usize,
) -> i32 {
    if state.is_null() || out.is_null() {
        return ENT_ERR_NULL;
    }
    let rho = &(*state).inner;
    let d = rho.dim_a();
    if rho.dim_b() != d {
        return ENT_ERR_INVALID;
    }
    if len != n_settings * n_settings * d * d {
        return ENT_ERR_LENGTH;
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    guarded(|| {
        let values = cglmp_devices(d, n_settings).and_then(|(a, b)| correlation_features(rho, &a, &b));
        match values {
            Ok(values) => {
                assert_eq!(values.len(), len);
                dst.copy_from_slice(&values);
                ENT_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_covers_the_error_variants() {
        assert_eq!(status_of(&Error::NotHermitian { max_dev: 1.0, tol: 1e-10 }), ENT_ERR_NOT_DENSITY);
        assert_eq!(status_of(&Error::NotDensityMatrix("trace".into())), ENT_ERR_NOT_DENSITY);
        assert_eq!(status_of(&Error::NanLoss { epoch: 1, detail: "loss".into() }), ENT_ERR_NUMERIC);
        assert_eq!(status_of(&Error::InvalidArgument("arg".into())), ENT_ERR_INVALID);
        assert_eq!(status_of(&Error::DimensionMismatch("shape".into())), ENT_ERR_INVALID);
    }

    #[test]
    fn strerror_is_nul_terminated_for_every_code() {
        for code in [-1, ENT_OK, ENT_ERR_NULL, ENT_ERR_INVALID, ENT_ERR_LENGTH, ENT_ERR_NOT_DENSITY, ENT_ERR_NUMERIC, 99] {
            let ptr = ent_strerror(code);
            assert!(!ptr.is_null());
            let text = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
            assert!(!text.is_empty());
        }
    }

    #[test]
    fn guarded_converts_panics_into_numeric_status() {
        assert_eq!(guarded(|| panic!("boom")), ENT_ERR_NUMERIC);
        assert_eq!(guarded(|| ENT_OK), ENT_OK);
    }

    #[test]
    fn version_string_is_readable() {
        let text = unsafe { std::ffi::CStr::from_ptr(ent_version()) }.to_str().unwrap();
        assert!(text.split('.').count() >= 2);
    }
}

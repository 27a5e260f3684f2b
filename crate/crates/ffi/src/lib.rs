//! C ABI for the fermichain toolkit.
//!
//! Handles are opaque pointers created and destroyed by this library;
//! every function returns an [`FcStatus`] code and writes results through
//! out-pointers. The header is generated into `include/fermichain.h` at
//! build time.

use std::ffi::{c_char, c_double};

use fermichain::covariance::{CovarianceTruncation, XYParams};
use fermichain::diagnostics;
use fermichain::entanglement::{
    block_entropy, entanglement_spectrum, log_negativity, one_copy_exact, schmidt_from_spectrum,
};
use fermichain::error::Error;
use fermichain::lattice::Window;
use fermichain::quasifree::{
    pauli_expectation, pfaffian, reduced_density_matrix, DensityMatrix, Pauli, PauliString,
};
use fermichain::resource::chsh_beta;

/// Status codes returned by every fermichain call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    ErrNullPointer = 1,
    ErrInvalidArgument = 2,
    ErrSingular = 3,
    ErrNotConverged = 4,
    ErrOutOfRange = 5,
    ErrNumerical = 6,
}

fn status_of(e: &Error) -> FcStatus {
    match e {
        Error::SymbolSingular { .. } => FcStatus::ErrSingular,
        Error::QuadratureNotConverged { .. } => FcStatus::ErrNotConverged,
        Error::SupportOutsideWindow { .. }
        | Error::SiteOutsideWindow { .. }
        | Error::TooManyFactors { .. }
        | Error::TooManySites { .. } => FcStatus::ErrOutOfRange,
        Error::InvalidWindow { .. } | Error::InvalidArgument(_) | Error::NotTwoQubit { .. } => {
            FcStatus::ErrInvalidArgument
        }
        _ => FcStatus::ErrNumerical,
    }
}

/// Human-readable description of a status code (static storage).
#[no_mangle]
pub extern "C" fn fc_status_message(status: FcStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        FcStatus::Ok => b"ok\0",
        FcStatus::ErrNullPointer => b"null pointer argument\0",
        FcStatus::ErrInvalidArgument => b"invalid argument\0",
        FcStatus::ErrSingular => b"symbol singular at a sample point\0",
        FcStatus::ErrNotConverged => b"quadrature or optimizer did not converge\0",
        FcStatus::ErrOutOfRange => b"index or size out of range\0",
        FcStatus::ErrNumerical => b"numerical failure\0",
    };
    msg.as_ptr() as *const c_char
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque covariance truncation handle.
pub struct FcCovariance(CovarianceTruncation);

/// Opaque reduced density matrix handle.
pub struct FcDensityMatrix(DensityMatrix);

/// Build the XY covariance truncation on the window `[lo, hi)`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle that
/// must be released with [`fc_covariance_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_covariance_build(
    gamma: c_double,
    lambda: c_double,
    lo: i64,
    hi: i64,
    out: *mut *mut FcCovariance,
) -> FcStatus {
    if out.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let build = || -> Result<CovarianceTruncation, Error> {
        let params = XYParams::new(gamma, lambda)?;
        CovarianceTruncation::build(&params, Window::new(lo, hi)?)
    };
    match build() {
        Ok(t) => {
            *out = Box::into_raw(Box::new(FcCovariance(t)));
            FcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `handle` must come from [`fc_covariance_build`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fc_covariance_free(handle: *mut FcCovariance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Row count of the (square) covariance matrix: `2 * window length`.
///
/// # Safety
/// `handle` must be a live covariance handle.
#[no_mangle]
pub unsafe extern "C" fn fc_covariance_dim(handle: *const FcCovariance) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).0.complex_form().nrows()
}

/// # Safety
/// `handle` must be live; `re`, `im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fc_covariance_complex_entry(
    handle: *const FcCovariance,
    row: usize,
    col: usize,
    re: *mut c_double,
    im: *mut c_double,
) -> FcStatus {
    if handle.is_null() || re.is_null() || im.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let m = (*handle).0.complex_form();
    if row >= m.nrows() || col >= m.ncols() {
        return FcStatus::ErrOutOfRange;
    }
    let z = m[(row, col)];
    *re = z.re;
    *im = z.im;
    FcStatus::Ok
}

/// # Safety
/// `handle` must be live; `val` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_covariance_majorana_entry(
    handle: *const FcCovariance,
    row: usize,
    col: usize,
    val: *mut c_double,
) -> FcStatus {
    if handle.is_null() || val.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let m = (*handle).0.majorana_form();
    if row >= m.nrows() || col >= m.ncols() {
        return FcStatus::ErrOutOfRange;
    }
    *val = m[(row, col)];
    FcStatus::Ok
}

/// Pfaffian of a real antisymmetric matrix given row-major.
///
/// # Safety
/// `data` must point to `dim * dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_pfaffian(
    data: *const c_double,
    dim: usize,
    out: *mut c_double,
) -> FcStatus {
    if data.is_null() || out.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let slice = std::slice::from_raw_parts(data, dim * dim);
    let m = match ndarray::Array2::from_shape_vec((dim, dim), slice.to_vec()) {
        Ok(m) => m,
        Err(_) => return FcStatus::ErrInvalidArgument,
    };
    match pfaffian(&m) {
        Ok(v) => {
            *out = v;
            FcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Expectation of a Pauli string: `sites[i]` carries letter `letters[i]`
/// (0 = X, 1 = Y, 2 = Z).
///
/// # Safety
/// `sites` and `letters` must point to `n` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_pauli_expectation(
    handle: *const FcCovariance,
    sites: *const i64,
    letters: *const u8,
    n: usize,
    out: *mut c_double,
) -> FcStatus {
    if handle.is_null() || sites.is_null() || letters.is_null() || out.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let sites = std::slice::from_raw_parts(sites, n);
    let letters = std::slice::from_raw_parts(letters, n);
    let mut terms = Vec::with_capacity(n);
    for (&s, &l) in sites.iter().zip(letters) {
        let letter = match l {
            0 => Pauli::X,
            1 => Pauli::Y,
            2 => Pauli::Z,
            _ => return FcStatus::ErrInvalidArgument,
        };
        terms.push((s, letter));
    }
    let p = PauliString::from_letters(terms);
    match pauli_expectation(&p, &(*handle).0) {
        Ok(v) => {
            *out = v;
            FcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Reconstruct the reduced density matrix on `sites`.
///
/// # Safety
/// `sites` must point to `n` distinct sites inside the covariance window;
/// `out` receives a handle to release with [`fc_density_matrix_free`].
#[no_mangle]
pub unsafe extern "C" fn fc_rdm_build(
    handle: *const FcCovariance,
    sites: *const i64,
    n: usize,
    out: *mut *mut FcDensityMatrix,
) -> FcStatus {
    if handle.is_null() || sites.is_null() || out.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let sites = std::slice::from_raw_parts(sites, n);
    match reduced_density_matrix(sites, &(*handle).0) {
        Ok(rho) => {
            *out = Box::into_raw(Box::new(FcDensityMatrix(rho)));
            FcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `handle` must come from [`fc_rdm_build`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fc_density_matrix_free(handle: *mut FcDensityMatrix) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live density-matrix handle.
#[no_mangle]
pub unsafe extern "C" fn fc_density_matrix_dim(handle: *const FcDensityMatrix) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).0.dim()
}

/// Entry of the raw reconstructed matrix.
///
/// # Safety
/// `handle` must be live; `re`, `im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fc_density_matrix_entry(
    handle: *const FcDensityMatrix,
    row: usize,
    col: usize,
    re: *mut c_double,
    im: *mut c_double,
) -> FcStatus {
    if handle.is_null() || re.is_null() || im.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let m = (*handle).0.matrix();
    if row >= m.nrows() || col >= m.ncols() {
        return FcStatus::ErrOutOfRange;
    }
    let z = m[(row, col)];
    *re = z.re;
    *im = z.im;
    FcStatus::Ok
}

/// `tr(X_N)` on the window `[-N, N)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_trace_x(
    gamma: c_double,
    lambda: c_double,
    n: i64,
    out: *mut c_double,
) -> FcStatus {
    eval_scalar(out, || {
        let p = XYParams::new(gamma, lambda)?;
        diagnostics::trace_x(&p, n)
    })
}

/// `‖E_N − F_N‖²_HS`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_hs_norm_e_minus_f(
    gamma: c_double,
    lambda: c_double,
    n: i64,
    out: *mut c_double,
) -> FcStatus {
    eval_scalar(out, || {
        let p = XYParams::new(gamma, lambda)?;
        diagnostics::hs_norm_e_minus_f(&p, n)
    })
}

/// `‖E_N − θ₋E_Nθ₋‖²_HS`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_hs_norm_theta(
    gamma: c_double,
    lambda: c_double,
    n: i64,
    out: *mut c_double,
) -> FcStatus {
    eval_scalar(out, || {
        let p = XYParams::new(gamma, lambda)?;
        diagnostics::hs_norm_theta_conjugation(&p, n)
    })
}

/// Block entropy `S(L)` in bits for the block `[0, L)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_block_entropy(
    gamma: c_double,
    lambda: c_double,
    block_len: u32,
    out: *mut c_double,
) -> FcStatus {
    eval_scalar(out, || {
        let p = XYParams::new(gamma, lambda)?;
        let block = Window::new(0, block_len as i64)?;
        let s = entanglement_spectrum(&p, block, 4 * block_len as i64)?;
        Ok(block_entropy(&s))
    })
}

/// Majorization one-copy entanglement of the block `[0, L)`.
///
/// # Safety
/// `d_out` and `e1_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fc_one_copy(
    gamma: c_double,
    lambda: c_double,
    block_len: u32,
    d_out: *mut u64,
    e1_out: *mut c_double,
) -> FcStatus {
    if d_out.is_null() || e1_out.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let run = || -> Result<(u64, f64), Error> {
        let p = XYParams::new(gamma, lambda)?;
        let block = Window::new(0, block_len as i64)?;
        let spec = entanglement_spectrum(&p, block, 4 * block_len as i64)?;
        let schmidt = schmidt_from_spectrum(&spec, 1e-10)?;
        let oc = one_copy_exact(&schmidt)?;
        Ok((oc.d, oc.e1_bits))
    };
    match run() {
        Ok((d, e1)) => {
            *d_out = d;
            *e1_out = e1;
            FcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Two-qubit CHSH value from the correlation-matrix criterion.
///
/// # Safety
/// `out` must be a valid pointer; the handle must hold a two-qubit state.
#[no_mangle]
pub unsafe extern "C" fn fc_chsh_beta(
    handle: *const FcDensityMatrix,
    out: *mut c_double,
) -> FcStatus {
    if handle.is_null() {
        return FcStatus::ErrNullPointer;
    }
    eval_scalar(out, || chsh_beta(&(*handle).0))
}

/// Logarithmic negativity across the cut whose A side is `cut_a`.
///
/// # Safety
/// `cut_a` must point to `n_a` sites of the state; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_log_negativity(
    handle: *const FcDensityMatrix,
    cut_a: *const i64,
    n_a: usize,
    out: *mut c_double,
) -> FcStatus {
    if handle.is_null() || cut_a.is_null() {
        return FcStatus::ErrNullPointer;
    }
    let cut = std::slice::from_raw_parts(cut_a, n_a);
    eval_scalar(out, || log_negativity(&(*handle).0, cut))
}

unsafe fn eval_scalar(
    out: *mut c_double,
    f: impl FnOnce() -> Result<f64, Error>,
) -> FcStatus {
    if out.is_null() {
        return FcStatus::ErrNullPointer;
    }
    match f() {
        Ok(v) => {
            *out = v;
            FcStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

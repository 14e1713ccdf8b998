//! C ABI surface for pdlab.
//!
//! Exposes the closed-form layer of the library — special functions, the
//! simplex projection density and its Dirichlet comparison, perturbation
//! rate exponents, the tail-integral limits, and stick-breaking sampling —
//! behind opaque handles and integer status codes.
//!
//! Conventions:
//! * Every fallible call returns a [`PdlabStatus`]; `PDLAB_STATUS_OK` (0)
//!   means success. On failure a thread-local message is set; read it with
//!   [`pdlab_last_error_message`]. The message stays valid on its thread
//!   until the next failing pdlab call.
//! * Handles created by `*_new` functions must be released with the matching
//!   `*_free`. Passing null to a `*_free` is a no-op.
//! * Simplex points are passed as their d *free* coordinates x_1..x_d;
//!   the last coordinate x_{d+1} = 1 − Σ x_i is implied.
//! * No call unwinds across the boundary: internal panics are caught and
//!   reported as `PDLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pdlab::numerics::rng::RngStream;
use pdlab::simplex_measures::{
    log_density_dirichlet, log_density_mu, log_perturbation_w, phi, DirichletParams, ModelParams,
    SimplexPoint,
};
use pdlab::stick_breaking::GemParams;
use pdlab::Error;

/// Outcome of a pdlab call. Zero is success; everything else is a failure
/// class mirroring the library's error taxonomy, plus binding-level codes
/// for null pointers, short buffers, and caught panics.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdlabStatus {
    Ok = 0,
    /// A parameter or input was outside its admissible range.
    InvalidParameter = 1,
    /// Evaluation at (or too close to) a boundary singularity.
    Singularity = 2,
    /// Requested accuracy was not reached.
    Accuracy = 3,
    /// Finite-element assembly failed.
    Assembly = 4,
    /// Eigensolver failed.
    Eigensolver = 5,
    /// Outside the validity regime of an asymptotic formula.
    Regime = 6,
    /// An optimization or search subroutine failed.
    SearchFailure = 7,
    /// An I/O error.
    Io = 8,
    /// A required pointer argument was null.
    NullPointer = 9,
    /// The caller's buffer is too small; the required size was reported.
    BufferTooSmall = 10,
    /// An internal panic was caught at the ABI boundary.
    Panic = 11,
}

/// Opaque deterministic RNG stream handle.
pub struct PdlabRng(RngStream);

/// Opaque handle to projection-model parameters (θ and the base pmf p).
pub struct PdlabModel(ModelParams);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: PdlabStatus, msg: &str) -> PdlabStatus {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn fail_with(err: &Error) -> PdlabStatus {
    let status = match err {
        Error::InvalidParameter(_) => PdlabStatus::InvalidParameter,
        Error::Singularity(_) => PdlabStatus::Singularity,
        Error::Accuracy { .. } => PdlabStatus::Accuracy,
        Error::Assembly { .. } => PdlabStatus::Assembly,
        Error::Eigensolver(_) => PdlabStatus::Eigensolver,
        Error::Regime(_) => PdlabStatus::Regime,
        Error::SearchFailure(_) => PdlabStatus::SearchFailure,
        Error::Io(_) => PdlabStatus::Io,
    };
    fail(status, &err.to_string())
}

/// Runs a fallible body, converting panics into `PDLAB_STATUS_PANIC`.
fn guarded(body: impl FnOnce() -> PdlabStatus) -> PdlabStatus {
    catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| fail(PdlabStatus::Panic, "internal panic"))
}

/// Runs an infallible scalar body, converting panics into NaN.
fn guarded_f64(body: impl FnOnce() -> f64) -> f64 {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(f64::NAN)
}

/// Builds a slice from a C pointer/length pair. `len == 0` never touches the
/// pointer; a null pointer with nonzero length is rejected by the callers.
unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Library version as a static null-terminated string.
#[no_mangle]
pub extern "C" fn pdlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on the calling thread, as a
/// null-terminated string. Empty if no pdlab call has failed yet. The
/// pointer stays valid until the next failing pdlab call on this thread.
#[no_mangle]
pub extern "C" fn pdlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---------------------------------------------------------------------------
// RNG handles
// ---------------------------------------------------------------------------

/// Creates a deterministic RNG stream for (seed, stream_id). Never fails.
#[no_mangle]
pub extern "C" fn pdlab_rng_new(seed: u64, stream_id: u64) -> *mut PdlabRng {
    Box::into_raw(Box::new(PdlabRng(RngStream::new(seed, stream_id))))
}

/// Derives an independent child stream from an existing one, leaving the
/// parent untouched. Returns null if `rng` is null.
///
/// # Safety
/// `rng` must be a live handle from `pdlab_rng_new`/`pdlab_rng_substream`.
#[no_mangle]
pub unsafe extern "C" fn pdlab_rng_substream(
    rng: *const PdlabRng,
    stream_id: u64,
) -> *mut PdlabRng {
    match rng.as_ref() {
        Some(r) => Box::into_raw(Box::new(PdlabRng(r.0.substream(stream_id)))),
        None => std::ptr::null_mut(),
    }
}

/// Releases an RNG handle. Null is ignored.
///
/// # Safety
/// `rng` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdlab_rng_free(rng: *mut PdlabRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Draws a standard normal variate into `*out`.
///
/// # Safety
/// `rng` must be a live handle and `out` a writable f64 location.
#[no_mangle]
pub unsafe extern "C" fn pdlab_rng_std_normal(rng: *mut PdlabRng, out: *mut f64) -> PdlabStatus {
    guarded(|| {
        let (Some(r), Some(out)) = (rng.as_mut(), out.as_mut()) else {
            return fail(PdlabStatus::NullPointer, "rng and out must be non-null");
        };
        *out = r.0.sample_std_normal();
        PdlabStatus::Ok
    })
}

/// Draws a uniform variate from the open interval (0, 1) into `*out`.
///
/// # Safety
/// `rng` must be a live handle and `out` a writable f64 location.
#[no_mangle]
pub unsafe extern "C" fn pdlab_rng_unit_open(rng: *mut PdlabRng, out: *mut f64) -> PdlabStatus {
    guarded(|| {
        let (Some(r), Some(out)) = (rng.as_mut(), out.as_mut()) else {
            return fail(PdlabStatus::NullPointer, "rng and out must be non-null");
        };
        *out = r.0.sample_unit_open();
        PdlabStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Model handles
// ---------------------------------------------------------------------------

/// Creates a projection model from θ > −1/2 and the d+1 base probabilities
/// `p[0..p_len]` (positive, summing to 1; `p_len` ≥ 2). On success writes the
/// new handle to `*out`.
///
/// # Safety
/// `p` must point to `p_len` readable f64 values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdlab_model_new(
    theta: f64,
    p: *const f64,
    p_len: usize,
    out: *mut *mut PdlabModel,
) -> PdlabStatus {
    guarded(|| {
        let Some(out) = out.as_mut() else {
            return fail(PdlabStatus::NullPointer, "out must be non-null");
        };
        let Some(p) = slice_arg(p, p_len) else {
            return fail(PdlabStatus::NullPointer, "p must be non-null");
        };
        match ModelParams::new(theta, p.to_vec()) {
            Ok(mp) => {
                *out = Box::into_raw(Box::new(PdlabModel(mp)));
                PdlabStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `m` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdlab_model_free(m: *mut PdlabModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Simplex dimension d of the model (= number of base atoms − 1).
/// Returns 0 if `m` is null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdlab_model_dim(m: *const PdlabModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

// ---------------------------------------------------------------------------
// Densities and potentials
// ---------------------------------------------------------------------------

unsafe fn simplex_point(x: *const f64, x_len: usize) -> Result<SimplexPoint, PdlabStatus> {
    let Some(x) = slice_arg(x, x_len) else {
        return Err(fail(PdlabStatus::NullPointer, "x must be non-null"));
    };
    SimplexPoint::new(x.to_vec()).map_err(|e| fail_with(&e))
}

/// log Γ(x) for x > 0, written to `*out`.
///
/// # Safety
/// `out` must be a writable f64 location.
#[no_mangle]
pub unsafe extern "C" fn pdlab_log_gamma(x: f64, out: *mut f64) -> PdlabStatus {
    guarded(|| {
        let Some(out) = out.as_mut() else {
            return fail(PdlabStatus::NullPointer, "out must be non-null");
        };
        match pdlab::numerics::special::log_gamma(x) {
            Ok(v) => {
                *out = v;
                PdlabStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Log-density of the projected measure μ^(d) at the interior point with
/// free coordinates `x[0..x_len]` (`x_len` must equal the model dimension).
///
/// # Safety
/// `m` must be a live handle, `x` readable for `x_len` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdlab_log_density_mu(
    m: *const PdlabModel,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
) -> PdlabStatus {
    guarded(|| {
        let (Some(m), Some(out)) = (m.as_ref(), out.as_mut()) else {
            return fail(PdlabStatus::NullPointer, "model and out must be non-null");
        };
        let pt = match simplex_point(x, x_len) {
            Ok(pt) => pt,
            Err(status) => return status,
        };
        match log_density_mu(&pt, &m.0) {
            Ok(v) => {
                *out = v;
                PdlabStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Log-density of the Dirichlet(α_1..α_{d+1}) distribution at the interior
/// point with free coordinates `x[0..x_len]` (`x_len` = `alphas_len` − 1).
///
/// # Safety
/// `alphas` and `x` must be readable for their stated lengths, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdlab_log_density_dirichlet(
    alphas: *const f64,
    alphas_len: usize,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
) -> PdlabStatus {
    guarded(|| {
        let Some(out) = out.as_mut() else {
            return fail(PdlabStatus::NullPointer, "out must be non-null");
        };
        let Some(alphas) = slice_arg(alphas, alphas_len) else {
            return fail(PdlabStatus::NullPointer, "alphas must be non-null");
        };
        let dp = match DirichletParams::new(alphas.to_vec()) {
            Ok(dp) => dp,
            Err(e) => return fail_with(&e),
        };
        let pt = match simplex_point(x, x_len) {
            Ok(pt) => pt,
            Err(status) => return status,
        };
        match log_density_dirichlet(&pt, &dp) {
            Ok(v) => {
                *out = v;
                PdlabStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Log-ratio W = log Dirichlet(α) − log μ^(d) at the given point, the
/// perturbation potential tying the comparison measure to the projection
/// (Dirichlet = e^W · μ).
///
/// # Safety
/// Same contracts as `pdlab_log_density_mu` and `pdlab_log_density_dirichlet`.
#[no_mangle]
pub unsafe extern "C" fn pdlab_log_perturbation_w(
    m: *const PdlabModel,
    alphas: *const f64,
    alphas_len: usize,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
) -> PdlabStatus {
    guarded(|| {
        let (Some(m), Some(out)) = (m.as_ref(), out.as_mut()) else {
            return fail(PdlabStatus::NullPointer, "model and out must be non-null");
        };
        let Some(alphas) = slice_arg(alphas, alphas_len) else {
            return fail(PdlabStatus::NullPointer, "alphas must be non-null");
        };
        let dp = match DirichletParams::new(alphas.to_vec()) {
            Ok(dp) => dp,
            Err(e) => return fail_with(&e),
        };
        let pt = match simplex_point(x, x_len) {
            Ok(pt) => pt,
            Err(status) => return status,
        };
        match log_perturbation_w(&pt, &m.0, &dp) {
            Ok(v) => {
                *out = v;
                PdlabStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Localization potential φ(x) = Σ x_i⁻² over all d+1 coordinates, written
/// to `*out`. Infinite on the boundary.
///
/// # Safety
/// `x` must be readable for `x_len` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdlab_phi(x: *const f64, x_len: usize, out: *mut f64) -> PdlabStatus {
    guarded(|| {
        let Some(out) = out.as_mut() else {
            return fail(PdlabStatus::NullPointer, "out must be non-null");
        };
        let pt = match simplex_point(x, x_len) {
            Ok(pt) => pt,
            Err(status) => return status,
        };
        *out = phi(&pt);
        PdlabStatus::Ok
    })
}

/// Minimum of φ over the d-simplex: (d+1)³, attained at the barycenter.
#[no_mangle]
pub extern "C" fn pdlab_phi_min(d: usize) -> f64 {
    guarded_f64(|| pdlab::simplex_measures::phi_min(d))
}

// ---------------------------------------------------------------------------
// Rate exponents and tail-integral limits
// ---------------------------------------------------------------------------

/// Super-Poincaré rate exponent in the localization convention.
#[no_mangle]
pub extern "C" fn pdlab_rate_exponent_localization(theta: f64, d: u32) -> f64 {
    guarded_f64(|| pdlab::inequality_lab::rate_exponent_localization(theta, d))
}

/// Super-Poincaré rate exponent in the perturbation convention.
#[no_mangle]
pub extern "C" fn pdlab_rate_exponent_perturbation(theta: f64, d: u32) -> f64 {
    guarded_f64(|| pdlab::inequality_lab::rate_exponent_perturbation(theta, d))
}

/// Rate exponent as stated in the proof-section variant of the perturbation
/// convention.
#[no_mangle]
pub extern "C" fn pdlab_rate_exponent_perturbation_proof(theta: f64, d: u32) -> f64 {
    guarded_f64(|| pdlab::inequality_lab::rate_exponent_perturbation_proof(theta, d))
}

/// Closed Γ-product reference value for the tail-integral limit.
/// NaN unless θ > 0.
#[no_mangle]
pub extern "C" fn pdlab_counterexample_analytic_limit(theta: f64) -> f64 {
    guarded_f64(|| pdlab::inequality_lab::analytic_limit(theta))
}

/// Dominated-convergence limit of the normalized tail integrals I_n.
/// NaN unless θ > 0.
#[no_mangle]
pub extern "C" fn pdlab_counterexample_integrand_limit(theta: f64) -> f64 {
    guarded_f64(|| pdlab::inequality_lab::integrand_limit(theta))
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draws one Beta(a, b) variate into `*out`.
///
/// # Safety
/// `rng` must be a live handle and `out` a writable f64 location.
#[no_mangle]
pub unsafe extern "C" fn pdlab_sample_beta(
    a: f64,
    b: f64,
    rng: *mut PdlabRng,
    out: *mut f64,
) -> PdlabStatus {
    guarded(|| {
        let (Some(r), Some(out)) = (rng.as_mut(), out.as_mut()) else {
            return fail(PdlabStatus::NullPointer, "rng and out must be non-null");
        };
        match pdlab::numerics::rng::sample_beta(a, b, &mut r.0) {
            Ok(v) => {
                *out = v;
                PdlabStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Samples one truncated GEM(α, θ) stick-breaking weight sequence, stopping
/// once the residual stick mass drops below `trunc_eps`.
///
/// On success, writes the number of weights to `*n_written`, the weights in
/// breaking order to `weights[0..*n_written]`, and the residual mass to
/// `*tail_mass`. If the sequence needs more than `capacity` slots, writes the
/// required count to `*n_written`, leaves `weights` untouched, and returns
/// `PDLAB_STATUS_BUFFER_TOO_SMALL`; the RNG stream has advanced either way,
/// so retry with a larger buffer on a fresh (sub)stream to reproduce a draw.
/// `weights` may be null only when `capacity` is 0.
///
/// # Safety
/// `rng` must be a live handle; `weights` must be writable for `capacity`
/// values (or null with capacity 0); `n_written` and `tail_mass` writable.
#[no_mangle]
pub unsafe extern "C" fn pdlab_sample_gem(
    alpha: f64,
    theta: f64,
    trunc_eps: f64,
    rng: *mut PdlabRng,
    weights: *mut f64,
    capacity: usize,
    n_written: *mut usize,
    tail_mass: *mut f64,
) -> PdlabStatus {
    guarded(|| {
        let (Some(r), Some(n_written), Some(tail_mass)) =
            (rng.as_mut(), n_written.as_mut(), tail_mass.as_mut())
        else {
            return fail(
                PdlabStatus::NullPointer,
                "rng, n_written and tail_mass must be non-null",
            );
        };
        if weights.is_null() && capacity > 0 {
            return fail(
                PdlabStatus::NullPointer,
                "weights must be non-null when capacity > 0",
            );
        }
        let params = match GemParams::new(alpha, theta) {
            Ok(p) => p,
            Err(e) => return fail_with(&e),
        };
        let seq = match pdlab::stick_breaking::sample_gem(&params, trunc_eps, &mut r.0) {
            Ok(s) => s,
            Err(e) => return fail_with(&e),
        };
        *n_written = seq.weights.len();
        if seq.weights.len() > capacity {
            return fail(
                PdlabStatus::BufferTooSmall,
                &format!(
                    "weight buffer holds {capacity}, sequence needs {}",
                    seq.weights.len()
                ),
            );
        }
        std::ptr::copy_nonoverlapping(seq.weights.as_ptr(), weights, seq.weights.len());
        *tail_mass = seq.tail_mass;
        PdlabStatus::Ok
    })
}
